"""Exact computations with sheaves on finite posets: gluing along a closed set,
perverse sheaves on a two-stratum space and their description by linear data."""
from .linalg import Matrix
from .poset import Poset, closed_subsets
from .sheaf import Sheaf, SheafMorphism
from .complex import ChainMap, SheafComplex, cone, cohomology_dims, fill_in, is_quasi_iso
from .derived import derived_pushforward_open, gamma_closed, gamma_open
from .gluing import GluingMorphism, GluingTriple, gluing_functor_GF, restriction_functor_RF
from .perverse import (ModelError, PerverseError, PerverseOnX0, StratifiedSpace, default_test_family,
                       is_perverse, is_perverse_closed)
from .cftg import CftgContext, CftgMorphism, CftgObject, cokernel, kernel
from .equivalence import functor_C, functor_P, functor_P_on_morphism, roundtrip_CP, roundtrip_PC
from .spacefile import SpaceDoc, parse_space_file

__version__ = "0.1.0"

__all__ = [
    "Matrix",
    "Poset",
    "closed_subsets",
    "Sheaf",
    "SheafMorphism",
    "ChainMap",
    "SheafComplex",
    "cone",
    "cohomology_dims",
    "fill_in",
    "is_quasi_iso",
    "derived_pushforward_open",
    "gamma_closed",
    "gamma_open",
    "GluingMorphism",
    "GluingTriple",
    "gluing_functor_GF",
    "restriction_functor_RF",
    "ModelError",
    "PerverseError",
    "PerverseOnX0",
    "StratifiedSpace",
    "default_test_family",
    "is_perverse",
    "is_perverse_closed",
    "CftgContext",
    "CftgMorphism",
    "CftgObject",
    "cokernel",
    "kernel",
    "functor_C",
    "functor_P",
    "functor_P_on_morphism",
    "roundtrip_CP",
    "roundtrip_PC",
    "SpaceDoc",
    "parse_space_file",
]
