import random

import pytest
from hypothesis import given

from conftest import random_sheaf, random_sheaf_map, seeds
from oracles import stalk_cohomology
from pervglue.fixtures import DISK
from pervglue.gluing import (GluingError, GluingMorphism, GluingTriple, check_naturality, counit_iso,
                             gluing_functor_GF, gluing_on_morphisms, jstar, quasi_inverse_witnesses,
                             random_triple, random_triple_morphism, restriction_functor_RF,
                             restriction_on_morphism, triple_hom_basis)
from pervglue.poset import closed_subsets
from pervglue.sheaf import is_local_system, restrict, validate_morphism, zero_morphism, zero_sheaf

CLOSED = [K for K in closed_subsets(DISK) if K and len(K) < len(DISK)]


@given(seeds)
def test_degree_zero_pushforward_is_sections(seed):
    rng = random.Random(seed)
    K = rng.choice(CLOSED)
    U = tuple(x for x in DISK.elements if x not in K)
    FU = random_sheaf(DISK.sub(U), rng)
    js = jstar(DISK, U, FU)
    for x in DISK:
        local = [y for y in DISK.up(x) if y in U]
        assert js.sheaf.dims[x] == stalk_cohomology(FU, local).get(0, 0)


@given(seeds)
def test_round_trips_on_random_sheaves(seed):
    rng = random.Random(seed)
    K = rng.choice(CLOSED)
    F = random_sheaf(DISK, rng)
    t = restriction_functor_RF(F, K)
    w = quasi_inverse_witnesses(F, t)
    assert w.iso1.is_iso() and validate_morphism(w.iso1) is None
    assert w.iso2.phi_F.is_iso() and w.iso2.phi_U.is_iso()


@given(seeds)
def test_counit_is_natural(seed):
    rng = random.Random(seed)
    K = rng.choice(CLOSED)
    F, G = random_sheaf(DISK, rng), random_sheaf(DISK, rng)
    phi = random_sheaf_map(F, G, rng)
    gF, cF = counit_iso(F, K)
    gG, cG = counit_iso(G, K)
    GRphi = gluing_on_morphisms(restriction_on_morphism(phi, K), gF, gG)
    assert (phi @ cF).equals(cG @ GRphi)


@given(seeds)
def test_random_triples(seed):
    rng = random.Random(seed)
    K = rng.choice(CLOSED)
    t = random_triple(DISK, K, rng, max_rank=2)
    g = gluing_functor_GF(t)
    quasi_inverse_witnesses(g.sheaf, t)
    for x in DISK:
        assert g.sheaf.dims[x] == (t.FF.dims[x] if x in K else t.FU.dims[x])
    # pieces locally constant on each part give a glued sheaf constructible for (K, U)
    assert is_local_system(restrict(g.sheaf, K)) == is_local_system(t.FF)
    assert is_local_system(restrict(g.sheaf, t.opened)) == is_local_system(t.FU)


@given(seeds)
def test_triple_morphisms_are_natural(seed):
    rng = random.Random(seed)
    K = rng.choice(CLOSED)
    t = random_triple(DISK, K, rng, max_rank=2)
    t2 = random_triple(DISK, K, rng, max_rank=2, FU=t.FU if rng.random() < 0.5 else None)
    m = random_triple_morphism(t, t2, rng)
    assert m.check() is None
    assert check_naturality(m) is None


@given(seeds)
def test_gluing_is_functorial(seed):
    rng = random.Random(seed)
    K = rng.choice(CLOSED)
    ts = [random_triple(DISK, K, rng, max_rank=2) for _ in range(3)]
    m1, m2 = random_triple_morphism(ts[0], ts[1], rng), random_triple_morphism(ts[1], ts[2], rng)
    gs = [gluing_functor_GF(t) for t in ts]
    lhs = gluing_on_morphisms(m2.compose(m1), gs[0], gs[2])
    rhs = gluing_on_morphisms(m2, gs[1], gs[2]) @ gluing_on_morphisms(m1, gs[0], gs[1])
    assert lhs.equals(rhs)


def test_extension_by_zero():
    K = ("s",)
    U = tuple(x for x in DISK.elements if x not in K)
    FU = restrict(random_sheaf(DISK, random.Random(2)), U)
    js = jstar(DISK, U, FU)
    FF = zero_sheaf(DISK.sub(K))
    t = GluingTriple(DISK, K, FF, FU, zero_morphism(FF, restrict(js.sheaf, K)))
    g = gluing_functor_GF(t)
    assert g.sheaf.dims["s"] == 0
    assert g.iso_open().is_iso()


def test_triple_hom_space_of_identity_triple_contains_identity():
    t = random_triple(DISK, ("s", "a"), random.Random(4), max_rank=2)
    basis = triple_hom_basis(t, t)
    assert basis
    for m in basis:
        assert m.check() is None


def test_bad_triples_are_rejected():
    rng = random.Random(8)
    t = random_triple(DISK, ("s",), rng, max_rank=2)
    with pytest.raises(GluingError):
        GluingTriple(DISK, ("s",), t.FU, t.FU, t.f)
    with pytest.raises(GluingError):
        restriction_functor_RF(random_sheaf(DISK, rng), ("a",))


def test_non_commuting_square_is_reported():
    rng = random.Random(0)
    for _ in range(50):
        t = random_triple(DISK, ("s",), rng, max_rank=2)
        if t.f.is_zero() or not t.FF.dims["s"]:
            continue
        from pervglue.sheaf import identity
        m = GluingMorphism(t, t, identity(t.FF).scale(2), identity(t.FU))
        assert m.check() is not None
        with pytest.raises(GluingError):
            gluing_on_morphisms(m)
        return
    pytest.fail("no triple with a nonzero glue map was drawn")
