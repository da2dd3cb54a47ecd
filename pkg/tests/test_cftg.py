import random

import pytest
from hypothesis import given

from conftest import seeds
from pervglue.cftg import (CftgContext, CftgObject, check_object, cokernel, cokernel_descend, hom_space,
                           identity_morphism, image_coimage_compare, kernel, kernel_lift, object_from_F,
                           object_from_G, random_morphism, random_object, validate_cftg_morphism,
                           validate_object, zero_object)
from pervglue.fixtures import K_GOOD, L_lambda, strat_disk
from pervglue.linalg import rank
from pervglue.perverse import ModelError, default_test_family
from pervglue.sheaf import identity

X = strat_disk()
CTX = CftgContext(X, K_GOOD, default_test_family(X, 2, 0))


def _flat(phi):
    return [v for m in phi.comp.values() for r in m.tolist() for v in r]


def _composes_to_zero(second_a, second_b):
    def constraint(a, b):
        return _flat(second_a(a)) + _flat(second_b(b))
    return constraint


def test_non_perverse_closed_set_is_refused():
    with pytest.raises(ModelError):
        CftgContext(X, ("s",), CTX.tests)
    ctx = CftgContext(X, ("s",), CTX.tests, require=False)
    assert not ctx.report.verdict


def test_standard_objects():
    A = CTX.perverse(L_lambda(2))
    for o in (object_from_F(CTX, A), object_from_G(CTX, A), zero_object(CTX)):
        assert validate_object(CTX, o) is None


def test_broken_triangle_is_rejected():
    A = CTX.perverse(L_lambda(2))
    o = object_from_F(CTX, A)
    bad = CftgObject(A, o.B, o.u, o.v.scale(2))
    assert validate_object(CTX, bad) is not None
    with pytest.raises(Exception):
        check_object(CTX, bad)


@given(seeds)
def test_random_objects_and_composition(seed):
    rng = random.Random(seed)
    o1, o2, o3 = (random_object(CTX, rng) for _ in range(3))
    for o in (o1, o2, o3):
        assert validate_object(CTX, o) is None
    f, g = random_morphism(CTX, o1, o2, rng), random_morphism(CTX, o2, o3, rng)
    assert validate_cftg_morphism(CTX, f) is None
    assert validate_cftg_morphism(CTX, g @ f) is None
    assert (identity_morphism(o2) @ f).equals(f)


@given(seeds)
def test_zero_object_is_initial_and_terminal(seed):
    o = random_object(CTX, random.Random(seed))
    z = zero_object(CTX)
    assert hom_space(CTX, z, o) == [] and hom_space(CTX, o, z) == []


@given(seeds)
def test_kernel_universal_property(seed):
    rng = random.Random(seed)
    o, o2, T = (random_object(CTX, rng) for _ in range(3))
    m = random_morphism(CTX, o, o2, rng)
    k = kernel(CTX, m)
    assert validate_object(CTX, k.object) is None
    assert (m @ k.mono).is_zero()
    for s in X.S:
        assert rank(k.mono.b.comp[s]) == k.object.B.dims[s]
    cone = _composes_to_zero(lambda a: m.a @ a, lambda b: m.b @ b)
    competing = hom_space(CTX, T, o, cone)
    assert len(competing) == len(hom_space(CTX, T, k.object))
    g = random_morphism(CTX, T, o, rng, cone)
    h = kernel_lift(CTX, k, g)
    assert h is not None and (k.mono @ h).equals(g)


@given(seeds)
def test_cokernel_universal_property(seed):
    rng = random.Random(seed)
    o, o2, T = (random_object(CTX, rng) for _ in range(3))
    m = random_morphism(CTX, o, o2, rng)
    c = cokernel(CTX, m)
    assert validate_object(CTX, c.object) is None
    assert (c.epi @ m).is_zero()
    cocone = _composes_to_zero(lambda a: a @ m.a, lambda b: b @ m.b)
    competing = hom_space(CTX, o2, T, cocone)
    assert len(competing) == len(hom_space(CTX, c.object, T))
    g = random_morphism(CTX, o2, T, rng, cocone)
    h = cokernel_descend(CTX, c, g)
    assert h is not None and (h @ c.epi).equals(g)


@given(seeds)
def test_image_equals_coimage(seed):
    rng = random.Random(seed)
    o, o2 = random_object(CTX, rng), random_object(CTX, rng)
    m = random_morphism(CTX, o, o2, rng)
    ic = image_coimage_compare(CTX, m)
    assert ic.comparison is not None and ic.is_iso


def test_identity_has_zero_kernel_and_cokernel():
    o = object_from_F(CTX, CTX.perverse(L_lambda(-1)))
    m = identity_morphism(o)
    assert kernel(CTX, m).object.B.is_zero()
    assert cokernel(CTX, m).object.A.ls.is_zero()
    assert identity(o.B).is_iso()
