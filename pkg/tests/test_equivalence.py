import random

import pytest
from hypothesis import given, settings

from conftest import seeds
from oracles import relative_dims
from pervglue.cftg import (CftgContext, identity_morphism, object_from_F, object_from_G, random_morphism,
                           random_object, zero_object)
from pervglue.complex import are_homotopic, cohomology_dims, identity_map, single
from pervglue.derived import gamma_closed
from pervglue.equivalence import (functor_C, functor_P, functor_P_on_morphism, open_part_zigzag, roundtrip_CP,
                                  roundtrip_PC)
from pervglue.fixtures import (DISK, IC1, K_GOOD, L_lambda, extension_by_zero, rj_local_system, skyscraper_S,
                               strat_disk)
from pervglue.perverse import PerverseError, default_test_family, is_perverse
from pervglue.sheaf import constant_sheaf, skyscraper

X = strat_disk()
CTX = CftgContext(X, K_GOOD, default_test_family(X, 2, 0))
L_SET = ("b", "c", "d")


def fixtures():
    return {"sky": skyscraper_S(), "IC1": IC1(), "Rj L1": rj_local_system(L_lambda(1)),
            "Rj L2": rj_local_system(L_lambda(2)), "Rj L-1": rj_local_system(L_lambda(-1)),
            "j! L1": extension_by_zero(L_lambda(1)), "Q_X[1]": single(constant_sheaf(DISK), -1)}


def special_objects():
    out = [zero_object(CTX)]
    for lam in (1, 2, -1):
        A = CTX.perverse(L_lambda(lam), f"L{lam}")
        out += [object_from_F(CTX, A), object_from_G(CTX, A)]
    return out


@pytest.mark.parametrize("i", range(7))
def test_P_on_standard_objects(i):
    o = special_objects()[i]
    P = functor_P(CTX, o)
    assert is_perverse(X, P.E).verdict
    assert all(open_part_zigzag(CTX, P).quasi_isos())
    # sections supported on S start in degree -d
    gS = gamma_closed(X.S, P.E).complex
    assert all(k >= -X.d for k in cohomology_dims(gS, "s"))
    assert roundtrip_CP(CTX, o, P).ok


@given(seeds)
@settings(max_examples=15)
def test_P_on_random_objects(seed):
    o = random_object(CTX, random.Random(seed))
    P = functor_P(CTX, o)
    assert all(open_part_zigzag(CTX, P).quasi_isos())
    rt = roundtrip_CP(CTX, o, P)
    assert rt.ok, rt.problem
    pc = roundtrip_PC(CTX, P.E, rt.C)
    assert pc.ok, pc.problem


@pytest.mark.parametrize("name", list(fixtures()))
def test_C_reads_off_stalk_cohomology(name):
    F = fixtures()[name]
    r = functor_C(CTX, F)
    assert r.obj.A.rank == cohomology_dims(F, "c").get(-X.c, 0)
    assert r.obj.B.dims["s"] == cohomology_dims(r.gF.complex, "s").get(-X.d, 0)


@pytest.mark.parametrize("name,sheaf,degree", [
    ("sky", skyscraper(DISK, "s"), 0),
    ("Q_X[1]", constant_sheaf(DISK), -1),
])
def test_B_matches_relative_cohomology(name, sheaf, degree):
    r = functor_C(CTX, single(sheaf, degree))
    Us = DISK.up("s")
    rel = relative_dims(sheaf, Us, [y for y in Us if y in L_SET])
    assert r.obj.B.dims["s"] == rel.get(-X.d - degree, 0)


@pytest.mark.parametrize("name", list(fixtures()))
def test_PC_round_trip_on_fixtures(name):
    rt = roundtrip_PC(CTX, fixtures()[name])
    assert rt.ok, rt.problem
    assert rt.zigzag.all_quasi_isos()


def test_C_refuses_non_perverse_input():
    with pytest.raises(PerverseError):
        functor_C(CTX, single(constant_sheaf(DISK), 0))


@given(seeds)
@settings(max_examples=10)
def test_P_on_morphisms(seed):
    rng = random.Random(seed)
    o1, o2, o3 = (random_object(CTX, rng) for _ in range(3))
    P1, P2, P3 = (functor_P(CTX, o) for o in (o1, o2, o3))
    m1, m2 = random_morphism(CTX, o1, o2, rng), random_morphism(CTX, o2, o3, rng)
    pm1 = functor_P_on_morphism(CTX, m1, P1, P2)
    assert pm1.fill.unique and pm1.fill.difference_dimension == 0 and pm1.agrees_with_fill
    pm2 = functor_P_on_morphism(CTX, m2, P2, P3, certify=False)
    pm21 = functor_P_on_morphism(CTX, m2 @ m1, P1, P3, certify=False)
    assert are_homotopic(pm21.map, pm2.map @ pm1.map)
    pid = functor_P_on_morphism(CTX, identity_morphism(o1), P1, P1, certify=False)
    assert are_homotopic(pid.map, identity_map(P1.E))
