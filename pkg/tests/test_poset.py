from itertools import combinations

import pytest
from hypothesis import given, strategies as st

from conftest import posets
from oracles import strict_chains as brute_chains
from pervglue.fixtures import DISK, P_circ, P_pt, P_seg
from pervglue.poset import (Poset, PosetError, Subspace, all_chains, classify_subset, closed_subsets,
                            strict_chains)


def test_disk_covers_and_order():
    assert set(DISK.covers) == {("a", "c"), ("a", "d"), ("b", "c"), ("b", "d"), ("s", "a"), ("s", "b")}
    assert DISK.lt("s", "d") and not DISK.lt("a", "b")
    assert set(DISK.up("a")) == {"a", "c", "d"}


def test_relation_is_closed_on_load():
    P = Poset(["x", "y", "z"], [("x", "y"), ("y", "z")])
    assert P.lt("x", "z")


@pytest.mark.parametrize("rel", [[("x", "x")], [("x", "y"), ("y", "x")]])
def test_bad_relations(rel):
    with pytest.raises(PosetError):
        Poset(["x", "y"], rel)


def test_duplicate_elements():
    with pytest.raises(PosetError):
        Poset(["x", "x"], [])


def test_closed_subspace_error_names_pair():
    with pytest.raises(PosetError, match="a<c"):
        Subspace(DISK, ["s", "c"], "closed")


@given(posets(), st.data())
def test_complement_swaps_open_and_closed(P, data):
    members = data.draw(st.lists(st.sampled_from(P.elements), unique=True))
    comp = [x for x in P.elements if x not in members]
    assert P.is_up_set(members) == P.is_down_set(comp)
    kind = classify_subset(P, members)
    if kind in ("open", "closed"):
        assert Subspace(P, members, kind).complement().kind == {"open": "closed", "closed": "open"}[kind]


@given(posets())
def test_strict_chains_match_enumeration(P):
    for k in range(len(P) + 1):
        assert sorted(strict_chains(P, None, k)) == sorted(brute_chains(P, P.elements, k))


@given(posets())
def test_no_chains_above_height(P):
    h = P.height()
    assert strict_chains(P, None, h + 1) == []
    assert len(all_chains(P)) <= h + 1


@given(posets(max_size=5))
def test_closed_subsets_are_all_down_sets(P):
    brute = {tuple(P.sort(c)) for k in range(len(P) + 1)
             for c in combinations(P.elements, k) if P.is_down_set(c)}
    assert set(closed_subsets(P)) == brute


def test_order_complex_face_counts():
    # the circle model: 4 vertices, 4 edges, no triangles
    assert [len(c) for c in all_chains(P_circ())] == [4, 4]
    # cone over the circle: the circle's simplices plus their joins with s
    assert [len(c) for c in all_chains(DISK)] == [5, 8, 4]
    assert [len(c) for c in all_chains(P_seg())] == [2, 1]
    assert [len(c) for c in all_chains(P_pt())] == [1]


def test_euler_characteristics():
    def euler(P):
        return sum((-1) ** k * len(c) for k, c in enumerate(all_chains(P)))
    assert euler(P_circ()) == 0
    assert euler(DISK) == 1
