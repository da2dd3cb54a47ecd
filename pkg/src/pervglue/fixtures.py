"""Standard desk-scale models.

``P_circ`` is the minimal finite model of the circle (two minima ``a, b``
below two maxima ``c, d``); ``P_disk`` adds a bottom ``s`` whose minimal
open neighbourhood is the whole space, so ``P_disk`` models a disk with
centre ``s`` and punctured part ``P_circ``.
"""
from __future__ import annotations

from .complex import SheafComplex, single, truncate_le
from .derived import derived_pushforward_open
from .linalg import Matrix
from .poset import Poset
from .sheaf import Sheaf

CIRCLE_RELATIONS = [("a", "c"), ("a", "d"), ("b", "c"), ("b", "d")]


def P_pt() -> Poset:
    return Poset(["s"], [])


def P_seg() -> Poset:
    return Poset(["x", "y"], [("x", "y")])


def P_circ() -> Poset:
    return Poset(["a", "b", "c", "d"], CIRCLE_RELATIONS)


def P_disk() -> Poset:
    return Poset(["s", "a", "b", "c", "d"], CIRCLE_RELATIONS + [("s", y) for y in "abcd"])


DISK = P_disk()
K_GOOD = ("s", "a")
S_DISK = ("s",)
X0_DISK = ("a", "b", "c", "d")


def holonomy_local_system(space: Poset, M) -> Sheaf:
    """Local system on a circle model with holonomy M on b<d, identity elsewhere."""
    M = M if isinstance(M, Matrix) else Matrix.from_rows(M)
    n = M.rows
    rest = {c: Matrix.identity(n) for c in space.covers}
    rest[("b", "d")] = M
    return Sheaf(space, {x: n for x in space}, rest, check=False)


def L_lambda(lam=1, space: Poset | None = None) -> Sheaf:
    space = space if space is not None else DISK.sub(X0_DISK)
    return holonomy_local_system(space, [[lam]])


def strat_disk():
    from .perverse import StratifiedSpace
    return StratifiedSpace(DISK, S_DISK, X0_DISK, d=0, c=1)


def rj_local_system(ls: Sheaf, c: int = 1) -> SheafComplex:
    """Rj_*(ls[c]) on P_disk."""
    return derived_pushforward_open(DISK, X0_DISK, single(ls, -c)).complex


def IC1() -> SheafComplex:
    return truncate_le(rj_local_system(L_lambda(1)), -1).complex


def skyscraper_S() -> SheafComplex:
    return single(Sheaf(DISK, {"s": 1}, {}, check=False), 0)


def extension_by_zero(ls: Sheaf, c: int = 1) -> SheafComplex:
    """j_!(ls[c]) on P_disk: stalk 0 at s."""
    dims = {x: ls.dims[x] for x in X0_DISK}
    rest = {(x, y): ls.rest[(x, y)] for x, y in ls.space.covers}
    return single(Sheaf(DISK, dims, rest, check=False), -c)
