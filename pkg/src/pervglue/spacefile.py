"""Reading and writing stratified-space files.

The format is INI-style::

    [poset]
    elements = s, a, b, c, d
    relations = a<c, a<d, b<c, b<d, s<a, s<b

    [strata]
    S = s
    d = 0
    c = 1

    [closed]
    good = s, a

    [local_system L2]
    rank = 1
    b<d = [["2"]]

Relations are transitively closed on load.  A local system lives on X0;
covers that are not listed carry the identity.  Matrices are JSON arrays of
rational strings.
"""
from __future__ import annotations

import configparser
import json
from dataclasses import dataclass, field

from .linalg import Matrix
from .perverse import PerverseError, StratifiedSpace
from .poset import Poset, PosetError
from .sheaf import Sheaf, validate_sheaf, is_local_system


class SpaceFileError(ValueError):
    pass


@dataclass
class SpaceDoc:
    space: StratifiedSpace
    closed: dict = field(default_factory=dict)
    local_systems: dict = field(default_factory=dict)


def _names(value: str) -> list[str]:
    return [v.strip() for v in value.replace("\n", ",").split(",") if v.strip()]


def _pair(text: str, where: str) -> tuple[str, str]:
    if text.count("<") != 1:
        raise SpaceFileError(f"{where}: expected a relation 'x<y', got {text!r}")
    x, y = (p.strip() for p in text.split("<"))
    return x, y


def _int(sec, key: str, where: str, default=None) -> int:
    if key not in sec:
        if default is None:
            raise SpaceFileError(f"{where}: missing '{key}'")
        return default
    try:
        return int(sec[key])
    except ValueError:
        raise SpaceFileError(f"{where}: '{key}' must be an integer, got {sec[key]!r}") from None


def _check_members(names, P: Poset, where: str):
    for n in names:
        if n not in P:
            raise SpaceFileError(f"{where}: unknown element {n!r}")


def parse_space_file(text: str) -> SpaceDoc:
    cp = configparser.ConfigParser(delimiters=("=",), interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise SpaceFileError(f"syntax error: {exc}") from None
    if "poset" not in cp:
        raise SpaceFileError("missing [poset] section")
    sec = cp["poset"]
    elements = _names(sec.get("elements", ""))
    if not elements:
        raise SpaceFileError("[poset] elements: empty")
    rel = [_pair(r, "[poset] relations") for r in _names(sec.get("relations", ""))]
    for x, y in rel:
        if x not in elements or y not in elements:
            raise SpaceFileError(f"[poset] relations: {x}<{y} names an undeclared element")
    try:
        P = Poset(elements, rel)
    except PosetError as exc:
        raise SpaceFileError(f"[poset] relations: {exc}") from None
    if "strata" not in cp:
        raise SpaceFileError("missing [strata] section")
    st = cp["strata"]
    S = _names(st.get("S", ""))
    _check_members(S, P, "[strata] S")
    for y in S:
        for x in P.down(y):
            if x not in S:
                raise SpaceFileError(f"[strata] S is not closed: {x}<{y} with {y} in S but {x} not")
    X0 = _names(st["X0"]) if "X0" in st else None
    if X0 is not None:
        _check_members(X0, P, "[strata] X0")
    try:
        X = StratifiedSpace(P, S, X0, d=_int(st, "d", "[strata]"), c=_int(st, "c", "[strata]", 1))
    except PerverseError as exc:
        raise SpaceFileError(f"[strata]: {exc}") from None
    doc = SpaceDoc(X)
    if "closed" in cp:
        for name, value in cp["closed"].items():
            members = _names(value)
            _check_members(members, P, f"[closed] {name}")
            doc.closed[name] = P.sort(members)
    for section in cp.sections():
        if section.startswith("local_system"):
            name = section[len("local_system"):].strip()
            if not name:
                raise SpaceFileError(f"[{section}]: local system needs a name")
            doc.local_systems[name] = _local_system(cp[section], X, f"[{section}]")
    return doc


def _local_system(sec, X: StratifiedSpace, where: str) -> Sheaf:
    P = X.X0_poset
    n = _int(sec, "rank", where)
    rest = {c: Matrix.identity(n) for c in P.covers}
    for key, value in sec.items():
        if key == "rank":
            continue
        x, y = _pair(key, where)
        if (x, y) not in rest:
            raise SpaceFileError(f"{where}: {x}<{y} is not a cover of X0")
        try:
            m = Matrix.from_json(json.loads(value), n, n)
        except (ValueError, TypeError) as exc:
            raise SpaceFileError(f"{where} {key}: bad matrix ({exc})") from None
        rest[(x, y)] = m
    F = Sheaf(P, {x: n for x in P}, rest, check=False)
    problem = validate_sheaf(F)
    if problem:
        raise SpaceFileError(f"{where}: {problem}")
    if not is_local_system(F):
        raise SpaceFileError(f"{where}: restriction maps must be invertible")
    return F


def format_space_file(doc: SpaceDoc) -> str:
    X = doc.space
    P = X.space
    lines = ["[poset]", "elements = " + ", ".join(P.elements),
             "relations = " + ", ".join(f"{x}<{y}" for x, y in P.covers), "",
             "[strata]", "S = " + ", ".join(X.S), "X0 = " + ", ".join(X.X0), f"d = {X.d}", f"c = {X.c}", ""]
    if doc.closed:
        lines.append("[closed]")
        lines += [f"{name} = " + ", ".join(m) for name, m in doc.closed.items()]
        lines.append("")
    for name, F in doc.local_systems.items():
        n = max(F.dims.values(), default=0)
        lines += [f"[local_system {name}]", f"rank = {n}"]
        for c, m in F.rest.items():
            if m != Matrix.identity(n):
                lines.append(f"{c[0]}<{c[1]} = " + json.dumps(m.to_json()))
        lines.append("")
    return "\n".join(lines)


DISK_SPACE = """\
[poset]
elements = s, a, b, c, d
relations = a<c, a<d, b<c, b<d, s<a, s<b

[strata]
S = s
d = 0
c = 1

[closed]
good = s, a

[local_system L1]
rank = 1

[local_system L2]
rank = 1
b<d = [["2"]]

[local_system Lm1]
rank = 1
b<d = [["-1"]]

[local_system J2]
rank = 2
b<d = [["1", "1"], ["0", "1"]]
"""
