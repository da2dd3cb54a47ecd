"""Command line front end: ``pervglue <command> [options]``.

Exit status is 0 when every check passes, 1 when a mathematical check
fails and 2 for unusable input.  Every command prints a short text summary;
``--json`` prints the full report instead.  With ``--report PATH`` or the
environment variable PERVGLUE_REPORT_DIR the report is also written to disk.
The ``report`` section depends only on the inputs and the seed, while
wall-clock numbers go in a separate ``timing`` section.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import random
import sys
import time
from pathlib import Path

from .perverse import ModelError, PerverseError, PerverseOnX0, default_test_family
from .spacefile import DISK_SPACE, SpaceDoc, SpaceFileError, parse_space_file

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class Run:
    """Collects the stable result and the timing of one command."""

    def __init__(self, command: str, args: argparse.Namespace):
        self.command = command
        self.args = args
        self.inputs: dict = {}
        self.result: dict = {}
        self.timing: dict = {}
        self.lines: list[str] = []
        self.ok = True
        self._t0 = time.perf_counter()

    def say(self, line: str):
        self.lines.append(line)

    def fail(self, line: str):
        self.ok = False
        self.lines.append("FAIL " + line)

    def lap(self, name: str, since: float) -> float:
        now = time.perf_counter()
        self.timing[name] = round(self.timing.get(name, 0.0) + now - since, 6)
        return now

    def document(self) -> dict:
        self.timing["total_seconds"] = round(time.perf_counter() - self._t0, 6)
        report = {"command": self.command, "inputs": self.inputs, "result": self.result,
                  "verdict": "pass" if self.ok else "fail"}
        return {"report": report, "timing": self.timing}


def load_space(arg: str | None) -> tuple[SpaceDoc, str, str]:
    """Returns the parsed document, its source label and its text."""
    if arg in (None, "disk"):
        return parse_space_file(DISK_SPACE), "builtin:disk", DISK_SPACE
    try:
        text = Path(arg).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read space file {arg}: {exc.strerror}") from None
    return parse_space_file(text), arg, text


def resolve_closed(doc: SpaceDoc, spec: str | None) -> tuple[str, ...]:
    if spec is None:
        return next(iter(doc.closed.values()), doc.space.S)
    if spec in doc.closed:
        return doc.closed[spec]
    members = [m.strip() for m in spec.split(",") if m.strip()]
    P = doc.space.space
    for m in members:
        if m not in P:
            raise UsageError(f"--closed: {spec!r} is neither a named closed set nor a list of elements ({m!r} unknown)")
    if not P.is_down_set(members):
        raise UsageError(f"--closed: {members} is not closed under going down")
    return P.sort(members)


def test_family(doc: SpaceDoc, max_rank: int, seed: int) -> list[PerverseOnX0]:
    X = doc.space
    tests = default_test_family(X, max_rank, seed)
    tests += [PerverseOnX0(ls, X.c, f"file {name}") for name, ls in doc.local_systems.items()]
    return tests


def write_report(doc: dict, command: str, path: str | None) -> str | None:
    if path is None:
        folder = os.environ.get("PERVGLUE_REPORT_DIR")
        if not folder:
            return None
        path = str(Path(folder) / f"{command}.json")
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")
    return path


def _dims(H) -> dict:
    return {x: n for x, n in H.dims.items() if n}


def _space_inputs(run: Run, source: str, text: str):
    run.inputs["space"] = source
    run.inputs["space_sha256"] = hashlib.sha256(text.encode()).hexdigest()


def cmd_check_space(run: Run, doc: SpaceDoc) -> None:
    from .poset import classify_subset
    X = doc.space
    P = X.space
    run.result = {"elements": list(P.elements), "covers": [f"{x}<{y}" for x, y in P.covers],
                  "S": list(X.S), "X0": list(X.X0), "d": X.d, "c": X.c,
                  "closed": {name: {"members": list(m), "kind": classify_subset(P, m)} for name, m in doc.closed.items()},
                  "local_systems": {name: max(F.dims.values(), default=0) for name, F in doc.local_systems.items()}}
    run.say(f"poset with {len(P.elements)} elements and {len(P.covers)} covers; S = {list(X.S)}, d = {X.d}, c = {X.c}")
    for name, info in run.result["closed"].items():
        run.say(f"closed set {name} = {info['members']} ({info['kind']})")
    for name, r in run.result["local_systems"].items():
        run.say(f"local system {name}: rank {r}")


def cmd_check_perverse_closed(run: Run, doc: SpaceDoc) -> None:
    from .perverse import is_perverse_closed
    from .poset import closed_subsets
    a = run.args
    run.inputs.update(max_rank=a.max_rank, seed=a.seed)
    tests = test_family(doc, a.max_rank, a.seed)
    P = doc.space.space
    if a.closed == "all":
        candidates = closed_subsets(P)
    else:
        candidates = [resolve_closed(doc, a.closed)]
    run.inputs["closed"] = a.closed or "default"
    out = []
    for K in candidates:
        rep = is_perverse_closed(doc.space, K, tests)
        out.append(rep.to_json())
        if rep.verdict:
            run.say(f"{list(K)}: perverse closed (no counterexample among {len(tests)} test systems)")
        else:
            w = rep.witnesses[0]
            run.say(f"{list(K)}: not perverse closed; {w.functor} of '{w.label}' in degree {w.degree} has dims {dict(w.dims)}")
    run.result = {"candidates": out}
    if a.closed != "all" and not out[0]["verdict"] == "pass":
        run.ok = False


def cmd_describe_fgt(run: Run, doc: SpaceDoc) -> None:
    from .cftg import CftgContext
    from .linalg import rank
    a = run.args
    K = resolve_closed(doc, a.closed)
    run.inputs.update(closed=list(K), max_rank=a.max_rank, seed=a.seed)
    ctx = CftgContext(doc.space, K, test_family(doc, a.max_rank, a.seed), require=False)
    if not ctx.report.verdict:
        run.result = {"perverse_closed": ctx.report.to_json()}
        run.fail(f"{list(K)} is not a perverse closed set; F, G, T are not defined")
        return
    rows = []
    for A in ctx.tests:
        F, G, T = ctx.F(A), ctx.G(A), ctx.T(A)
        ranks = {x: rank(T.comp[x]) for x in doc.space.S}
        rows.append({"test": A.label, "rank_A": A.rank, "dim_F": _dims(F), "dim_G": _dims(G), "rank_T": ranks})
        run.say(f"{A.label}: F {_dims(F)}, G {_dims(G)}, rank T {ranks}")
    run.result = {"closed": list(K), "functors": rows}


def build_complex(doc: SpaceDoc, spec: str):
    from .perverse import constant_on_S, extension_by_zero, intermediate_extension, pushforward_complex
    X = doc.space
    kind, _, name = spec.partition(":")
    if kind in ("sky", "const"):
        try:
            return constant_on_S(X, int(name or 1))
        except ValueError:
            raise UsageError(f"--complex: rank must be an integer, got {name!r}") from None
    builders = {"rj": pushforward_complex, "ic": intermediate_extension, "shriek": extension_by_zero}
    if kind not in builders:
        raise UsageError(f"--complex: unknown kind {kind!r} (use sky[:RANK], rj:NAME, ic:NAME, shriek:NAME)")
    if name not in doc.local_systems:
        raise UsageError(f"--complex: no local system named {name!r} in the space file")
    return builders[kind](X, doc.local_systems[name])


def cmd_perverse_check(run: Run, doc: SpaceDoc) -> None:
    from .perverse import is_perverse
    spec = run.args.complex
    run.inputs["complex"] = spec
    C = build_complex(doc, spec)
    rep = is_perverse(doc.space, C)
    run.result = {"perverse": rep.verdict,
                  "failures": [{"condition": c, "degree": k, "point": x, "dim": n} for c, k, x, n in rep.failures]}
    if rep.verdict:
        run.say(f"{spec}: perverse")
    for c, k, x, n in rep.failures:
        run.fail(f"{spec}: {c} fails in degree {k} at {x} (dim {n})")


def cmd_glue(run: Run, doc: SpaceDoc) -> None:
    from .gluing import (GluingError, check_naturality, gluing_functor_GF, quasi_inverse_witnesses,
                         random_triple, random_triple_morphism)
    a = run.args
    K = resolve_closed(doc, a.closed) if a.closed else doc.space.S
    run.inputs.update(closed=list(K), trials=a.trials, seed=a.seed, max_rank=a.max_rank)
    rng = random.Random(a.seed)
    P = doc.space.space
    rows = []
    for i in range(a.trials):
        t = random_triple(P, K, rng, a.max_rank)
        share = i % 2 == 1
        t2 = random_triple(P, K, rng, a.max_rank, FF=t.FF if share else None, FU=t.FU if share else None)
        problem = None
        try:
            g = gluing_functor_GF(t)
            quasi_inverse_witnesses(g.sheaf, t)
            m = random_triple_morphism(t, t2, rng)
            problem = m.check() or check_naturality(m)
        except GluingError as exc:
            problem = str(exc)
        rows.append({"trial": i, "dims_closed": _dims(t.FF), "dims_open": _dims(t.FU),
                     "glued": _dims(g.sheaf) if problem is None else None, "ok": problem is None})
        if problem:
            run.fail(f"trial {i}: {problem}")
    run.result = {"trials": rows}
    run.say(f"{sum(r['ok'] for r in rows)}/{len(rows)} random triples glue, round-trip and commute with morphisms")


def _fixture_complexes(doc: SpaceDoc) -> list[tuple[str, object]]:
    out = [("sky", build_complex(doc, "sky"))]
    for name in doc.local_systems:
        for kind in ("rj", "ic", "shriek"):
            out.append((f"{kind}:{name}", build_complex(doc, f"{kind}:{name}")))
    return out


def cmd_roundtrip(run: Run, doc: SpaceDoc) -> None:
    from .cftg import CftgContext, random_object
    from .complex import cohomology_dims
    from .equivalence import TheoremViolation, functor_P, roundtrip_CP, roundtrip_PC
    from .perverse import is_perverse
    a = run.args
    K = resolve_closed(doc, a.closed)
    run.inputs.update(closed=list(K), trials=a.trials, seed=a.seed, max_rank=a.max_rank)
    ctx = CftgContext(doc.space, K, test_family(doc, a.max_rank, a.seed), require=False)
    if not ctx.report.verdict:
        run.result = {"perverse_closed": ctx.report.to_json()}
        run.fail(f"{list(K)} is not a perverse closed set")
        return
    rng = random.Random(a.seed)
    objects = []
    for i in range(a.trials):
        o = random_object(ctx, rng)
        row = {"trial": i, "A": o.A.label, "dim_B": _dims(o.B)}
        t0 = time.perf_counter()
        try:
            P = functor_P(ctx, o)
            row["P_stalk_dims"] = {x: {str(k): n for k, n in sorted(cohomology_dims(P.E, x).items())} for x in P.E.space}
            cp = roundtrip_CP(ctx, o, P)
            row["CP"] = cp.ok
            t0 = run.lap("CP_seconds", t0)
            pc = roundtrip_PC(ctx, P.E)
            row["PC"] = pc.ok
            run.lap("PC_seconds", t0)
            problem = cp.problem or pc.problem
        except (TheoremViolation, ModelError) as exc:
            problem = str(exc)
        row["ok"] = problem is None
        if problem:
            run.fail(f"trial {i}: {problem}")
        objects.append(row)
    fixtures = []
    for label, C in _fixture_complexes(doc):
        if not is_perverse(doc.space, C).verdict:
            fixtures.append({"complex": label, "perverse": False})
            continue
        try:
            pc = roundtrip_PC(ctx, C)
            problem = pc.problem
        except (TheoremViolation, ModelError) as exc:
            problem = str(exc)
        fixtures.append({"complex": label, "perverse": True, "PC": problem is None})
        if problem:
            run.fail(f"{label}: {problem}")
    run.result = {"closed": list(K), "objects": objects, "fixtures": fixtures}
    run.say(f"{sum(r['ok'] for r in objects)}/{len(objects)} random objects: P(o) perverse, C(P(o)) ≅ o, P(C(P(o))) ≃ P(o)")
    checked = [f for f in fixtures if f["perverse"]]
    run.say(f"{sum(f['PC'] for f in checked)}/{len(checked)} perverse fixture complexes: P(C(F)) ≃ F")


def cmd_selftest(run: Run, doc: SpaceDoc) -> None:
    """Fast checks with known answers on the built-in disk."""
    from .fixtures import L_lambda
    from .linalg import Matrix, rank
    from .cftg import CftgContext
    from .perverse import is_perverse_closed
    X = doc.space
    tests = test_family(doc, 2, 0)
    checks = {}
    checks["good closed set passes"] = is_perverse_closed(X, ("s", "a"), tests).verdict
    checks["S alone fails"] = not is_perverse_closed(X, ("s",), tests).verdict
    checks["whole space fails"] = not is_perverse_closed(X, tuple(X.space.elements), tests).verdict
    ctx = CftgContext(X, ("s", "a"), tests)
    for lam in (1, 2, -1):
        A = ctx.perverse(L_lambda(lam), f"L{lam}")
        expect = rank(Matrix.from_rows([[lam]]) - Matrix.identity(1))
        checks[f"rank T = rank(M - I) for holonomy {lam}"] = rank(ctx.T(A).comp["s"]) == expect
    for name, ok in checks.items():
        (run.say if ok else run.fail)(f"{name}: {'ok' if ok else 'wrong'}")
    run.result = {"checks": checks}


COMMANDS = {
    "check-space": (cmd_check_space, "parse a space file and describe it"),
    "check-perverse-closed": (cmd_check_perverse_closed, "decide whether closed sets are perverse closed"),
    "describe-fgt": (cmd_describe_fgt, "dimensions of F(A), G(A) and ranks of T over the test family"),
    "glue": (cmd_glue, "random gluing triples: round trips and naturality"),
    "perverse-check": (cmd_perverse_check, "test one complex for perversity"),
    "roundtrip": (cmd_roundtrip, "random objects through P and C, and back"),
    "selftest": (cmd_selftest, "quick checks with known answers on the built-in disk"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--space", default=None, help="space file, or 'disk' for the built-in example (default)")
    common.add_argument("--json", action="store_true", help="print the full JSON report")
    common.add_argument("--report", default=None, help="write the JSON report here")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--max-rank", type=int, default=2, dest="max_rank")

    parser = argparse.ArgumentParser(prog="pervglue", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_) in COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=help_)
        if name in ("check-perverse-closed", "describe-fgt", "glue", "roundtrip"):
            p.add_argument("--closed", default=None,
                           help="name from [closed] or comma-separated members" +
                                ("; 'all' tries every closed subset" if name == "check-perverse-closed" else ""))
        if name in ("glue", "roundtrip"):
            p.add_argument("--trials", type=int, default=10)
        if name == "perverse-check":
            p.add_argument("--complex", required=True,
                           help="sky[:RANK], rj:NAME, ic:NAME or shriek:NAME (NAME from the space file)")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    run = Run(args.command, args)
    try:
        if args.max_rank < 1:
            raise UsageError("--max-rank must be at least 1")
        if getattr(args, "trials", 1) < 0:
            raise UsageError("--trials must be non-negative")
        t0 = time.perf_counter()
        doc, source, text = load_space(args.space)
        _space_inputs(run, source, text)
        run.lap("load_seconds", t0)
        COMMANDS[args.command][0](run, doc)
    except (UsageError, SpaceFileError, PerverseError) as exc:
        print(f"pervglue {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ModelError as exc:
        run.fail(str(exc))
    doc_out = run.document()
    path = write_report(doc_out, args.command, args.report)
    if args.json:
        print(json.dumps(doc_out, sort_keys=True, indent=2))
    else:
        print("\n".join(run.lines))
        print(f"verdict: {'pass' if run.ok else 'fail'}" + (f" (report: {path})" if path else ""))
    return EXIT_OK if run.ok else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
