"""Command-line interface to tljmod: fair graphs, fundamental solutions and their checks.

Exit codes: 0 when the check passes or the construction succeeds, 1 when the
inputs were read but a check or a precondition failed, 2 when the inputs
could not be used at all (unreadable file, schema violation, unknown family,
base-graph mismatch, bad arguments).  Every invocation prints one JSON
report document on standard output and a one-line summary on standard error.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
from typing import Any, Callable, Sequence

import numpy as np

from . import io
from .classify import (
    check_mw_type,
    fair_graph_isomorphic,
    find_inconsistent_cycle,
    graph_from_solution,
    random_solution,
    solution_from_graph,
    solutions_equivalent,
    verify_equivalence_witness,
)
from .diagrams import validate_diagram
from .errors import GammaMismatchError, PreconditionError, UnsupportedError
from .fair import (
    FairGraph,
    balance_obstructions,
    check_fair,
    check_structure,
    find_balanced_involution,
    generate_family,
    lambda1,
)
from .graph import BiGraph, gammas_equal, is_connected, standard_gamma, validate_bigraph
from .report import ValidationReport, Violation, make_report
from .solution import (
    BlockOperator,
    block_operator_to_dict,
    check_zigzag,
    conjugate_solution,
    evaluate_functor,
    random_unitary_family,
)


class UsageError(Exception):
    pass


class InputError(Exception):
    def __init__(self, code: str, message: str, ids: Sequence[str] = ()):
        super().__init__(message)
        self.code = code
        self.ids = tuple(ids)


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # pragma: no cover - exercised via run_cli
        raise UsageError(message)


class Outcome:
    """What a subcommand hands back: a report and an exit code."""

    def __init__(self, report: ValidationReport, code: int | None = None, extra: dict | None = None):
        self.report = report
        self.code = (0 if report.ok else 1) if code is None else code
        self.extra = extra or {}


# -- loading -----------------------------------------------------------------------

def _load(path: str, kind: str) -> io.Document:
    try:
        return io.load_document(path, kind)
    except io.DocumentError as exc:
        raise InputError(exc.code, f"{path}: {exc.path}: {exc.message}") from None


def _base(path: str) -> str:
    return os.path.dirname(os.path.abspath(path))


def _gamma(path: str) -> BiGraph:
    return io.decode_gamma(_load(path, "gamma").payload)


def _fair_graph(path: str, gamma: BiGraph | None = None) -> FairGraph:
    d = _load(path, "fair_graph")
    try:
        return io.decode_fair_graph(d.payload, _base(path), gamma)
    except io.DocumentError as exc:
        raise InputError(exc.code, f"{path}: {exc.message}") from None


def _solution(path: str):
    d = _load(path, "solution")
    try:
        return io.decode_solution(d.payload, _base(path))
    except io.DocumentError as exc:
        raise InputError(exc.code, f"{path}: {exc.path}: {exc.message}") from None


def _require_valid_gamma(g: BiGraph, what: str) -> None:
    rep = validate_bigraph(g)
    if not rep.ok:
        raise InputError("INVALID_GAMMA", f"{what}: base graph is invalid: {sorted(rep.codes())}")


def _require_structure(l: FairGraph, what: str) -> ValidationReport | None:
    _require_valid_gamma(l.gamma, what)
    rep = check_structure(l)
    return None if rep.ok else rep


def _write(path: str, document: io.Document) -> None:
    try:
        io.write_document(path, document)
    except OSError as exc:
        raise InputError("IO_ERROR", f"{path}: {exc.strerror or exc}") from None


def _seed(default: int) -> int:
    env = os.environ.get("TLJ_SEED")
    if env is None:
        return default
    try:
        return int(env)
    except ValueError:
        raise InputError("BAD_SEED", f"TLJ_SEED must be an integer, got {env!r}") from None


def _fail(code: str, message: str, ids: Sequence[str] = (), data: dict | None = None) -> ValidationReport:
    return make_report([Violation(code, tuple(ids), message)], data=data)


# -- subcommands -------------------------------------------------------------------------

def cmd_validate(a: argparse.Namespace) -> Outcome:
    g = _gamma(a.gamma)
    rep = validate_bigraph(g)
    data = {"vertices": len(g.vertices), "edges": len(g.edges)}
    if rep.ok:
        data["connected"] = is_connected(g)
    return Outcome(make_report(rep.violations, rep.warnings, data))


def cmd_fair(a: argparse.Namespace) -> Outcome:
    g = _gamma(a.gamma) if a.gamma else None
    l = _fair_graph(a.fair_graph, g)
    bad = _require_structure(l, a.fair_graph)
    if bad is not None:
        return Outcome(bad)
    return Outcome(check_fair(l, a.tol))


def _fair_or_report(l: FairGraph, tol: float, what: str) -> ValidationReport | None:
    bad = _require_structure(l, what)
    if bad is not None:
        return bad
    rep = check_fair(l, tol)
    return None if rep.ok else rep


def cmd_balance(a: argparse.Namespace) -> Outcome:
    l = _fair_graph(a.fair_graph)
    bad = _fair_or_report(l, a.tol, a.fair_graph)
    if bad is not None:
        return Outcome(bad)
    inv = find_balanced_involution(l, a.tol)
    if inv is None:
        return Outcome(make_report(balance_obstructions(l, a.tol)))
    return Outcome(make_report(data={"involution": inv.pairing}))


def cmd_build_solution(a: argparse.Namespace) -> Outcome:
    l = _fair_graph(a.fair_graph)
    bad = _fair_or_report(l, a.tol, a.fair_graph)
    if bad is not None:
        return Outcome(bad)
    if find_balanced_involution(l, a.tol) is None:
        return Outcome(make_report(balance_obstructions(l, a.tol)))
    s = solution_from_graph(l, a.tol)
    z = check_zigzag(s, a.tol)
    _write(a.output, io.doc("solution", io.encode_solution(s)))
    return Outcome(make_report(z.violations, data={"output": a.output, "zigzag_worst": z.data["worst"]}))


def cmd_classify(a: argparse.Namespace) -> Outcome:
    s = _solution(a.solution)
    _require_valid_gamma(s.gamma, a.solution)
    z = check_zigzag(s, a.tol)
    if not z.ok:
        return Outcome(z)
    l = graph_from_solution(s, a.tol)
    _write(a.output, io.doc("fair_graph", io.encode_fair_graph(l)))
    return Outcome(make_report(data={
        "output": a.output, "vertices": len(l.vertices), "edges": len(l.edges),
        "mw_type": check_mw_type(l, 10 * a.tol) is not None,
    }))


def cmd_roundtrip(a: argparse.Namespace) -> Outcome:
    l = _fair_graph(a.fair_graph)
    bad = _fair_or_report(l, a.tol, a.fair_graph)
    if bad is not None:
        return Outcome(bad)
    if find_balanced_involution(l, a.tol) is None:
        return Outcome(make_report(balance_obstructions(l, a.tol)))
    s = solution_from_graph(l, a.tol)
    back = graph_from_solution(s, a.tol)
    wit = fair_graph_isomorphic(back, l, a.tol)
    data = {"zigzag_worst": check_zigzag(s, a.tol).data["worst"]}
    if wit is None:
        return Outcome(_fail("ROUNDTRIP_MISMATCH", "recovered graph is not isomorphic to the input", data=data))
    return Outcome(make_report(data={**data, "witness": {"type": "iso", **wit.to_dict()}}))


def cmd_iso(a: argparse.Namespace) -> Outcome:
    l1, l2 = _fair_graph(a.a), _fair_graph(a.b)
    for l, p in ((l1, a.a), (l2, a.b)):
        bad = _require_structure(l, p)
        if bad is not None:
            return Outcome(bad)
    if not gammas_equal(l1.gamma, l2.gamma):
        raise InputError("GAMMA_MISMATCH", "the two fair graphs live over different base graphs")
    wit = fair_graph_isomorphic(l1, l2, a.tol)
    if wit is None:
        return Outcome(_fail("NOT_ISOMORPHIC", "no isomorphism respects projections and weights"))
    return Outcome(make_report(data={"witness": {"type": "iso", **wit.to_dict()}}))


def cmd_mw(a: argparse.Namespace) -> Outcome:
    l = _fair_graph(a.fair_graph)
    bad = _fair_or_report(l, a.tol, a.fair_graph)
    if bad is not None:
        return Outcome(bad)
    if find_balanced_involution(l, a.tol) is None:
        return Outcome(make_report(balance_obstructions(l, a.tol)))
    d = check_mw_type(l, a.tol)
    if d is None:
        cyc = find_inconsistent_cycle(l, a.tol)
        return Outcome(_fail(
            "NOT_MW_TYPE", f"cycle weight product {cyc.product!r} differs from 1", cyc.edges,
            data={"witness": {"type": "cycle", "edges": list(cyc.edges), "signs": list(cyc.signs), "product": cyc.product}},
        ))
    return Outcome(make_report(data={"witness": {"type": "dimension", "d": d.d}}))


def cmd_eval(a: argparse.Namespace) -> Outcome:
    s = _solution(a.solution)
    _require_valid_gamma(s.gamma, a.solution)
    d = _load(a.morphism, "morphism2")
    try:
        stack = io.decode_morphism(d.payload, _base(a.morphism))
    except io.DocumentError as exc:
        raise InputError(exc.code, f"{a.morphism}: {exc.path}: {exc.message}") from None
    if not gammas_equal(stack[0].gamma, s.gamma):
        raise InputError("GAMMA_MISMATCH", "solution and morphism live over different base graphs")
    problems = []
    for i, m in enumerate(stack):
        for j, (dgm, _) in enumerate(m):
            rep = validate_diagram(dgm)
            problems += [Violation(v.code, (f"stack[{i}].terms[{j}]",) + v.ids, v.message) for v in rep.violations]
    for i in range(len(stack) - 1):
        if stack[i].top.edges != stack[i + 1].bottom.edges:
            problems.append(Violation("NOT_COMPOSABLE", (f"stack[{i}]",), "top of a layer must equal the bottom of the next"))
    if problems:
        return Outcome(make_report(problems))
    z = check_zigzag(s, a.tol)
    if not z.ok:
        return Outcome(z)
    op: BlockOperator | None = None
    for m in stack:
        f = evaluate_functor(s, m)
        op = f if op is None else f @ op
    report = make_report(data={"operator": block_operator_to_dict(op)})
    if a.output:
        _write(a.output, io.doc("report", io.encode_report("eval", report)))
    return Outcome(report)


def cmd_equiv(a: argparse.Namespace) -> Outcome:
    s, t = _solution(a.a), _solution(a.b)
    for x, p in ((s, a.a), (t, a.b)):
        _require_valid_gamma(x.gamma, p)
    if not gammas_equal(s.gamma, t.gamma):
        raise InputError("GAMMA_MISMATCH", "the two solutions live over different base graphs")
    for x in (s, t):
        z = check_zigzag(x, a.tol)
        if not z.ok:
            return Outcome(z)
    data: dict[str, Any] = {}
    violations = []
    eq = solutions_equivalent(s, t, a.tol)
    data["equivalent"] = eq
    if not eq:
        violations.append(Violation("NOT_EQUIVALENT", (), "induced fair graphs are not isomorphic"))
    if a.witness:
        w = _load(a.witness, "witness").payload
        if w.get("type") != "unitary":
            raise InputError("WRONG_WITNESS", "equiv --witness expects a unitary witness")
        u, bij = io.decode_unitary_witness(w)
        try:
            ok = verify_equivalence_witness(s, t, u, bij, a.tol)
        except ValueError as exc:
            raise InputError("WITNESS_SHAPE", str(exc)) from None
        data["witness_verified"] = ok
        if not ok:
            violations.append(Violation("WITNESS_REJECTED", (), "the unitaries do not conjugate one solution into the other"))
    if a.fuzz:
        rng = np.random.default_rng(_seed(a.seed))
        fails = sum(
            not solutions_equivalent(s, conjugate_solution(s, random_unitary_family(s, rng)), a.tol)
            for _ in range(a.fuzz)
        )
        data["fuzz"] = {"trials": a.fuzz, "failures": fails}
        if fails:
            violations.append(Violation("FUZZ_FAILURE", (), f"{fails} random conjugates judged inequivalent"))
    return Outcome(make_report(violations, data=data))


def _params(items: Sequence[str]) -> dict[str, str]:
    out = {}
    for it in items:
        key, sep, value = it.partition("=")
        if not sep or not key:
            raise UsageError(f"--params entries must look like key=value, got {it!r}")
        out[key] = value
    return out


def _num(p: dict[str, str], key: str, cast: Callable, default: Any = None) -> Any:
    if key not in p:
        if default is None:
            raise UsageError(f"family needs parameter {key}=...")
        return default
    try:
        return cast(p[key])
    except ValueError:
        raise UsageError(f"parameter {key} must be a {cast.__name__}, got {p[key]!r}") from None


def cmd_gen(a: argparse.Namespace) -> Outcome:
    p = _params(a.params or [])
    g = _gamma(a.gamma) if a.gamma else None
    fam = a.family
    try:
        if fam == "a-path":
            n = _num(p, "n", int)
            g = g or standard_gamma("unoriented", [2 * math.cos(math.pi / (n + 1))])
            out = generate_family("a-path", g, n=n)
        elif fam == "two-vertex-reciprocal":
            x = _num(p, "a", float)
            g = g or standard_gamma("oriented", [x + 1 / x])
            out = generate_family("two-vertex-reciprocal", g, a=x)
        elif fam in ("cover", "relabel"):
            if "base" not in p:
                raise UsageError(f"{fam} needs parameter base=<fair graph file>")
            base = _fair_graph(p["base"])
            if fam == "cover":
                out = generate_family("cover", base.gamma, base=base, sheets=_num(p, "sheets", int, 2))
            else:
                out = generate_family("relabel", base.gamma, base=base, seed=_seed(_num(p, "seed", int, 0)))
        elif fam == "lambda1":
            out = lambda1()
        elif fam == "random-solution":
            if g is None:
                raise UsageError("random-solution needs --gamma")
            s = random_solution(g, _seed(_num(p, "seed", int, 0)), _num(p, "sheets", int, 1))
            _write(a.output, io.doc("solution", io.encode_solution(s)))
            return Outcome(make_report(data={"output": a.output, "zigzag_worst": check_zigzag(s, 1e-10).data["worst"]}))
        else:
            raise UsageError(f"unknown family {fam!r}")
    except (UnsupportedError, PreconditionError) as exc:
        raise InputError("UNSUPPORTED", str(exc)) from None
    _write(a.output, io.doc("fair_graph", io.encode_fair_graph(out)))
    return Outcome(make_report(data={"output": a.output, "vertices": len(out.vertices), "edges": len(out.edges)}))


FAMILIES = ("a-path", "two-vertex-reciprocal", "cover", "relabel", "lambda1", "random-solution")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tljmod", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name: str, fn: Callable, help: str) -> argparse.ArgumentParser:
        sp = sub.add_parser(name, help=help)
        sp.set_defaults(fn=fn)
        sp.add_argument("--tol", type=float, default=1e-9, help="tolerance for every numerical comparison")
        return sp

    sp = add("validate", cmd_validate, "validate a base graph")
    sp.add_argument("--gamma", required=True)
    sp = add("fair", cmd_fair, "check fairness of a fair graph")
    sp.add_argument("--gamma", help="base graph overriding the one in the fair graph file")
    sp.add_argument("--fair-graph", required=True)
    sp = add("balance", cmd_balance, "find a balanced involution")
    sp.add_argument("--fair-graph", required=True)
    sp = add("build-solution", cmd_build_solution, "fair graph -> fundamental solution")
    sp.add_argument("--fair-graph", required=True)
    sp.add_argument("-o", "--output", required=True)
    sp = add("classify", cmd_classify, "fundamental solution -> fair graph")
    sp.add_argument("--solution", required=True)
    sp.add_argument("-o", "--output", required=True)
    sp = add("roundtrip", cmd_roundtrip, "graph -> solution -> graph, then compare")
    sp.add_argument("--fair-graph", required=True)
    sp = add("iso", cmd_iso, "isomorphism of two fair graphs")
    sp.add_argument("--a", required=True)
    sp.add_argument("--b", required=True)
    sp = add("mw", cmd_mw, "look for a dimension function")
    sp.add_argument("--fair-graph", required=True)
    sp = add("eval", cmd_eval, "evaluate a 2-morphism (or a stack of them) under a solution")
    sp.add_argument("--solution", required=True)
    sp.add_argument("--morphism", required=True)
    sp.add_argument("-o", "--output")
    sp = add("equiv", cmd_equiv, "decide unitary equivalence of two solutions")
    sp.add_argument("--a", required=True)
    sp.add_argument("--b", required=True)
    sp.add_argument("--witness", help="unitary witness file to verify as well")
    sp.add_argument("--fuzz", type=int, default=0, help="also test this many random self-conjugates")
    sp.add_argument("--seed", type=int, default=0, help="seed for --fuzz (TLJ_SEED overrides)")
    sp = add("gen", cmd_gen, "generate an example")
    sp.add_argument("--family", required=True, choices=FAMILIES)
    sp.add_argument("--params", nargs="*", default=[], metavar="KEY=VALUE")
    sp.add_argument("--gamma")
    sp.add_argument("-o", "--output", required=True)
    return parser


def _emit(command: str, outcome: Outcome, stdout, stderr) -> int:
    payload = io.encode_report(command, outcome.report, outcome.extra)
    stdout.write(io.serialize(io.doc("report", payload)).decode("utf-8"))
    status = {0: "ok", 1: "check failed", 2: "input error"}[outcome.code]
    detail = "; ".join(v.message for v in outcome.report.violations[:3])
    stderr.write(f"tljmod {command}: {status}" + (f": {detail}" if detail else "") + "\n")
    return outcome.code


def run_cli(argv: Sequence[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    argv = list(sys.argv[1:] if argv is None else argv)
    command = argv[0] if argv and not argv[0].startswith("-") else "tljmod"
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        return _emit(command, Outcome(_fail("USAGE", str(exc)), 2), stdout, stderr)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    if not (args.tol > 0 and math.isfinite(args.tol)):
        return _emit(command, Outcome(_fail("USAGE", "--tol must be positive"), 2), stdout, stderr)
    try:
        outcome = args.fn(args)
    except UsageError as exc:
        outcome = Outcome(_fail("USAGE", str(exc)), 2)
    except InputError as exc:
        outcome = Outcome(_fail(exc.code, str(exc), exc.ids), 2)
    except GammaMismatchError as exc:
        outcome = Outcome(_fail("GAMMA_MISMATCH", str(exc)), 2)
    except PreconditionError as exc:
        outcome = Outcome(_fail("PRECONDITION", str(exc)), 1)
    return _emit(command, outcome, stdout, stderr)


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
