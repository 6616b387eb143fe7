"""Gamma-fair graphs: fairness, balanced involutions, and example families."""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Iterable, Mapping

import numpy as np

from .errors import PreconditionError, UnsupportedError
from .graph import BiGraph
from .report import ValidationReport, Violation, make_report


@dataclass(frozen=True)
class FairVertex:
    id: str
    pi: str


@dataclass(frozen=True)
class FairEdge:
    id: str
    source: str
    target: str
    weight: float
    pi: str


@dataclass(frozen=True)
class FairGraph:
    """A weighted directed graph with a projection ``pi`` onto the base graph."""

    gamma: BiGraph
    vertices: tuple[FairVertex, ...]
    edges: tuple[FairEdge, ...]

    @cached_property
    def vertex_pi(self) -> dict[str, str]:
        return {v.id: v.pi for v in self.vertices}

    @cached_property
    def edge_by_id(self) -> dict[str, FairEdge]:
        return {e.id: e for e in self.edges}

    def vertex_ids(self) -> list[str]:
        return sorted(self.vertex_pi)

    def fiber(self, a: str) -> list[str]:
        return sorted(v.id for v in self.vertices if v.pi == a)


def fair_graph(gamma: BiGraph, vertices: Mapping[str, str], edges: Iterable[tuple]) -> FairGraph:
    """Build a graph from ``{vertex: pi}`` and ``(id, source, target, weight, pi)`` rows."""
    return FairGraph(
        gamma,
        tuple(FairVertex(v, a) for v, a in sorted(vertices.items())),
        tuple(sorted((FairEdge(i, s, t, float(w), p) for i, s, t, w, p in edges), key=lambda e: e.id)),
    )


def check_structure(l: FairGraph) -> ValidationReport:
    """Ids resolve, weights are positive, and ``pi`` is a graph homomorphism."""
    g = l.gamma
    violations = []
    vids = [v.id for v in l.vertices]
    eids = [e.id for e in l.edges]
    dups = sorted({i for i in vids if vids.count(i) > 1} | {i for i in eids if eids.count(i) > 1})
    if dups:
        violations.append(Violation("DUPLICATE_ID", tuple(dups), "ids must be unique"))
    bad_pi = [v.id for v in l.vertices if v.pi not in g.vertices]
    bad_pi += [e.id for e in l.edges if not g.has_edge(e.pi)]
    if bad_pi:
        violations.append(Violation("DANGLING_REFERENCE", tuple(bad_pi), "projection onto an unknown vertex or edge"))
    pi = l.vertex_pi
    dangling = [e.id for e in l.edges if e.source not in pi or e.target not in pi]
    if dangling:
        violations.append(Violation("DANGLING_REFERENCE", tuple(dangling), "edge endpoint is not a vertex"))
    if violations:
        return make_report(violations)
    nonhom = [
        e.id for e in l.edges
        if pi[e.source] != g.source(e.pi) or pi[e.target] != g.target(e.pi)
    ]
    if nonhom:
        violations.append(Violation("NOT_HOMOMORPHISM", tuple(nonhom), "pi does not respect sources and targets"))
    nonpos = [e.id for e in l.edges if not (e.weight > 0 and math.isfinite(e.weight))]
    if nonpos:
        violations.append(Violation("NONPOSITIVE_WEIGHT", tuple(nonpos), "weights must be positive"))
    return make_report(violations)


def check_fair(l: FairGraph, tol: float) -> ValidationReport:
    """Outgoing weights over each base edge sum to its loop value, at every vertex of its source fiber."""
    structure = check_structure(l)
    if not structure.ok:
        raise PreconditionError(f"fair graph is structurally invalid: {sorted(structure.codes())}")
    g = l.gamma
    sums: dict[tuple[str, str], float] = defaultdict(float)
    for e in l.edges:
        sums[(e.source, e.pi)] += e.weight
    violations = []
    residuals = {}
    for ed in sorted(g.edges, key=lambda x: x.id):
        for alpha in l.fiber(ed.source):
            total = sums.get((alpha, ed.id), 0.0)
            r = abs(total - ed.weight)
            residuals[f"{alpha}|{ed.id}"] = r
            if r > tol:
                violations.append(Violation(
                    "UNFAIR", (alpha, ed.id),
                    f"weights out of {alpha!r} over {ed.id!r} sum to {total!r}, expected {ed.weight!r}",
                ))
    warnings = [
        Violation("EMPTY_FIBER", (a,), f"no vertex projects onto {a!r}")
        for a in sorted(g.vertices) if not l.fiber(a)
    ]
    worst = max(residuals.values(), default=0.0)
    return make_report(violations, warnings, {"residuals": residuals, "worst": worst})


# -- balanced involutions -----------------------------------------------------------

@dataclass(frozen=True)
class BalancedInvolution:
    pairing: dict[str, str]

    def __getitem__(self, eid: str) -> str:
        return self.pairing[eid]


def weights_close(a: float, b: float, tol: float) -> bool:
    return abs(a - b) <= tol * max(1.0, abs(a))


def cluster_weights(values: Iterable[float], tol: float) -> list[list[float]]:
    """Sorted sweep: consecutive values within tolerance share a cluster."""
    clusters: list[list[float]] = []
    for x in sorted(values):
        if clusters and weights_close(clusters[-1][-1], x, tol):
            clusters[-1].append(x)
        else:
            clusters.append([x])
    return clusters


@dataclass
class _Group:
    key: tuple[str, str, str]  # (source, target, pi)
    weight: float  # representative
    ids: list[str]


def _weight_groups(l: FairGraph, tol: float) -> dict[tuple[str, str, str], list[_Group]]:
    raw: dict[tuple[str, str, str], list[FairEdge]] = defaultdict(list)
    for e in l.edges:
        raw[(e.source, e.target, e.pi)].append(e)
    groups: dict[tuple[str, str, str], list[_Group]] = {}
    for key, es in raw.items():
        es = sorted(es, key=lambda e: (e.weight, e.id))
        out: list[_Group] = []
        for e in es:
            if out and weights_close(out[-1].weight, e.weight, tol):
                out[-1].ids.append(e.id)
            else:
                out.append(_Group(key, e.weight, [e.id]))
        groups[key] = out
    return groups


def _partner(groups: dict, g: BiGraph, grp: _Group, tol: float) -> _Group | None:
    s, t, p = grp.key
    for cand in groups.get((t, s, g.dual(p)), []):
        if weights_close(cand.weight, 1.0 / grp.weight, tol):
            return cand
    return None


def balance_obstructions(l: FairGraph, tol: float) -> list[Violation]:
    """Weight groups whose reversed, dual, reciprocal partner group has a different size."""
    g = l.gamma
    groups = _weight_groups(l, tol)
    problems = []
    for key in sorted(groups):
        for grp in groups[key]:
            partner = _partner(groups, g, grp, tol)
            size = len(partner.ids) if partner else 0
            if size != len(grp.ids):
                s, t, p = grp.key
                problems.append(Violation(
                    "UNMATCHED_WEIGHT_GROUP", tuple(sorted(grp.ids)),
                    f"{len(grp.ids)} edge(s) {s}->{t} over {p} with weight {grp.weight!r} "
                    f"but {size} edge(s) {t}->{s} over {g.dual(p)} with weight {1 / grp.weight!r}",
                ))
    return problems


def find_balanced_involution(
    l: FairGraph,
    tol: float,
    rng: np.random.Generator | None = None,
    fix_self_paired: bool = False,
) -> BalancedInvolution | None:
    """Decide balancedness by counting weight groups; return a pairing if one exists.

    Edges are grouped by (source, target, pi, weight).  A pairing exists iff
    each group and its partner group (target, source, dual pi, 1/weight)
    have equal sizes.  Groups that are their own partner pair up internally,
    with at most one fixed point.  ``rng`` shuffles ids inside each group to
    produce other valid pairings; ``fix_self_paired`` makes every edge of a
    self-partnered group a fixed point.
    """
    if not check_fair(l, tol).ok:
        raise PreconditionError("find_balanced_involution requires a fair graph")
    g = l.gamma
    groups = _weight_groups(l, tol)
    pairing: dict[str, str] = {}
    for key in sorted(groups):
        for grp in groups[key]:
            if grp.ids[0] in pairing:
                continue
            partner = _partner(groups, g, grp, tol)
            if partner is None or len(partner.ids) != len(grp.ids):
                return None
            a = sorted(grp.ids)
            if rng is not None:
                a = list(rng.permutation(a))
            if partner is grp:
                if fix_self_paired:
                    pairing.update({x: x for x in a})
                    continue
                for i in range(0, len(a) - 1, 2):
                    pairing[a[i]], pairing[a[i + 1]] = a[i + 1], a[i]
                if len(a) % 2:
                    pairing[a[-1]] = a[-1]
            else:
                b = sorted(partner.ids)
                if rng is not None:
                    b = list(rng.permutation(b))
                for x, y in zip(a, b):
                    pairing[x], pairing[y] = y, x
    return BalancedInvolution({k: pairing[k] for k in sorted(pairing)})


def check_involution(l: FairGraph, inv: BalancedInvolution | Mapping[str, str], tol: float) -> ValidationReport:
    pairing = inv.pairing if isinstance(inv, BalancedInvolution) else dict(inv)
    g = l.gamma
    edges = l.edge_by_id
    violations = []
    if set(pairing) != set(edges):
        violations.append(Violation("NOT_TOTAL", (), "pairing must be defined on every edge"))
        return make_report(violations)
    for eid in sorted(edges):
        e, f = edges[eid], edges.get(pairing[eid])
        if f is None or pairing.get(f.id) != eid:
            violations.append(Violation("NOT_INVOLUTION", (eid,), "pairing applied twice must be the identity"))
            continue
        if f.source != e.target or f.target != e.source:
            violations.append(Violation("NOT_REVERSING", (eid, f.id), "paired edges must reverse direction"))
        if abs(e.weight * f.weight - 1.0) > tol:
            violations.append(Violation("NOT_RECIPROCAL", (eid, f.id), f"w*w = {e.weight * f.weight!r}"))
        if f.pi != g.dual(e.pi):
            violations.append(Violation("NOT_DUAL", (eid, f.id), "pi(pair(e)) must be dual(pi(e))"))
    return make_report(violations)


# -- families ------------------------------------------------------------------

def _single_loop(g: BiGraph) -> str:
    if len(g.vertices) != 1 or len(g.edges) != 1 or g.edges[0].dual != g.edges[0].id:
        raise UnsupportedError("expected a single vertex with a single self-dual loop")
    return g.edges[0].id


def _oriented_pair(g: BiGraph) -> tuple[str, str]:
    if len(g.vertices) != 1 or len(g.edges) != 2:
        raise UnsupportedError("expected a single vertex with one dual loop pair")
    e, f = sorted(g.edges, key=lambda x: x.id)
    if e.dual != f.id or e.id == f.id:
        raise UnsupportedError("expected a non-self-dual loop pair")
    return e.id, f.id


def a_path_quantum_dim(g: BiGraph, n: int) -> FairGraph:
    """The A_n path with weights given by ratios of quantum dimensions sin(i pi/(n+1))."""
    loop = _single_loop(g)
    if n < 2:
        raise UnsupportedError("the A_n family needs n >= 2")
    delta = 2 * math.cos(math.pi / (n + 1))
    if not math.isclose(g.weight(loop), delta, rel_tol=1e-12, abs_tol=1e-12):
        raise UnsupportedError(f"A_{n} needs delta = 2cos(pi/{n + 1}) = {delta!r}, got {g.weight(loop)!r}")
    (a,) = g.vertices
    d = [math.sin(i * math.pi / (n + 1)) for i in range(n + 2)]
    width = len(str(n))
    vid = [f"v{i:0{width}d}" for i in range(n + 1)]
    edges = []
    for i in range(1, n):
        edges.append((f"{vid[i]}>{vid[i + 1]}", vid[i], vid[i + 1], d[i + 1] / d[i], loop))
        edges.append((f"{vid[i + 1]}>{vid[i]}", vid[i + 1], vid[i], d[i] / d[i + 1], loop))
    return fair_graph(g, {vid[i]: a for i in range(1, n + 1)}, edges)


def two_vertex_reciprocal(g: BiGraph, a: float) -> FairGraph:
    """Two vertices with weights ``a`` and ``1/a`` over an oriented loop pair with delta = a + 1/a.

    Not of MW type for ``a != 1``: the cycle v -> w -> v has weight product ``1/a**2``.
    """
    e, f = _oriented_pair(g)
    if a <= 0:
        raise UnsupportedError("a must be positive")
    if not math.isclose(g.weight(e), a + 1 / a, rel_tol=1e-12):
        raise UnsupportedError(f"delta must equal a + 1/a = {a + 1 / a!r}, got {g.weight(e)!r}")
    (x,) = g.vertices
    rows = []
    for pi, big, small in ((e, a, 1 / a), (f, 1 / a, a)):
        rows += [
            (f"{pi}:v->v", "v", "v", big, pi),
            (f"{pi}:v->w", "v", "w", small, pi),
            (f"{pi}:w->w", "w", "w", big, pi),
            (f"{pi}:w->v", "w", "v", small, pi),
        ]
    return fair_graph(g, {"v": x, "w": x}, rows)


def integer_multigraph(g: BiGraph) -> FairGraph:
    """One vertex per base vertex and ``delta_e`` parallel weight-1 edges over each ``e``.

    Requires every loop value to be a positive integer.
    """
    for ed in g.edges:
        if ed.weight != int(ed.weight):
            raise UnsupportedError(f"edge {ed.id!r} has non-integer loop value {ed.weight!r}")
    rows = []
    for ed in g.edges:
        for k in range(int(ed.weight)):
            rows.append((f"{ed.id}#{k}", ed.source, ed.target, 1.0, ed.id))
    return fair_graph(g, {a: a for a in g.vertices}, rows)


def cover(l: FairGraph, sheets: int, tol: float = 1e-10) -> FairGraph:
    """Disjoint copies of ``l`` with one dual edge pair shifted cyclically between sheets."""
    if sheets < 1:
        raise ValueError("sheets must be positive")
    inv = find_balanced_involution(l, tol)
    if inv is None:
        raise PreconditionError("cover needs a balanced graph")
    shifted = next((e for e in sorted(inv.pairing) if inv[e] != e), None)
    if shifted is None:
        raise UnsupportedError("every edge is a fixed point of the involution; nothing to shift")
    partner = inv[shifted]
    vertices = {f"{v.id}@{k}": v.pi for v in l.vertices for k in range(sheets)}
    rows = []
    for k in range(sheets):
        nxt = (k + 1) % sheets
        for e in l.edges:
            s, t = f"{e.source}@{k}", f"{e.target}@{k}"
            if e.id == shifted:
                t = f"{e.target}@{nxt}"
            elif e.id == partner:
                s = f"{e.source}@{nxt}"
            rows.append((f"{e.id}@{k}", s, t, e.weight, e.pi))
    return fair_graph(l.gamma, vertices, rows)


def relabel(l: FairGraph, seed: int) -> FairGraph:
    """Same graph under a random renaming of vertex and edge ids."""
    rng = np.random.default_rng(seed)
    vperm = rng.permutation(len(l.vertices))
    eperm = rng.permutation(len(l.edges))
    vname = {v.id: f"x{int(vperm[i]):03d}" for i, v in enumerate(l.vertices)}
    ename = {e.id: f"y{int(eperm[i]):03d}" for i, e in enumerate(l.edges)}
    return FairGraph(
        l.gamma,
        tuple(sorted((FairVertex(vname[v.id], v.pi) for v in l.vertices), key=lambda v: v.id)),
        tuple(sorted(
            (replace(e, id=ename[e.id], source=vname[e.source], target=vname[e.target]) for e in l.edges),
            key=lambda e: e.id,
        )),
    )


FAMILIES = ("a-path", "two-vertex-reciprocal", "cover", "relabel")


def generate_family(kind: str, g: BiGraph | None = None, **params) -> FairGraph:
    """Dispatch by family name: ``a-path`` (n), ``two-vertex-reciprocal`` (a),
    ``cover`` (base, sheets) and ``relabel`` (base, seed)."""
    if kind == "a-path":
        return a_path_quantum_dim(g, int(params["n"]))
    if kind == "two-vertex-reciprocal":
        return two_vertex_reciprocal(g, float(params["a"]))
    if kind == "cover":
        return cover(params["base"], int(params.get("sheets", 2)))
    if kind == "relabel":
        return relabel(params["base"], int(params.get("seed", 0)))
    raise UnsupportedError(f"unknown family {kind!r}; known: {', '.join(FAMILIES)}")


def lambda1() -> FairGraph:
    """The shipped six-vertex balanced fair graph over :func:`gamma1`."""
    from importlib.resources import files

    from .io import decode_fair_graph, parse

    d = parse(files("tljmod").joinpath("data").joinpath("lambda1.json").read_bytes())
    return decode_fair_graph(d.payload)
