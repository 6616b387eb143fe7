"""Weighted bidirected graphs: the base datum that grades everything else."""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Sequence

from .errors import PreconditionError
from .report import ValidationReport, Violation, make_report


@dataclass(frozen=True)
class Edge:
    id: str
    source: str
    target: str
    weight: float
    dual: str


@dataclass(frozen=True)
class BiGraph:
    """A finite directed graph with edge weights and an edge involution.

    Construction does not validate; call :func:`validate_bigraph`.
    """

    vertices: tuple[str, ...]
    edges: tuple[Edge, ...]

    @cached_property
    def _edges_by_id(self) -> dict[str, Edge]:
        index: dict[str, Edge] = {}
        for e in self.edges:
            index.setdefault(e.id, e)
        return index

    def edge(self, eid: str) -> Edge:
        try:
            return self._edges_by_id[eid]
        except KeyError:
            raise KeyError(f"unknown edge id {eid!r}") from None

    def has_edge(self, eid: str) -> bool:
        return eid in self._edges_by_id

    def dual(self, eid: str) -> str:
        return self.edge(eid).dual

    def weight(self, eid: str) -> float:
        return self.edge(eid).weight

    def source(self, eid: str) -> str:
        return self.edge(eid).source

    def target(self, eid: str) -> str:
        return self.edge(eid).target

    @cached_property
    def out_edges(self) -> dict[str, tuple[str, ...]]:
        out: dict[str, list[str]] = {v: [] for v in self.vertices}
        for e in self.edges:
            out.setdefault(e.source, []).append(e.id)
        return {v: tuple(sorted(ids)) for v, ids in out.items()}

    def edge_ids(self) -> list[str]:
        return sorted(e.id for e in self.edges)


def validate_bigraph(g: BiGraph) -> ValidationReport:
    """Check every structural invariant of a weighted bidirected graph.

    Malformed input yields a failing report; this never raises on bad data.
    Each violated invariant produces exactly one violation naming all
    offending ids.
    """
    found: dict[str, list[str]] = {}

    def flag(code: str, *ids: str) -> None:
        bucket = found.setdefault(code, [])
        for i in ids:
            if i not in bucket:
                bucket.append(i)

    vcount = Counter(g.vertices)
    ecount = Counter(e.id for e in g.edges)
    for vid, n in sorted(vcount.items()):
        if n > 1:
            flag("DUPLICATE_ID", vid)
    for eid, n in sorted(ecount.items()):
        if n > 1:
            flag("DUPLICATE_ID", eid)

    vertices = set(g.vertices)
    edges = {e.id: e for e in g.edges}
    for e in g.edges:
        if e.source not in vertices or e.target not in vertices:
            flag("DANGLING_REFERENCE", e.id)
        if e.dual not in edges:
            flag("DANGLING_REFERENCE", e.id)
        w = e.weight
        if not isinstance(w, (int, float)) or not math.isfinite(w) or w <= 0:
            flag("NONPOSITIVE_WEIGHT", e.id)

    for e in sorted(g.edges, key=lambda x: x.id):
        d = edges.get(e.dual)
        if d is None:
            continue
        if d.dual != e.id:
            flag("DUAL_NOT_INVOLUTION", e.id, d.id)
        if d.source != e.target or d.target != e.source:
            flag("DUAL_ENDPOINT_MISMATCH", e.id, d.id)
        # Authored data: exact equality, no tolerance.
        if d.weight != e.weight:
            flag("DUAL_WEIGHT_MISMATCH", e.id, d.id)

    messages = {
        "DUPLICATE_ID": "ids must be unique",
        "DANGLING_REFERENCE": "endpoint or dual references an undeclared id",
        "NONPOSITIVE_WEIGHT": "edge weights must be positive and finite",
        "DUAL_NOT_INVOLUTION": "dual(dual(e)) must equal e",
        "DUAL_ENDPOINT_MISMATCH": "dual(e) must run from target(e) to source(e)",
        "DUAL_WEIGHT_MISMATCH": "weight(e) must equal weight(dual(e)) exactly",
    }
    violations = [
        Violation(code, tuple(ids), f"{messages[code]}: {', '.join(ids)}")
        for code, ids in found.items()
    ]
    return make_report(violations)


def is_connected(g: BiGraph) -> bool:
    """Connectivity of the underlying undirected graph; the empty graph is not connected."""
    if not validate_bigraph(g).ok:
        raise PreconditionError("is_connected requires a valid BiGraph")
    if not g.vertices:
        return False
    adj: dict[str, set[str]] = {v: set() for v in g.vertices}
    for e in g.edges:
        adj[e.source].add(e.target)
        adj[e.target].add(e.source)
    seen = {g.vertices[0]}
    stack = [g.vertices[0]]
    while stack:
        v = stack.pop()
        for w in adj[v] - seen:
            seen.add(w)
            stack.append(w)
    return len(seen) == len(adj)


class GammaKind(Enum):
    UNORIENTED = "unoriented"
    ORIENTED = "oriented"
    TWO_COLOR = "two-color"
    SHADED = "shaded"


def _pair(eid: str, did: str, s: str, t: str, w: float) -> list[Edge]:
    return [Edge(eid, s, t, w, did), Edge(did, t, s, w, eid)]


def standard_gamma(kind: GammaKind | str, weights: Sequence[float]) -> BiGraph:
    """The graphs generating unshaded, oriented, two-colour and shaded TLJ.

    Unoriented: vertex ``*`` with self-dual loop ``e``.
    Oriented: vertex ``*`` with the dual loop pair ``e``/``ebar``.
    Two-colour: vertex ``*`` with self-dual loops ``r`` and ``b``.
    Shaded: vertices ``white``/``shaded`` joined by ``e: white -> shaded`` and ``ebar``.
    """
    kind = GammaKind(kind)
    expected = 2 if kind is GammaKind.TWO_COLOR else 1
    if len(weights) != expected:
        raise ValueError(f"{kind.value} takes {expected} weight(s), got {len(weights)}")
    ws = [float(w) for w in weights]
    if any(not (w > 0 and math.isfinite(w)) for w in ws):
        raise ValueError(f"weights must be positive, got {ws}")
    if kind is GammaKind.UNORIENTED:
        return BiGraph(("*",), (Edge("e", "*", "*", ws[0], "e"),))
    if kind is GammaKind.ORIENTED:
        return BiGraph(("*",), tuple(_pair("e", "ebar", "*", "*", ws[0])))
    if kind is GammaKind.TWO_COLOR:
        return BiGraph(
            ("*",),
            (Edge("b", "*", "*", ws[1], "b"), Edge("r", "*", "*", ws[0], "r")),
        )
    return BiGraph(("shaded", "white"), tuple(_pair("e", "ebar", "white", "shaded", ws[0])))


def gamma1() -> BiGraph:
    """The three-vertex graph of the worked classification example.

    ``white`` carries the dual loop pair ``a``/``abar`` (weight 1); ``b``/``bbar``
    join white and grey, ``c``/``cbar`` join grey and shaded (weight 2); the
    shaded vertex has self-dual loops ``d`` (weight 2) and ``e`` (weight 1).
    """
    edges = (
        _pair("a", "abar", "white", "white", 1.0)
        + _pair("b", "bbar", "white", "grey", 2.0)
        + _pair("c", "cbar", "grey", "shaded", 2.0)
        + [Edge("d", "shaded", "shaded", 2.0, "d"), Edge("e", "shaded", "shaded", 1.0, "e")]
    )
    return BiGraph(("grey", "shaded", "white"), tuple(sorted(edges, key=lambda e: e.id)))


def gammas_equal(a: BiGraph, b: BiGraph) -> bool:
    """Structural equality, ignoring the order vertices and edges were listed in."""
    if a is b:
        return True
    return sorted(a.vertices) == sorted(b.vertices) and sorted(a.edges, key=lambda e: e.id) == sorted(
        b.edges, key=lambda e: e.id
    )
