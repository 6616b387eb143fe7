"""Labelled non-crossing diagrams over a weighted bidirected graph.

A diagram is a perfect matching on its boundary points.  Bottom points are
addressed ``("bottom", i)`` and top points ``("top", j)``, both indexed left to
right.  Closed loops are never stored: stacking replaces each loop by the
weight of its label, so :class:`Morphism2` values are always loop free and
can be compared as plain dictionaries.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

import numpy as np

from .errors import CompositionError, GammaMismatchError, PreconditionError
from .graph import BiGraph, gammas_equal
from .report import ValidationReport, Violation, make_report

BOTTOM = "bottom"
TOP = "top"

Point = tuple[str, int]
Arc = tuple[Point, Point]


@dataclass(frozen=True)
class GammaPath:
    """A path in the base graph; ``at`` is its start vertex."""

    gamma: BiGraph = field(repr=False, compare=False)
    edges: tuple[str, ...]
    at: str

    def __len__(self) -> int:
        return len(self.edges)

    @property
    def start(self) -> str:
        return self.at

    @property
    def end(self) -> str:
        return self.gamma.target(self.edges[-1]) if self.edges else self.at

    def vertex(self, i: int) -> str:
        """Vertex sitting just left of edge ``i`` (``i == len`` gives the end)."""
        if i == 0:
            return self.at
        return self.gamma.target(self.edges[i - 1])

    def insert(self, p: int, edges: Iterable[str]) -> GammaPath:
        return GammaPath(self.gamma, self.edges[:p] + tuple(edges) + self.edges[p:], self.at)

    def remove(self, p: int, count: int = 2) -> GammaPath:
        return GammaPath(self.gamma, self.edges[:p] + self.edges[p + count:], self.at)

    def concat(self, other: GammaPath) -> GammaPath:
        return GammaPath(self.gamma, self.edges + other.edges, self.at)


def path_problems(g: BiGraph, edges: Iterable[str], at: str | None = None) -> list[str]:
    edges = tuple(edges)
    problems = []
    for e in edges:
        if not g.has_edge(e):
            problems.append(f"unknown edge {e!r}")
    if problems:
        return problems
    if edges:
        if at is not None and at != g.source(edges[0]):
            problems.append(f"path starts at {g.source(edges[0])!r}, not {at!r}")
        for i in range(len(edges) - 1):
            if g.target(edges[i]) != g.source(edges[i + 1]):
                problems.append(f"edges {edges[i]!r} and {edges[i + 1]!r} do not compose")
    elif at is None or at not in g.vertices:
        problems.append(f"empty path needs a vertex of the graph, got {at!r}")
    return problems


def make_path(g: BiGraph, edges: Iterable[str], at: str | None = None) -> GammaPath:
    edges = tuple(edges)
    problems = path_problems(g, edges, at)
    if problems:
        raise ValueError("; ".join(problems))
    return GammaPath(g, edges, g.source(edges[0]) if edges else at)


def _norm_arc(a: Point, b: Point) -> Arc:
    return (a, b) if a <= b else (b, a)


@dataclass(frozen=True)
class Diagram:
    bottom: GammaPath
    top: GammaPath
    arcs: tuple[Arc, ...]

    def __post_init__(self) -> None:
        arcs = tuple(sorted(_norm_arc((a[0], int(a[1])), (b[0], int(b[1]))) for a, b in self.arcs))
        object.__setattr__(self, "arcs", arcs)

    @property
    def gamma(self) -> BiGraph:
        return self.bottom.gamma

    def partners(self) -> dict[Point, Point]:
        out: dict[Point, Point] = {}
        for a, b in self.arcs:
            out[a] = b
            out[b] = a
        return out

    def label(self, p: Point) -> str:
        side, i = p
        return (self.bottom if side == BOTTOM else self.top).edges[i]

    def is_identity(self) -> bool:
        return self.bottom.edges == self.top.edges and self == identity_diagram(self.bottom)


def identity_diagram(p: GammaPath) -> Diagram:
    return Diagram(p, p, tuple(((BOTTOM, i), (TOP, i)) for i in range(len(p))))


def make_cup(g: BiGraph, e: str) -> Diagram:
    """The cup ``1 => e (x) dual(e)`` at ``source(e)``."""
    ed = g.edge(e)
    return Diagram(GammaPath(g, (), ed.source), GammaPath(g, (e, ed.dual), ed.source), (((TOP, 0), (TOP, 1)),))


def make_cap(g: BiGraph, e: str) -> Diagram:
    """The cap ``e (x) dual(e) => 1``, adjoint of :func:`make_cup`."""
    ed = g.edge(e)
    return Diagram(GammaPath(g, (e, ed.dual), ed.source), GammaPath(g, (), ed.source), (((BOTTOM, 0), (BOTTOM, 1)),))


def validate_diagram(d: Diagram) -> ValidationReport:
    """Check paths, endpoints, matching, label rule and planarity.

    Planarity is decided by repeatedly deleting same-side arcs between
    adjacent surviving points; the residue must be an order-preserving
    bottom-to-top matching.
    """
    g = d.gamma
    violations: list[Violation] = []
    for name, p in ((BOTTOM, d.bottom), (TOP, d.top)):
        problems = path_problems(g, p.edges, p.at)
        if problems:
            violations.append(Violation("PATH_INVALID", (name,), f"{name} path: {'; '.join(problems)}"))
    if violations:
        return make_report(violations)
    if d.bottom.start != d.top.start or d.bottom.end != d.top.end:
        violations.append(Violation(
            "ENDPOINT_MISMATCH", (),
            f"bottom runs {d.bottom.start}->{d.bottom.end}, top runs {d.top.start}->{d.top.end}",
        ))

    points = [(BOTTOM, i) for i in range(len(d.bottom))] + [(TOP, j) for j in range(len(d.top))]
    seen: dict[Point, int] = {}
    for arc in d.arcs:
        for p in arc:
            seen[p] = seen.get(p, 0) + 1
    bad = [p for p in points if seen.get(p, 0) != 1] + [p for p in seen if p not in set(points)]
    if any(a == b for a, b in d.arcs):
        bad.append(next(a for a, b in d.arcs if a == b))
    if bad:
        ids = tuple(f"{s}{i}" for s, i in sorted(set(bad)))
        violations.append(Violation("NOT_A_MATCHING", ids, "every boundary point must lie on exactly one arc"))
        return make_report(violations)

    label_bad = []
    for a, b in d.arcs:
        la, lb = d.label(a), d.label(b)
        if a[0] == b[0]:
            if g.dual(la) != lb:
                label_bad.append(f"{a[0]}{a[1]}-{b[0]}{b[1]}")
        elif la != lb:
            label_bad.append(f"{a[0]}{a[1]}-{b[0]}{b[1]}")
    if label_bad:
        violations.append(Violation(
            "LABEL_RULE", tuple(label_bad),
            "same-side arcs must join e with dual(e); through-strands must join equal labels",
        ))

    partners = d.partners()
    residue = {}
    for side, n in ((BOTTOM, len(d.bottom)), (TOP, len(d.top))):
        residue[side], _ = _reduce_side(side, n, partners, leftmost=True)
    crossing = any(partners[(s, i)][0] == s for s in (BOTTOM, TOP) for i in residue[s])
    if not crossing:
        through = [partners[(BOTTOM, i)][1] for i in residue[BOTTOM]]
        crossing = through != residue[TOP]
    if crossing:
        violations.append(Violation("CROSSING", (), "arcs cross; the matching is not planar"))
    return make_report(violations)


def _reduce_side(side: str, n: int, partners: Mapping[Point, Point], leftmost: bool) -> tuple[list[int], list[tuple[int, int]]]:
    """Delete innermost same-side arcs on one side.

    Returns the surviving original indices and the removals as
    ``(position in the current path, original index of the left endpoint)``.
    """
    alive = list(range(n))
    removed: list[tuple[int, int]] = []
    while True:
        hits = [
            k for k in range(len(alive) - 1)
            if partners[(side, alive[k])] == (side, alive[k + 1])
        ]
        if not hits:
            return alive, removed
        k = hits[0] if leftmost else hits[-1]
        removed.append((k, alive[k]))
        del alive[k:k + 2]


@dataclass(frozen=True)
class ElementarySlice:
    """Identity strands plus at most one cup or cap at ``position``."""

    kind: str  # "identity" | "cup" | "cap"
    bottom: GammaPath
    top: GammaPath
    position: int = 0
    edge: str | None = None

    def to_diagram(self) -> Diagram:
        if self.kind == "identity":
            return identity_diagram(self.bottom)
        p = self.position
        if self.kind == "cup":
            arcs = [((BOTTOM, i), (TOP, i if i < p else i + 2)) for i in range(len(self.bottom))]
            arcs.append(((TOP, p), (TOP, p + 1)))
        else:
            arcs = [((BOTTOM, i if i < p else i + 2), (TOP, i)) for i in range(len(self.top))]
            arcs.append(((BOTTOM, p), (BOTTOM, p + 1)))
        return Diagram(self.bottom, self.top, tuple(arcs))


def cup_slice(path: GammaPath, p: int, e: str) -> ElementarySlice:
    g = path.gamma
    if g.source(e) != path.vertex(p):
        raise PreconditionError(f"cannot insert a cup on {e!r} at position {p}: vertex is {path.vertex(p)!r}")
    return ElementarySlice("cup", path, path.insert(p, (e, g.dual(e))), p, e)


def cap_slice(path: GammaPath, p: int) -> ElementarySlice:
    g = path.gamma
    e = path.edges[p]
    if path.edges[p + 1] != g.dual(e):
        raise PreconditionError(f"positions {p},{p + 1} of the path do not carry a dual pair")
    return ElementarySlice("cap", path, path.remove(p), p, e)


def decompose_to_slices(d: Diagram, leftmost: bool = True) -> list[ElementarySlice]:
    """Split a diagram into slices with one cup or cap each.

    Caps come first, removed innermost-first from the bottom (ties broken
    leftmost-first unless ``leftmost`` is false); the remaining strands run
    straight through; cups are then inserted outermost-first so the innermost
    arrives last.  A diagram with no same-side arcs yields a single identity slice.
    """
    report = validate_diagram(d)
    if not report.ok:
        raise PreconditionError(f"invalid diagram: {sorted(report.codes())}")
    partners = d.partners()
    _, caps = _reduce_side(BOTTOM, len(d.bottom), partners, leftmost)
    _, cups = _reduce_side(TOP, len(d.top), partners, leftmost)
    if not caps and not cups:
        return [ElementarySlice("identity", d.bottom, d.top)]

    slices: list[ElementarySlice] = []
    path = d.bottom
    for k, _ in caps:
        s = cap_slice(path, k)
        slices.append(s)
        path = s.top
    # Replay the top reduction backwards; each cup lands where its arc was removed.
    for k, orig in reversed(cups):
        s = cup_slice(path, k, d.top.edges[orig])
        slices.append(s)
        path = s.top
    assert path.edges == d.top.edges, "slice sweep did not reach the top boundary"
    return slices


class Morphism2:
    """A finite complex combination of loop-free diagrams sharing a boundary."""

    __slots__ = ("bottom", "top", "terms")

    def __init__(self, bottom: GammaPath, top: GammaPath, terms: Mapping[Diagram, complex] | None = None):
        self.bottom = bottom
        self.top = top
        clean: dict[Diagram, complex] = {}
        for d, c in (terms or {}).items():
            if d.bottom.edges != bottom.edges or d.top.edges != top.edges:
                raise ValueError("every term must share the morphism's boundary")
            c = complex(c)
            if c != 0:
                clean[d] = clean.get(d, 0) + c
        self.terms = {d: clean[d] for d in sorted(clean, key=lambda d: d.arcs) if clean[d] != 0}

    @classmethod
    def of(cls, d: Diagram, coeff: complex = 1.0) -> Morphism2:
        return cls(d.bottom, d.top, {d: coeff})

    @classmethod
    def zero(cls, bottom: GammaPath, top: GammaPath) -> Morphism2:
        return cls(bottom, top, {})

    @classmethod
    def scalar(cls, g: BiGraph, vertex: str, value: complex) -> Morphism2:
        p = GammaPath(g, (), vertex)
        return cls(p, p, {identity_diagram(p): value})

    @property
    def gamma(self) -> BiGraph:
        return self.bottom.gamma

    def __iter__(self) -> Iterator[tuple[Diagram, complex]]:
        return iter(self.terms.items())

    def __len__(self) -> int:
        return len(self.terms)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Morphism2):
            return NotImplemented
        return self.bottom == other.bottom and self.top == other.top and self.terms == other.terms

    def __repr__(self) -> str:
        return f"Morphism2({self.bottom.edges} -> {self.top.edges}, {len(self.terms)} terms)"

    def __add__(self, other: Morphism2) -> Morphism2:
        if (self.bottom, self.top) != (other.bottom, other.top):
            raise CompositionError("cannot add morphisms with different boundaries")
        terms = dict(self.terms)
        for d, c in other.terms.items():
            terms[d] = terms.get(d, 0) + c
        return Morphism2(self.bottom, self.top, terms)

    def __mul__(self, k: complex) -> Morphism2:
        return Morphism2(self.bottom, self.top, {d: c * k for d, c in self.terms.items()})

    __rmul__ = __mul__

    def __neg__(self) -> Morphism2:
        return self * -1

    def __sub__(self, other: Morphism2) -> Morphism2:
        return self + (-other)

    def coefficient(self, d: Diagram) -> complex:
        return self.terms.get(d, 0j)

    def close_to(self, other: Morphism2, rtol: float = 1e-14) -> bool:
        if (self.bottom, self.top) != (other.bottom, other.top):
            return False
        for d in set(self.terms) | set(other.terms):
            a, b = self.coefficient(d), other.coefficient(d)
            if abs(a - b) > rtol * max(1.0, abs(a), abs(b)):
                return False
        return True


def as_morphism(x: Diagram | Morphism2 | ElementarySlice) -> Morphism2:
    if isinstance(x, Morphism2):
        return x
    if isinstance(x, ElementarySlice):
        x = x.to_diagram()
    return Morphism2.of(x)


def _same_gamma(a: BiGraph, b: BiGraph) -> None:
    if not gammas_equal(a, b):
        raise GammaMismatchError("morphisms live over different base graphs")


def _stack(lower: Diagram, upper: Diagram) -> tuple[Diagram, list[list[str]]]:
    """Glue ``upper`` on top of ``lower``; return the diagram and the labels of each closed loop."""
    low = lower.partners()
    up = upper.partners()
    mid = lower.top.edges

    # Outer points keep their names; interface points become ("mid", i).
    def via_lower(p: Point) -> Point:
        q = low[p if p[0] == BOTTOM else (TOP, p[1])]
        return q if q[0] == BOTTOM else ("mid", q[1])

    def via_upper(p: Point) -> Point:
        q = up[(BOTTOM, p[1]) if p[0] == "mid" else p]
        return q if q[0] == TOP else ("mid", q[1])

    visited: set[int] = set()
    arcs: list[Arc] = []
    starts = [(BOTTOM, i) for i in range(len(lower.bottom))] + [(TOP, j) for j in range(len(upper.top))]
    done: set[Point] = set()
    for s in starts:
        if s in done:
            continue
        step = via_lower if s[0] == BOTTOM else via_upper
        cur = step(s)
        while cur[0] == "mid":
            visited.add(cur[1])
            step = via_upper if step is via_lower else via_lower
            cur = step(cur)
        done.update((s, cur))
        arcs.append((s, cur))

    loops: list[list[str]] = []
    for i in range(len(mid)):
        if i in visited:
            continue
        labels = []
        start: Point = ("mid", i)
        cur = start
        step = via_lower
        # Alternation forces the walk back to ``start`` through an upper arc.
        while True:
            visited.add(cur[1])
            labels.append(mid[cur[1]])
            cur = step(cur)
            step = via_upper if step is via_lower else via_lower
            if cur == start:
                break
        loops.append(labels)
    return Diagram(lower.bottom, upper.top, tuple(arcs)), loops


def compose_vertical(lower: Morphism2 | Diagram, upper: Morphism2 | Diagram) -> Morphism2:
    """Stack ``upper`` on top of ``lower`` (``upper`` after ``lower``).

    Each closed loop is removed and contributes the weight of its label.
    """
    lower, upper = as_morphism(lower), as_morphism(upper)
    _same_gamma(lower.gamma, upper.gamma)
    a, b = lower.top, upper.bottom
    if a.edges != b.edges or a.at != b.at:
        n = min(len(a), len(b))
        pos = next((i for i in range(n) if a.edges[i] != b.edges[i]), n)
        raise CompositionError(
            f"boundary mismatch at position {pos}: lower top {a.edges} @ {a.at!r} vs upper bottom {b.edges} @ {b.at!r}"
        )
    g = lower.gamma
    terms: dict[Diagram, complex] = {}
    for d1, c1 in lower:
        for d2, c2 in upper:
            d, loops = _stack(d1, d2)
            coeff = c1 * c2
            for labels in loops:
                e = labels[0]
                assert set(labels) <= {e, g.dual(e)}, f"loop labels {labels} are not a dual pair"
                coeff *= g.weight(e)
            terms[d] = terms.get(d, 0) + coeff
    return Morphism2(lower.bottom, upper.top, terms)


def compose_horizontal(left: Morphism2 | Diagram, right: Morphism2 | Diagram) -> Morphism2:
    """Juxtapose ``right`` to the right of ``left``."""
    left, right = as_morphism(left), as_morphism(right)
    _same_gamma(left.gamma, right.gamma)
    if left.bottom.end != right.bottom.start or left.top.end != right.top.start:
        raise CompositionError(
            f"vertex mismatch: left ends at {left.bottom.end!r}/{left.top.end!r}, "
            f"right starts at {right.bottom.start!r}/{right.top.start!r}"
        )
    nb, nt = len(left.bottom), len(left.top)
    bottom = left.bottom.concat(right.bottom)
    top = left.top.concat(right.top)

    def shift(p: Point) -> Point:
        return (p[0], p[1] + (nb if p[0] == BOTTOM else nt))

    terms: dict[Diagram, complex] = {}
    for d1, c1 in left:
        for d2, c2 in right:
            arcs = d1.arcs + tuple((shift(a), shift(b)) for a, b in d2.arcs)
            d = Diagram(bottom, top, arcs)
            terms[d] = terms.get(d, 0) + c1 * c2
    return Morphism2(bottom, top, terms)


def adjoint(f: Morphism2 | Diagram) -> Morphism2:
    """Reflect every diagram top-to-bottom and conjugate the coefficients."""
    f = as_morphism(f)
    flip = {BOTTOM: TOP, TOP: BOTTOM}
    terms = {
        Diagram(d.top, d.bottom, tuple(((flip[a[0]], a[1]), (flip[b[0]], b[1])) for a, b in d.arcs)): c.conjugate()
        for d, c in f
    }
    return Morphism2(f.top, f.bottom, terms)


def fold_slices(slices: Iterable[ElementarySlice]) -> Morphism2:
    it = iter(slices)
    acc = as_morphism(next(it))
    for s in it:
        acc = compose_vertical(acc, as_morphism(s))
    return acc


# -- random diagrams for fuzzing ---------------------------------------------

def random_path(g: BiGraph, rng: np.random.Generator, length: int, start: str | None = None) -> GammaPath:
    v = start if start is not None else g.vertices[rng.integers(len(g.vertices))]
    at = v
    edges = []
    for _ in range(length):
        out = g.out_edges.get(v, ())
        if not out:
            break
        e = out[rng.integers(len(out))]
        edges.append(e)
        v = g.target(e)
    return GammaPath(g, tuple(edges), at)


def random_slices(path: GammaPath, rng: np.random.Generator, count: int, max_len: int = 6) -> list[ElementarySlice]:
    """A random walk of cups and caps starting from ``path``."""
    g = path.gamma
    slices = []
    for _ in range(count):
        caps = [p for p in range(len(path) - 1) if path.edges[p + 1] == g.dual(path.edges[p])]
        if caps and (len(path) + 2 > max_len or rng.random() < 0.5):
            s = cap_slice(path, caps[rng.integers(len(caps))])
        else:
            p = int(rng.integers(len(path) + 1))
            out = g.out_edges.get(path.vertex(p), ())
            if not out:
                continue
            s = cup_slice(path, p, out[rng.integers(len(out))])
        slices.append(s)
        path = s.top
    if not slices:
        slices.append(ElementarySlice("identity", path, path))
    return slices


def random_diagram(path: GammaPath, rng: np.random.Generator, count: int, max_len: int = 6) -> Diagram:
    """A random valid diagram with bottom boundary ``path`` (loop scalars discarded)."""
    m = fold_slices(random_slices(path, rng, count, max_len))
    (d,) = m.terms
    return d
