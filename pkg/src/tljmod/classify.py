"""The two directions of the classification, isomorphism of fair graphs,
equivalence witnesses, and detection of graphs carrying a dimension function."""
from __future__ import annotations

import math
from collections import defaultdict, deque
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import GammaMismatchError, PreconditionError, TLJError, UnsupportedError
from .fair import (
    BalancedInvolution,
    FairGraph,
    a_path_quantum_dim,
    check_fair,
    check_involution,
    cluster_weights,
    cover,
    fair_graph,
    find_balanced_involution,
    integer_multigraph,
    relabel,
    two_vertex_reciprocal,
)
from .graph import BiGraph, gamma1, gammas_equal, validate_bigraph
from .report import ValidationReport, Violation, make_report
from .solution import (
    BlockKey,
    FundamentalSolution,
    _check_unitary,
    check_zigzag,
    conjugate_solution,
    cups_from_phi,
    key_str,
    phi_from_cups,
    random_unitary_family,
)


# -- solution -> graph ---------------------------------------------------------

def vertex_id(a: str, v: str) -> str:
    return f"{a}:{v}"


def edge_id(e: str, v: str, w: str, k: int) -> str:
    return f"{e}:{v}:{w}:{k}"


def graph_from_solution(s: FundamentalSolution, tol: float) -> FairGraph:
    """One vertex per grading label; ``dim_e(v,w)`` edges per block, weighted by
    the spectrum of ``Phi^* Phi`` (ascending, with multiplicity)."""
    report = check_zigzag(s, tol)
    if not report.ok:
        raise PreconditionError(f"solution fails the zigzag check: {sorted(report.codes())}")
    g = s.gamma
    vertices = {vertex_id(a, v): a for a, vs in s.gradings.items() for v in vs}
    rows = []
    for (e, v, w), phi in phi_from_cups(s).items():
        a, b = g.source(e), g.target(e)
        for k, lam in enumerate(phi.spectrum()):
            rows.append((edge_id(e, v, w, k), vertex_id(a, v), vertex_id(b, w), float(lam), e))
    return fair_graph(g, vertices, rows)


# -- graph -> solution -----------------------------------------------------------

def solution_from_graph(
    l: FairGraph, tol: float, involution: BalancedInvolution | None = None
) -> FundamentalSolution:
    """Fibers become grading sets, edges become orthonormal bases, and
    ``Phi(eps) = sqrt(w(eps)) * pair(eps)``.

    ``involution`` defaults to the deterministic one found by
    :func:`find_balanced_involution`; a supplied one is checked first.
    """
    if not check_fair(l, tol).ok:
        raise PreconditionError("solution_from_graph requires a fair graph")
    if involution is None:
        involution = find_balanced_involution(l, tol)
        if involution is None:
            raise PreconditionError("solution_from_graph requires a balanced graph")
    else:
        rep = check_involution(l, involution, tol)
        if not rep.ok:
            raise PreconditionError(f"supplied involution is not balanced: {sorted(rep.codes())}")
    g = l.gamma
    gradings = {a: l.fiber(a) for a in g.vertices}
    basis: dict[BlockKey, list[str]] = defaultdict(list)
    for e in l.edges:  # edges are sorted by id
        basis[(e.pi, e.source, e.target)].append(e.id)
    position = {eid: (key, i) for key, ids in basis.items() for i, eid in enumerate(ids)}
    phi = {}
    for key, ids in basis.items():
        e, v, w = key
        partner_key = (g.dual(e), w, v)
        m = np.zeros((len(basis[partner_key]), len(ids)), dtype=complex)
        for k, eid in enumerate(ids):
            pkey, row = position[involution[eid]]
            assert pkey == partner_key
            m[row, k] = math.sqrt(l.edge_by_id[eid].weight)
        phi[key] = m
    return cups_from_phi(phi, g, gradings, {k: len(v) for k, v in basis.items()})


# -- isomorphism -------------------------------------------------------------------

@dataclass(frozen=True)
class IsoWitness:
    vertex_map: dict[str, str]
    edge_map: dict[str, str]

    def to_dict(self) -> dict:
        return {"vertex_map": dict(sorted(self.vertex_map.items())), "edge_map": dict(sorted(self.edge_map.items()))}


def _weight_classes(weights: list[float], tol: float) -> dict[float, int]:
    classes = {}
    for i, cl in enumerate(cluster_weights(weights, tol)):
        for x in cl:
            classes[x] = i
    return classes


def _refine(graphs: list[FairGraph], wclass: dict[float, int]) -> dict[tuple[int, str], int]:
    """Colour refinement on the disjoint union; returns a stable colouring."""
    nodes = [(i, v.id) for i, l in enumerate(graphs) for v in l.vertices]
    pi = {(i, v.id): v.pi for i, l in enumerate(graphs) for v in l.vertices}
    incident: dict[tuple[int, str], list[tuple[str, str, int, tuple[int, str]]]] = defaultdict(list)
    for i, l in enumerate(graphs):
        for e in l.edges:
            c = wclass[e.weight]
            incident[(i, e.source)].append(("out", e.pi, c, (i, e.target)))
            incident[(i, e.target)].append(("in", e.pi, c, (i, e.source)))
    names = sorted(set(pi.values()))
    colour = {n: names.index(pi[n]) for n in nodes}
    count = len(set(colour.values()))
    while True:
        sig = {
            n: (colour[n], tuple(sorted((d, p, c, colour[m]) for d, p, c, m in incident[n])))
            for n in nodes
        }
        palette = {s: k for k, s in enumerate(sorted(set(sig.values())))}
        colour = {n: palette[sig[n]] for n in nodes}
        if len(palette) == count:
            return colour
        count = len(palette)


def fair_graph_isomorphic(l1: FairGraph, l2: FairGraph, tol: float) -> IsoWitness | None:
    """Isomorphism respecting projections and weights, by colour refinement
    followed by backtracking over colour classes."""
    if not gammas_equal(l1.gamma, l2.gamma):
        raise GammaMismatchError("fair graphs live over different base graphs")
    if len(l1.vertices) != len(l2.vertices) or len(l1.edges) != len(l2.edges):
        return None
    wclass = _weight_classes([e.weight for e in l1.edges + l2.edges], tol)
    colour = _refine([l1, l2], wclass)
    classes: list[dict[int, list[str]]] = [defaultdict(list), defaultdict(list)]
    for (i, v), c in sorted(colour.items()):
        classes[i][c].append(v)
    if {c: len(vs) for c, vs in classes[0].items()} != {c: len(vs) for c, vs in classes[1].items()}:
        return None

    def bundles(l: FairGraph) -> dict[tuple[str, str], list]:
        out: dict[tuple[str, str], list] = defaultdict(list)
        for e in l.edges:
            out[(e.source, e.target)].append((e.pi, wclass[e.weight], e.weight, e.id))
        return {k: sorted(v) for k, v in out.items()}

    b1, b2 = bundles(l1), bundles(l2)

    def signature(b: dict, x: str, y: str) -> list:
        return [(p, c) for p, c, _, _ in b.get((x, y), ())]

    order = sorted(
        (v for vs in classes[0].values() for v in vs),
        key=lambda v: (len(classes[0][colour[(0, v)]]), colour[(0, v)], v),
    )
    vmap: dict[str, str] = {}
    used: set[str] = set()

    def consistent(x: str, y: str) -> bool:
        for u, fu in list(vmap.items()) + [(x, y)]:
            if signature(b1, x, u) != signature(b2, y, fu) or signature(b1, u, x) != signature(b2, fu, y):
                return False
        return True

    def search(i: int) -> bool:
        if i == len(order):
            return True
        x = order[i]
        for y in classes[1][colour[(0, x)]]:
            if y in used or not consistent(x, y):
                continue
            vmap[x] = y
            used.add(y)
            if search(i + 1):
                return True
            del vmap[x]
            used.discard(y)
        return False

    if not search(0):
        return None
    emap = {}
    for (x, y), es in b1.items():
        for (_, _, w1, e1), (_, _, w2, e2) in zip(es, b2[(vmap[x], vmap[y])]):
            emap[e1] = e2
    return IsoWitness(dict(sorted(vmap.items())), dict(sorted(emap.items())))


def check_iso_witness(l1: FairGraph, l2: FairGraph, wit: IsoWitness, tol: float) -> ValidationReport:
    """Independent check that a witness is an isomorphism of fair graphs."""
    violations = []
    vm, em = wit.vertex_map, wit.edge_map
    if sorted(vm) != l1.vertex_ids() or sorted(vm.values()) != l2.vertex_ids():
        violations.append(Violation("NOT_BIJECTION", (), "vertex map is not a bijection"))
    if sorted(em) != sorted(l1.edge_by_id) or sorted(em.values()) != sorted(l2.edge_by_id):
        violations.append(Violation("NOT_BIJECTION", (), "edge map is not a bijection"))
    if violations:
        return make_report(violations)
    for v, fv in vm.items():
        if l1.vertex_pi[v] != l2.vertex_pi[fv]:
            violations.append(Violation("PI_MISMATCH", (v, fv), "projection not preserved"))
    for eid, fid in em.items():
        e, f = l1.edge_by_id[eid], l2.edge_by_id[fid]
        if vm[e.source] != f.source or vm[e.target] != f.target:
            violations.append(Violation("NOT_HOMOMORPHISM", (eid, fid), "endpoints not preserved"))
        if e.pi != f.pi:
            violations.append(Violation("PI_MISMATCH", (eid, fid), "projection not preserved"))
        if abs(e.weight - f.weight) > tol * max(1.0, abs(e.weight)):
            violations.append(Violation("WEIGHT_MISMATCH", (eid, fid), f"{e.weight!r} vs {f.weight!r}"))
    return make_report(violations)


# -- equivalence of solutions ----------------------------------------------------------

def solutions_equivalent(s: FundamentalSolution, t: FundamentalSolution, tol: float) -> bool:
    """Unitary equivalence, decided by isomorphism of the induced fair graphs."""
    if not gammas_equal(s.gamma, t.gamma):
        raise GammaMismatchError("solutions live over different base graphs")
    return fair_graph_isomorphic(graph_from_solution(s, tol), graph_from_solution(t, tol), tol) is not None


def verify_equivalence_witness(
    s: FundamentalSolution,
    t: FundamentalSolution,
    u: Mapping[BlockKey, np.ndarray],
    bijections: Mapping[str, Mapping[str, str]] | None,
    tol: float,
) -> bool:
    """Check ``Phi_t[e, phi(v), phi(w)] = U[ebar, w, v] Phi_s[e, v, w] U[e, v, w]^*`` blockwise.

    In matrices (``Phi(x) = A conj(x)``) this reads
    ``A_t = U[ebar,w,v] @ A_s @ U[e,v,w].T``, the same identity as
    ``C_t = (U (x) U) C_s``.  ``u`` is indexed by the blocks of ``s``;
    ``bijections[a]`` maps the grading set of ``s`` at ``a`` onto that of ``t``
    (identity when omitted).
    """
    if not gammas_equal(s.gamma, t.gamma):
        raise GammaMismatchError("solutions live over different base graphs")
    g = s.gamma
    if bijections is None:
        bijections = {a: {v: v for v in vs} for a, vs in s.gradings.items()}
    for a, vs in s.gradings.items():
        phi_a = bijections.get(a, {})
        if sorted(phi_a) != sorted(vs) or sorted(phi_a.values()) != sorted(t.gradings.get(a, ())):
            raise ValueError(f"vertex bijection at {a!r} does not match the grading sets")
    if len(s.cups) != len(t.cups):
        raise ValueError("solutions have different numbers of nonzero blocks")
    for k, n in s.dims.items():
        if k not in u:
            raise ValueError(f"no unitary supplied for block {key_str(k)}")
        uk = np.asarray(u[k])
        if uk.shape != (n, n):
            raise ValueError(f"unitary for {key_str(k)} has shape {uk.shape}, expected {(n, n)}")
        if not _check_unitary(uk):
            raise ValueError(f"matrix for {key_str(k)} is not unitary")
    a_s = phi_from_cups(s)
    a_t = phi_from_cups(t)
    for (e, v, w), blk in a_s.items():
        fv = bijections[g.source(e)][v]
        fw = bijections[g.target(e)][w]
        target = a_t.get((e, fv, fw))
        if target is None or target.matrix.shape != blk.matrix.shape:
            raise ValueError(f"block shapes differ under the bijections at {key_str((e, v, w))}")
        expected = np.asarray(u[(g.dual(e), w, v)]) @ blk.matrix @ np.asarray(u[(e, v, w)]).T
        if np.max(np.abs(expected - target.matrix), initial=0.0) > tol:
            return False
    return True


# -- dimension functions -------------------------------------------------------------------

@dataclass(frozen=True)
class DimensionFunction:
    d: dict[str, float]

    def __getitem__(self, v: str) -> float:
        return self.d[v]


@dataclass(frozen=True)
class InconsistentCycle:
    """A closed walk, with ``signs[i] = +1`` where ``edges[i]`` is traversed forwards."""

    edges: tuple[str, ...]
    signs: tuple[int, ...]
    product: float


def _require_fair_balanced(l: FairGraph, tol: float) -> None:
    if not check_fair(l, tol).ok or find_balanced_involution(l, tol) is None:
        raise PreconditionError("graph must be fair and balanced")


def _potentials(l: FairGraph, tol: float) -> tuple[dict[str, float], InconsistentCycle | None]:
    """Spanning-forest propagation ``d(beta) = d(alpha) w(eps)``; returns the
    first inconsistent non-tree edge as a cycle."""
    incident: dict[str, list] = defaultdict(list)
    for e in l.edges:  # sorted by id
        if e.source != e.target:
            incident[e.source].append((e, +1))
            incident[e.target].append((e, -1))
    d: dict[str, float] = {}
    parent: dict[str, tuple[str, int] | None] = {}
    tree: set[str] = set()
    for root in l.vertex_ids():
        if root in d:
            continue
        d[root] = 1.0
        parent[root] = None
        queue = deque([root])
        while queue:
            x = queue.popleft()
            for e, sign in incident[x]:
                y = e.target if sign > 0 else e.source
                if y in d:
                    continue
                d[y] = d[x] * e.weight if sign > 0 else d[x] / e.weight
                parent[y] = (e.id, sign)
                tree.add(e.id)
                queue.append(y)

    def path_to_root(x: str) -> list[tuple[str, int]]:
        out = []
        while parent[x] is not None:
            eid, sign = parent[x]
            out.append((eid, sign))
            e = l.edge_by_id[eid]
            x = e.source if sign > 0 else e.target
        return out

    rest = sorted((e for e in l.edges if e.id not in tree), key=lambda e: (e.source == e.target, e.id))
    for e in rest:
        ratio = e.weight * d[e.source] / d[e.target]
        if abs(ratio - 1.0) > tol:
            # eps: alpha -> beta, then the tree path beta -> alpha.
            up_beta = path_to_root(e.target)
            up_alpha = path_to_root(e.source)
            common = {eid for eid, _ in up_beta} & {eid for eid, _ in up_alpha}
            up_beta = [x for x in up_beta if x[0] not in common]
            up_alpha = [x for x in up_alpha if x[0] not in common]
            # Climbing from beta reverses each tree edge; descending to alpha keeps it.
            walk = [(e.id, +1)] + [(eid, -s) for eid, s in up_beta] + list(reversed(up_alpha))
            return d, InconsistentCycle(tuple(x for x, _ in walk), tuple(s for _, s in walk), ratio)
    return d, None


def check_dimension_function(l: FairGraph, d: Mapping[str, float], tol: float) -> ValidationReport:
    """Edge ratios plus both sum conditions, checked directly."""
    g = l.gamma
    violations = []
    for e in l.edges:
        r = d[e.target] / d[e.source]
        if abs(r - e.weight) > tol * max(1.0, e.weight):
            violations.append(Violation("RATIO", (e.id,), f"d ratio {r!r} vs weight {e.weight!r}"))
    out_sum: dict[tuple[str, str], float] = defaultdict(float)
    in_sum: dict[tuple[str, str], float] = defaultdict(float)
    for e in l.edges:
        out_sum[(e.source, e.pi)] += d[e.target] / d[e.source]
        in_sum[(e.target, e.pi)] += d[e.source] / d[e.target]
    for ed in g.edges:
        for alpha in l.fiber(ed.source):
            x = out_sum.get((alpha, ed.id), 0.0)
            if abs(x - ed.weight) > tol * max(1.0, ed.weight):
                violations.append(Violation("OUTGOING_SUM", (alpha, ed.id), f"{x!r} vs {ed.weight!r}"))
        for beta in l.fiber(ed.target):
            x = in_sum.get((beta, ed.id), 0.0)
            if abs(x - ed.weight) > tol * max(1.0, ed.weight):
                violations.append(Violation("INCOMING_SUM", (beta, ed.id), f"{x!r} vs {ed.weight!r}"))
    return make_report(violations)


def check_mw_type(l: FairGraph, tol: float) -> DimensionFunction | None:
    """A dimension function with ``w(alpha -> beta) = d(beta)/d(alpha)``, or
    None when some cycle has weight product different from 1.

    ``d`` is 1 at the smallest vertex id of each connected component.
    """
    _require_fair_balanced(l, tol)
    d, bad = _potentials(l, tol)
    if bad is not None:
        return None
    report = check_dimension_function(l, d, 10 * tol)
    if not report.ok:
        raise TLJError(f"dimension function fails its own sum conditions: {report.violations[0].message}")
    return DimensionFunction(dict(sorted(d.items())))


def find_inconsistent_cycle(l: FairGraph, tol: float) -> InconsistentCycle | None:
    _require_fair_balanced(l, tol)
    return _potentials(l, tol)[1]


# -- random solutions ----------------------------------------------------------------

def _single_vertex(g: BiGraph) -> bool:
    return len(g.vertices) == 1


def _reciprocal_root(delta: float) -> float:
    return (delta + math.sqrt(delta * delta - 4.0)) / 2.0


def _base_family(g: BiGraph) -> FairGraph:
    """A balanced fair graph for ``g`` from the built-in families."""
    if gammas_equal(g, gamma1()):
        from .fair import lambda1

        return lambda1()
    loops = g.edges
    if _single_vertex(g) and len(loops) == 1 and loops[0].dual == loops[0].id:
        (x,) = g.vertices
        e = loops[0]
        delta = e.weight
        if math.isclose(delta, 1.0, rel_tol=1e-12):
            return fair_graph(g, {"v": x}, [("loop", "v", "v", 1.0, e.id)])
        if delta > 2.0 or math.isclose(delta, 2.0, rel_tol=1e-12):
            lam = _reciprocal_root(max(delta, 2.0))
            return fair_graph(g, {"v": x}, [("big", "v", "v", lam, e.id), ("small", "v", "v", 1 / lam, e.id)])
        n = round(math.pi / math.acos(delta / 2.0)) - 1
        if n >= 2 and math.isclose(delta, 2 * math.cos(math.pi / (n + 1)), rel_tol=1e-12):
            return a_path_quantum_dim(g, n)
        raise UnsupportedError(
            f"loop value {delta!r} is below 2 and not of the form 2cos(pi/(n+1)); no unitary example exists"
        )
    if _single_vertex(g) and len(loops) == 2 and loops[0].dual == loops[1].id:
        delta = loops[0].weight
        if delta >= 2.0:
            return two_vertex_reciprocal(g, _reciprocal_root(delta))
    try:
        return integer_multigraph(g)
    except UnsupportedError:
        raise UnsupportedError(
            "no built-in family covers this base graph: it is not Gamma_1, not a single loop or loop pair "
            "with an admissible value, and its loop values are not all integers"
        ) from None


def random_solution(g: BiGraph, seed: int, sheets: int = 1) -> FundamentalSolution:
    """A structured balanced fair graph for ``g`` (optionally covered), relabelled
    and turned into a solution, then conjugated by random unitaries."""
    if not validate_bigraph(g).ok:
        raise PreconditionError("random_solution requires a valid base graph")
    l = _base_family(g)
    if sheets > 1:
        l = cover(l, sheets)
    l = relabel(l, seed)
    s = solution_from_graph(l, 1e-10)
    rng = np.random.default_rng(seed)
    return conjugate_solution(s, random_unitary_family(s, rng))


__all__ = [
    "DimensionFunction",
    "InconsistentCycle",
    "IsoWitness",
    "check_dimension_function",
    "check_iso_witness",
    "check_mw_type",
    "fair_graph_isomorphic",
    "find_inconsistent_cycle",
    "graph_from_solution",
    "random_solution",
    "solution_from_graph",
    "solutions_equivalent",
    "verify_equivalence_witness",
]
