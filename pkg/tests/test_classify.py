import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from corpus import a_path, base_corpus, gamma0, tvr
from oracles import brute_force_isomorphic
from tljmod import (
    FundamentalSolution,
    GammaMismatchError,
    PreconditionError,
    UnsupportedError,
    check_fair,
    conjugate_solution,
    find_balanced_involution,
    gamma1,
    graph_from_solution,
    lambda1,
    random_unitary_family,
    solution_from_graph,
    solutions_equivalent,
    standard_gamma,
    verify_equivalence_witness,
)
from tljmod.classify import (
    check_dimension_function,
    check_iso_witness,
    check_mw_type,
    fair_graph_isomorphic,
    find_inconsistent_cycle,
    random_solution,
)
from tljmod.fair import FairGraph, fair_graph, relabel
from dataclasses import replace


def test_graph_from_trivial_solution():
    s = FundamentalSolution(gamma0(1.0), {"*": ["v"]}, {("e", "v", "v"): [[1.0]]})
    l = graph_from_solution(s, 1e-12)
    assert len(l.vertices) == 1 and len(l.edges) == 1 and l.edges[0].weight == 1.0
    assert l.edges[0].source == l.edges[0].target


def test_graph_from_hand_block():
    a = np.array([[0, math.sqrt(2)], [1 / math.sqrt(2), 0]])
    s = FundamentalSolution(gamma0(2.5), {"*": ["v"]}, {("e", "v", "v"): a.T})
    l = graph_from_solution(s, 1e-12)
    assert [e.weight for e in l.edges] == pytest.approx([0.5, 2.0], abs=1e-15)
    assert [e.id for e in l.edges] == ["e:v:v:0", "e:v:v:1"]
    assert check_fair(l, 1e-11).ok and find_balanced_involution(l, 1e-11) is not None


def test_graph_from_solution_precondition():
    s = FundamentalSolution(gamma0(2.0), {"*": ["v"]}, {("e", "v", "v"): [[1.0]]})
    with pytest.raises(PreconditionError):
        graph_from_solution(s, 1e-12)


def test_solution_from_graph_examples():
    l = fair_graph(gamma0(1.0), {"v": "*"}, [("x", "v", "v", 1.0, "e")])
    s = solution_from_graph(l, 1e-12)
    assert s.cups == {("e", "v", "v"): np.array([[1.0]])} or s.cups[("e", "v", "v")].tolist() == [[1]]
    with pytest.raises(PreconditionError):
        solution_from_graph(fair_graph(gamma0(2.0), {"v": "*"}, [("a", "v", "v", 0.5, "e"), ("b", "v", "v", 1.5, "e")]), 1e-9)
    with pytest.raises(PreconditionError):
        solution_from_graph(fair_graph(gamma0(2.0), {"v": "*"}, [("a", "v", "v", 1.0, "e")]), 1e-9)


def test_iso_examples():
    l = lambda1()
    assert fair_graph_isomorphic(l, relabel(l, 7), 1e-9) is not None
    bumped = FairGraph(l.gamma, l.vertices, tuple(replace(e, weight=2.0) if e.id == "a:w1" else e for e in l.edges))
    assert fair_graph_isomorphic(l, bumped, 1e-9) is None
    a3 = a_path(3)
    rev = {"v1": "v3", "v2": "v2", "v3": "v1"}
    reversed_a3 = fair_graph(a3.gamma, {rev[v.id]: v.pi for v in a3.vertices}, [
        (e.id, rev[e.source], rev[e.target], e.weight, e.pi) for e in a3.edges
    ])
    wit = fair_graph_isomorphic(a3, reversed_a3, 1e-9)
    assert wit is not None and check_iso_witness(a3, reversed_a3, wit, 1e-9).ok
    with pytest.raises(GammaMismatchError):
        fair_graph_isomorphic(lambda1(), a3, 1e-9)


def test_iso_is_deterministic():
    l = lambda1()
    assert fair_graph_isomorphic(l, relabel(l, 3), 1e-9) == fair_graph_isomorphic(l, relabel(l, 3), 1e-9)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31), st.sampled_from([n for n, l in base_corpus() if len(l.vertices) <= 7]))
def test_iso_matches_brute_force(seed, name):
    l = dict(base_corpus())[name]
    rng = np.random.default_rng(seed)
    other = relabel(l, seed)
    if rng.random() < 0.5:
        victim = l.edges[int(rng.integers(len(l.edges)))].id
        other = FairGraph(other.gamma, other.vertices, tuple(other.edges))
        other = FairGraph(l.gamma, l.vertices, tuple(replace(e, weight=e.weight * 1.5) if e.id == victim else e for e in l.edges))
        other = relabel(other, seed)
    fast = fair_graph_isomorphic(l, other, 1e-9)
    assert (fast is not None) == brute_force_isomorphic(l, other, 1e-9)
    if fast is not None:
        assert check_iso_witness(l, other, fast, 1e-9).ok


def test_solutions_equivalent_examples():
    s = solution_from_graph(lambda1(), 1e-12)
    assert solutions_equivalent(s, s, 1e-9)
    u = random_unitary_family(s, np.random.default_rng(0))
    assert solutions_equivalent(s, conjugate_solution(s, u), 1e-9)
    with pytest.raises(GammaMismatchError):
        solutions_equivalent(s, solution_from_graph(a_path(3), 1e-12), 1e-9)
    # the same two-vertex graph with its weights swapped across the vertices
    t = tvr(2)
    swap = {"v": "w", "w": "v"}
    swapped = fair_graph(t.gamma, {"v": "*", "w": "*"}, [
        (e.id, swap[e.source], swap[e.target], e.weight, e.pi) for e in t.edges
    ])
    assert solutions_equivalent(solution_from_graph(t, 1e-12), solution_from_graph(swapped, 1e-12), 1e-9)
    assert brute_force_isomorphic(t, swapped, 1e-9)


def test_verify_witness():
    s = random_solution(gamma1(), 4)
    u = random_unitary_family(s, np.random.default_rng(1))
    t = conjugate_solution(s, u)
    assert verify_equivalence_witness(s, t, u, None, 1e-10)
    ident = {k: np.eye(n) for k, n in s.dims.items()}
    assert not verify_equivalence_witness(s, t, ident, None, 1e-10)
    with pytest.raises(ValueError):
        verify_equivalence_witness(s, t, {k: 2 * m for k, m in ident.items()}, None, 1e-10)


def test_verify_witness_phase_example():
    o = standard_gamma("oriented", [1.0])
    s = FundamentalSolution(o, {"*": ["v"]}, {("e", "v", "v"): [[1]], ("ebar", "v", "v"): [[1]]})
    t = FundamentalSolution(o, {"*": ["v"]}, {("e", "v", "v"): [[1j]], ("ebar", "v", "v"): [[1j]]})
    u = {("e", "v", "v"): [[1j]], ("ebar", "v", "v"): [[1]]}
    assert verify_equivalence_witness(s, t, u, {"*": {"v": "v"}}, 1e-12)
    assert not verify_equivalence_witness(s, t, {("e", "v", "v"): [[1]], ("ebar", "v", "v"): [[1]]}, None, 1e-12)


def test_verify_witness_with_bijection():
    l = lambda1()
    s = solution_from_graph(l, 1e-12)
    ren = {"w1": "w2", "w2": "w1", "g1": "g1", "g2": "g2", "s1": "s1", "s2": "s2"}
    t = FundamentalSolution(s.gamma, s.gradings, {(e, ren[v], ren[w]): c for (e, v, w), c in s.cups.items()})
    ident = {k: np.eye(n) for k, n in s.dims.items()}
    bij = {a: {v: ren[v] for v in vs} for a, vs in s.gradings.items()}
    assert verify_equivalence_witness(s, t, ident, bij, 1e-12)
    with pytest.raises(ValueError):
        verify_equivalence_witness(s, t, ident, {"white": {"w1": "w1"}}, 1e-12)


def test_mw_examples():
    d = check_mw_type(lambda1(), 1e-9)
    assert d is not None and set(d.d.values()) == {1.0}
    l = tvr(2)
    assert check_mw_type(l, 1e-9) is None
    cyc = find_inconsistent_cycle(l, 1e-9)
    assert cyc.edges == ("e:w->v", "e:v->w") and cyc.product == pytest.approx(0.25, abs=1e-12)
    d = check_mw_type(a_path(3), 1e-9)
    assert [d[v] for v in ("v1", "v2", "v3")] == pytest.approx([1, math.sqrt(2), 1], abs=1e-12)
    assert check_mw_type(tvr(1), 1e-9) is not None
    with pytest.raises(PreconditionError):
        check_mw_type(fair_graph(gamma0(2.0), {"v": "*"}, [("a", "v", "v", 0.5, "e"), ("b", "v", "v", 1.5, "e")]), 1e-9)


def test_cycle_product_matches_walk():
    for a in (2, 5, 0.3):
        l = tvr(a)
        cyc = find_inconsistent_cycle(l, 1e-9)
        prod = 1.0
        for eid, sign in zip(cyc.edges, cyc.signs):
            w = l.edge_by_id[eid].weight
            prod *= w if sign > 0 else 1 / w
        assert prod == pytest.approx(cyc.product, rel=1e-12)


def test_mw_sum_conditions_on_covers():
    from tljmod.fair import cover

    for l in (cover(a_path(4), 3), cover(lambda1(), 2)):
        d = check_mw_type(l, 1e-9)
        assert d is not None and check_dimension_function(l, d.d, 1e-9).ok


def test_random_solution_examples():
    s = random_solution(gamma0(2 * math.cos(math.pi / 5)), 7)
    assert sum(len(v) for v in s.gradings.values()) == 4
    from tljmod import check_zigzag

    assert check_zigzag(s, 1e-10).ok
    s = random_solution(gamma0(1.0), 11)
    (c,) = s.cups.values()
    assert c.shape == (1, 1) and abs(abs(c[0, 0]) - 1) < 1e-12
    s = random_solution(gamma1(), 0)
    assert fair_graph_isomorphic(graph_from_solution(s, 1e-10), lambda1(), 1e-9) is not None
    assert random_solution(gamma1(), 5).cups.keys() == random_solution(gamma1(), 5).cups.keys()
    a = random_solution(gamma1(), 5)
    b = random_solution(gamma1(), 5)
    assert all(np.array_equal(a.cups[k], b.cups[k]) for k in a.cups)
    with pytest.raises(UnsupportedError):
        random_solution(gamma0(1.5), 0)
    s = random_solution(standard_gamma("oriented", [3.0]), 1, sheets=2)
    assert sum(len(v) for v in s.gradings.values()) == 4


def test_involution_choice_gives_isomorphic_graphs():
    l = lambda1()
    a = find_balanced_involution(l, 1e-12)
    b = find_balanced_involution(l, 1e-12, fix_self_paired=True)
    assert a != b
    ga = graph_from_solution(solution_from_graph(l, 1e-12, a), 1e-12)
    gb = graph_from_solution(solution_from_graph(l, 1e-12, b), 1e-12)
    assert fair_graph_isomorphic(ga, gb, 1e-9) is not None


def test_reciprocity_of_induced_graph():
    for _, l in base_corpus():
        g = graph_from_solution(random_solution(l.gamma, 3) if False else solution_from_graph(l, 1e-12), 1e-12)
        groups = {}
        for e in g.edges:
            groups.setdefault((e.source, e.target, e.pi), []).append(e.weight)
        for (v, w, p), ws in groups.items():
            back = sorted(1 / x for x in groups[(w, v, g.gamma.dual(p))])
            assert sorted(ws) == pytest.approx(back, rel=1e-9)
