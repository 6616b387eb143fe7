import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from corpus import gamma0
from tljmod import (
    BiGraph,
    CompositionError,
    Diagram,
    Edge,
    GammaPath,
    Morphism2,
    adjoint,
    compose_horizontal,
    compose_vertical,
    decompose_to_slices,
    gamma1,
    identity_diagram,
    make_cap,
    make_cup,
    make_path,
    standard_gamma,
    validate_diagram,
)
from tljmod.diagrams import cap_slice, cup_slice, fold_slices, random_diagram, random_path

B, T = "bottom", "top"


def test_cup_cap_identity_shapes():
    g = gamma0(2.0)
    cup = make_cup(g, "e")
    assert cup.bottom.edges == () and cup.top.edges == ("e", "e") and cup.arcs == (((T, 0), (T, 1)),)
    assert validate_diagram(cup).ok
    p = make_path(g, ["e"])
    ident = identity_diagram(p)
    assert ident.arcs == (((B, 0), (T, 0)),) and ident.is_identity()
    s = standard_gamma("shaded", [1.0])
    cap = make_cap(s, "e")
    assert cap.bottom.edges == ("e", "ebar") and cap.top.edges == () and cap.top.at == "white"
    assert validate_diagram(cap).ok
    with pytest.raises(KeyError):
        make_cup(g, "nope")


def _gamma_c_d():
    # two vertices with a dual pair c/cbar between them and a self-dual loop d at the second
    return BiGraph(
        ("x", "y"),
        (Edge("c", "x", "y", 2.0, "cbar"), Edge("cbar", "y", "x", 2.0, "c"), Edge("d", "y", "y", 2.0, "d")),
    )


def test_three_point_figure_is_valid():
    g = _gamma_c_d()
    bottom = make_path(g, ["cbar", "c", "cbar"])
    top = make_path(g, ["d", "d", "cbar"])
    d = Diagram(bottom, top, (((B, 0), (B, 1)), ((T, 0), (T, 1)), ((B, 2), (T, 2))))
    assert validate_diagram(d).ok


def test_crossing_detected():
    g = BiGraph(("*",), (Edge("e", "*", "*", 1.0, "e"), Edge("f", "*", "*", 1.0, "f")))
    d = Diagram(make_path(g, ["e", "f"]), make_path(g, ["f", "e"]), (((B, 0), (T, 1)), ((B, 1), (T, 0))))
    assert "CROSSING" in validate_diagram(d).codes()
    d = Diagram(
        make_path(g, ["e", "e", "e", "e"]), make_path(g, [], "*"), (((B, 0), (B, 2)), ((B, 1), (B, 3)))
    )
    assert validate_diagram(d).codes() == {"CROSSING"}


def test_label_rule():
    g = standard_gamma("oriented", [2.0])
    d = Diagram(make_path(g, [], "*"), make_path(g, ["e", "e"]), (((T, 0), (T, 1)),))
    assert "LABEL_RULE" in validate_diagram(d).codes()


def test_matching_and_endpoint_errors():
    g = gamma0(2.0)
    d = Diagram(make_path(g, ["e"]), make_path(g, ["e"]), ())
    assert "NOT_A_MATCHING" in validate_diagram(d).codes()
    s = standard_gamma("shaded", [1.0])
    d = Diagram(GammaPath(s, (), "white"), GammaPath(s, (), "shaded"), ())
    assert "ENDPOINT_MISMATCH" in validate_diagram(d).codes()
    d = Diagram(GammaPath(s, ("e", "e"), "white"), GammaPath(s, (), "white"), ())
    assert "PATH_INVALID" in validate_diagram(d).codes()


def test_loop_and_zigzag():
    g = gamma1()
    for e in g.edge_ids():
        m = compose_vertical(make_cup(g, e), make_cap(g, e))
        (d,) = m.terms
        assert d.bottom.edges == () and m.coefficient(d) == g.weight(e)
    ed = g.edge("b")
    strand = make_path(g, ["b"])
    up = compose_horizontal(identity_diagram(strand), make_cup(g, "bbar"))  # b -> b bbar b
    down = compose_horizontal(make_cap(g, "b"), identity_diagram(make_path(g, ["b"])))  # b bbar b -> b
    zig = compose_vertical(up, down)
    assert zig == Morphism2.of(identity_diagram(strand))
    assert ed.dual == "bbar"


def test_identity_composition():
    g = gamma0(2.0)
    i = identity_diagram(make_path(g, ["e", "e"]))
    assert compose_vertical(i, i) == Morphism2.of(i)


def test_composition_error_names_position():
    g = gamma1()
    with pytest.raises(CompositionError, match="position 1"):
        compose_vertical(identity_diagram(make_path(g, ["b", "bbar"])), identity_diagram(make_path(g, ["b", "c"])))


def test_horizontal():
    g = gamma1()
    d = compose_horizontal(identity_diagram(make_path(g, ["b"])), make_cup(g, "c"))
    (x,) = d.terms
    assert x.top.edges == ("b", "c", "cbar") and validate_diagram(x).ok
    assert x.arcs == (((B, 0), (T, 0)), ((T, 1), (T, 2)))
    unit = identity_diagram(GammaPath(g, (), "white"))
    cup = make_cup(g, "b")
    assert compose_horizontal(unit, cup) == Morphism2.of(cup)
    with pytest.raises(CompositionError):
        compose_horizontal(make_cup(g, "c"), cup)


def test_adjoint():
    g = gamma1()
    assert adjoint(make_cup(g, "b")) == Morphism2.of(make_cap(g, "b"))
    i = identity_diagram(make_path(g, ["b", "c"]))
    assert adjoint(i) == Morphism2.of(i)
    assert adjoint(Morphism2.of(make_cup(g, "b"), 2 + 1j)) == Morphism2.of(make_cap(g, "b"), 2 - 1j)


def test_decompose_examples():
    g = gamma1()
    i = identity_diagram(make_path(g, ["b", "c"]))
    (s,) = decompose_to_slices(i)
    assert s.kind == "identity"
    (s,) = decompose_to_slices(make_cup(g, "b"))
    assert (s.kind, s.position, s.edge) == ("cup", 0, "b")
    strand = make_path(g, ["b"])
    layers = [cup_slice(strand, 1, "bbar"), None]
    layers[1] = cap_slice(layers[0].top, 0)
    assert [(x.kind, x.position, x.edge) for x in layers] == [("cup", 1, "bbar"), ("cap", 0, "b")]
    zig = fold_slices(layers)
    (d,) = zig.terms
    assert d.is_identity()
    assert [x.kind for x in decompose_to_slices(d)] == ["identity"]


def _diagram_strategy():
    return st.tuples(st.integers(0, 2**32 - 1), st.integers(0, 4), st.integers(0, 5))


@settings(max_examples=80, deadline=None)
@given(_diagram_strategy())
def test_decompose_roundtrip(params):
    seed, length, count = params
    rng = np.random.default_rng(seed)
    g = gamma1()
    d = random_diagram(random_path(g, rng, length), rng, count)
    assert validate_diagram(d).ok
    for leftmost in (True, False):
        slices = decompose_to_slices(d, leftmost=leftmost)
        assert fold_slices(slices) == Morphism2.of(d)
        assert sum(s.kind != "identity" for s in slices) == len(slices) or len(slices) == 1


@settings(max_examples=60, deadline=None)
@given(_diagram_strategy())
def test_associativity_and_star(params):
    seed, length, count = params
    rng = np.random.default_rng(seed)
    g = gamma1()
    f = Morphism2.of(random_diagram(random_path(g, rng, length), rng, count), complex(rng.normal(), rng.normal()))
    h = Morphism2.of(random_diagram(f.top, rng, count), 1.5)
    r = random_diagram(h.top, rng, count)
    k = Morphism2.of(identity_diagram(h.top)) + compose_vertical(r, adjoint(r)) * 0.5j
    left = compose_vertical(compose_vertical(f, h), k)
    right = compose_vertical(f, compose_vertical(h, k))
    assert left.close_to(right)
    assert adjoint(compose_vertical(f, h)).close_to(compose_vertical(adjoint(h), adjoint(f)))
    assert adjoint(adjoint(f)) == f


@settings(max_examples=40, deadline=None)
@given(_diagram_strategy())
def test_interchange(params):
    seed, length, count = params
    rng = np.random.default_rng(seed)
    g = gamma1()
    f2 = random_diagram(random_path(g, rng, length, start="grey"), rng, count)
    f1 = random_diagram(f2.top, rng, count)
    g2 = random_diagram(random_path(g, rng, 2, start=f2.top.end if f2.top.edges else f2.top.at), rng, count)
    if g2.bottom.at != f2.bottom.end:
        return
    g1 = random_diagram(g2.top, rng, count)
    lhs = compose_vertical(compose_horizontal(f2, g2), compose_horizontal(f1, g1))
    rhs = compose_horizontal(compose_vertical(f2, f1), compose_vertical(g2, g1))
    assert lhs.close_to(rhs)
    assert adjoint(compose_horizontal(f1, g1)) == compose_horizontal(adjoint(f1), adjoint(g1))


def test_loop_relation_multiplies_by_weight():
    g = gamma1()
    rng = np.random.default_rng(4)
    for _ in range(30):
        d = random_diagram(random_path(g, rng, 3), rng, 3)
        t = d.top
        p = int(rng.integers(0, len(t) + 1))
        e = g.out_edges[t.vertex(p)][0]
        cup = cup_slice(t, p, e)
        m = compose_vertical(compose_vertical(d, cup.to_diagram()), cap_slice(cup.top, p).to_diagram())
        assert m == Morphism2.of(d, g.weight(e))


def test_morphism_algebra():
    g = gamma0(2.0)
    cup = make_cup(g, "e")
    m = Morphism2.of(cup, 2)
    assert (m - m) == Morphism2.zero(cup.bottom, cup.top)
    assert len(m + m) == 1 and (m + m).coefficient(cup) == 4
    assert (-m).coefficient(cup) == -2
