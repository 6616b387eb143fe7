"""Shared test corpus of balanced fair graphs."""
from __future__ import annotations

import itertools
import math
from functools import lru_cache

from tljmod import standard_gamma
from tljmod.fair import (
    FairGraph,
    a_path_quantum_dim,
    cover,
    fair_graph,
    lambda1,
    relabel,
    two_vertex_reciprocal,
)


def gamma0(delta: float):
    return standard_gamma("unoriented", [delta])


def a_path(n: int) -> FairGraph:
    return a_path_quantum_dim(gamma0(2 * math.cos(math.pi / (n + 1))), n)


def tvr(a: float) -> FairGraph:
    return two_vertex_reciprocal(standard_gamma("oriented", [a + 1 / a]), a)


@lru_cache(maxsize=None)
def base_corpus() -> tuple[tuple[str, FairGraph], ...]:
    out = [("lambda1", lambda1())]
    out += [(f"A{n}", a_path(n)) for n in range(2, 11)]
    out += [(f"TVR({a})", tvr(a)) for a in (1, 2, 5)]
    out += [("cover3(TVR(2))", cover(tvr(2), 3))]
    return tuple(out)


@lru_cache(maxsize=None)
def corpus() -> tuple[tuple[str, FairGraph], ...]:
    """Base graphs plus 20 seeded relabelings cycling through them."""
    base = base_corpus()
    relabeled = [
        (f"relabel[{seed}]({name})", relabel(l, seed))
        for seed, (name, l) in zip(range(20), itertools.cycle(base))
    ]
    return base + tuple(relabeled)


def two_loops(w1: float, w2: float, delta: float = 2.0) -> FairGraph:
    return fair_graph(gamma0(delta), {"v": "*"}, [("l1", "v", "v", w1, "e"), ("l2", "v", "v", w2, "e")])
