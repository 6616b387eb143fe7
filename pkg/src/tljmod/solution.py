"""Fundamental solutions in bigraded Hilbert spaces and their functor on diagrams.

Coordinates
-----------
A cup block ``c`` for ``(e, v, w)`` has shape ``dim_e(v,w) x dim_ebar(w,v)`` and
encodes ``C(1) = sum_ij c[i, j] xi_i (x) eta_j``.  Inner products are linear in
the first slot, so the antilinear map ``Phi(xi) = (xi^* (x) 1) C(1)`` acts as
``Phi(x) = A @ conj(x)`` with ``A = c.T``: column ``k`` of ``A`` is ``Phi(xi_k)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping

import numpy as np

from .diagrams import (
    Diagram,
    ElementarySlice,
    GammaPath,
    Morphism2,
    as_morphism,
    decompose_to_slices,
)
from .errors import GammaMismatchError, PreconditionError
from .graph import BiGraph, gammas_equal
from .report import ValidationReport, Violation, make_report

BlockKey = tuple[str, str, str]  # (edge, v, w)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


def key_str(key: Iterable[str]) -> str:
    return "|".join(key)


class FundamentalSolution:
    """Grading sets, and one cup coefficient block per nonzero ``(e, v, w)``.

    Block dimensions are read off the cup shapes; zero-dimensional blocks are
    simply absent.
    """

    def __init__(self, gamma: BiGraph, gradings: Mapping[str, Iterable[str]], cups: Mapping[BlockKey, np.ndarray]):
        self.gamma = gamma
        self.gradings = {a: tuple(vs) for a, vs in sorted(gradings.items())}
        self.cups = {tuple(k): _frozen(c) for k, c in sorted(cups.items())}

    def __repr__(self) -> str:
        sizes = {a: len(v) for a, v in self.gradings.items()}
        return f"FundamentalSolution(gradings={sizes}, blocks={len(self.cups)})"

    @cached_property
    def dims(self) -> dict[BlockKey, int]:
        return {k: c.shape[0] for k, c in self.cups.items()}

    def dim(self, e: str, v: str, w: str) -> int:
        return self.dims.get((e, v, w), 0)

    @cached_property
    def _targets(self) -> dict[tuple[str, str], tuple[str, ...]]:
        out: dict[tuple[str, str], list[str]] = {}
        for e, v, w in self.cups:
            out.setdefault((e, v), []).append(w)
        return {k: tuple(ws) for k, ws in out.items()}

    def targets(self, e: str, v: str) -> tuple[str, ...]:
        """Grading labels ``w`` with a nonzero block ``(e, v, w)``."""
        return self._targets.get((e, v), ())

    def with_cups(self, cups: Mapping[BlockKey, np.ndarray]) -> FundamentalSolution:
        return FundamentalSolution(self.gamma, self.gradings, cups)


def check_well_formed(s: FundamentalSolution) -> ValidationReport:
    g = s.gamma
    violations = []
    for a in g.vertices:
        if a not in s.gradings:
            violations.append(Violation("MISSING_GRADING", (a,), f"no grading set for vertex {a!r}"))
        elif len(set(s.gradings[a])) != len(s.gradings[a]):
            violations.append(Violation("DUPLICATE_ID", (a,), f"grading set of {a!r} repeats an id"))
    extra = set(s.gradings) - set(g.vertices)
    if extra:
        violations.append(Violation("DANGLING_REFERENCE", tuple(sorted(extra)), "grading for unknown vertices"))
    if violations:
        return make_report(violations)
    members = {a: set(vs) for a, vs in s.gradings.items()}
    for (e, v, w), c in s.cups.items():
        key = key_str((e, v, w))
        if not g.has_edge(e):
            violations.append(Violation("DANGLING_REFERENCE", (key,), f"unknown edge {e!r}"))
            continue
        ed = g.edge(e)
        if v not in members[ed.source] or w not in members[ed.target]:
            violations.append(Violation("DANGLING_REFERENCE", (key,), "grading labels do not match the edge endpoints"))
            continue
        if c.ndim != 2 or 0 in c.shape:
            violations.append(Violation("SHAPE_MISMATCH", (key,), f"cup block must be a nonempty matrix, got {c.shape}"))
            continue
        partner = s.cups.get((ed.dual, w, v))
        if partner is None:
            violations.append(Violation("MISSING_DUAL_BLOCK", (key,), "dual block absent though this block is nonzero"))
        elif c.shape[1] != partner.shape[0] or c.shape[0] != partner.shape[1]:
            violations.append(Violation(
                "SHAPE_MISMATCH", (key,),
                f"dim_e(v,w) must equal dim_ebar(w,v): {c.shape} vs dual {partner.shape}",
            ))
    return make_report(violations)


@dataclass(frozen=True)
class AntiLinearBlock:
    """An antilinear map ``x -> matrix @ conj(x)``."""

    matrix: np.ndarray

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.matrix @ np.conj(x)

    def adjoint_apply(self, y: np.ndarray) -> np.ndarray:
        return self.matrix.T @ np.conj(y)

    def positive_matrix(self) -> np.ndarray:
        """Matrix of the linear operator ``Phi^* Phi``."""
        return self.matrix.T @ np.conj(self.matrix)

    def spectrum(self) -> np.ndarray:
        """Eigenvalues of ``Phi^* Phi`` ascending, as squared singular values."""
        return np.sort(np.linalg.svd(self.matrix, compute_uv=False) ** 2)


def phi_from_cups(s: FundamentalSolution) -> dict[BlockKey, AntiLinearBlock]:
    return {k: AntiLinearBlock(_frozen(c.T)) for k, c in s.cups.items()}


def cups_from_phi(
    phi: Mapping[BlockKey, AntiLinearBlock | np.ndarray],
    gamma: BiGraph,
    gradings: Mapping[str, Iterable[str]],
    dims: Mapping[BlockKey, int] | None = None,
) -> FundamentalSolution:
    """Inverse of :func:`phi_from_cups`: ``C(1) = sum_i xi_i (x) Phi(xi_i)``."""
    cups = {}
    for k, a in phi.items():
        m = a.matrix if isinstance(a, AntiLinearBlock) else np.asarray(a)
        if dims is not None and m.shape[1] != dims.get(k, 0):
            raise ValueError(f"block {key_str(k)}: antilinear map has domain {m.shape[1]}, expected {dims.get(k, 0)}")
        cups[k] = m.T
    if dims is not None:
        missing = [k for k, n in dims.items() if n > 0 and k not in phi]
        if missing:
            raise ValueError(f"no antilinear block for {key_str(missing[0])}")
    s = FundamentalSolution(gamma, gradings, cups)
    report = check_well_formed(s)
    if not report.ok:
        raise ValueError(f"shape mismatch: {report.violations[0].message}")
    return s


def check_zigzag(s: FundamentalSolution, tol: float) -> ValidationReport:
    """Both conjugate equations, checked in antilinear form.

    ``|| Phi^ebar_wv Phi^e_vw - 1 ||`` (operator norm) per block and
    ``| sum_w Tr((Phi^e_vw)^* Phi^e_vw) - delta_e |`` per ``(e, v)``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    wf = check_well_formed(s)
    if not wf.ok:
        return wf
    g = s.gamma
    phi = phi_from_cups(s)
    violations = []
    zig: dict[str, float] = {}
    for (e, v, w), a in phi.items():
        b = phi[(g.dual(e), w, v)]
        # Phi^ebar(Phi^e x) = B conj(A conj x) = (B conj(A)) x
        m = b.matrix @ np.conj(a.matrix)
        r = float(np.linalg.norm(m - np.eye(m.shape[0]), 2))
        zig[key_str((e, v, w))] = r
        if r > tol:
            violations.append(Violation("ZIGZAG", (key_str((e, v, w)),), f"snake residual {r:.3e} > {tol:.1e}"))
    trace: dict[str, float] = {}
    for ed in sorted(g.edges, key=lambda x: x.id):
        for v in s.gradings[ed.source]:
            total = sum(
                float(np.sum(np.abs(phi[(ed.id, v, w)].matrix) ** 2)) for w in s.targets(ed.id, v)
            )
            r = abs(total - ed.weight)
            trace[key_str((ed.id, v))] = r
            if r > tol:
                violations.append(Violation(
                    "LOOP_VALUE", (key_str((ed.id, v)),),
                    f"sum_w Tr(Phi^*Phi) = {total!r} differs from delta = {ed.weight!r} by {r:.3e}",
                ))
    worst = max(list(zig.values()) + list(trace.values()), default=0.0)
    return make_report(violations, data={"zig_residuals": zig, "trace_residuals": trace, "worst": worst})


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar unitary from the QR decomposition of a complex Gaussian matrix."""
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def random_unitary_family(s: FundamentalSolution, rng: np.random.Generator) -> dict[BlockKey, np.ndarray]:
    return {k: random_unitary(n, rng) for k, n in s.dims.items()}


def _check_unitary(u: np.ndarray, tol: float = 1e-10) -> bool:
    u = np.asarray(u)
    return u.ndim == 2 and u.shape[0] == u.shape[1] and np.linalg.norm(u.conj().T @ u - np.eye(u.shape[0]), 2) <= tol


def conjugate_solution(s: FundamentalSolution, u: Mapping[BlockKey, np.ndarray]) -> FundamentalSolution:
    """Apply ``C^e -> (U^e (x) U^ebar) C^e`` blockwise: ``c' = U^e_vw c (U^ebar_wv)^T``."""
    g = s.gamma
    for k, n in s.dims.items():
        if k not in u:
            raise ValueError(f"no unitary supplied for block {key_str(k)}")
        uk = np.asarray(u[k])
        if uk.shape != (n, n):
            raise ValueError(f"unitary for {key_str(k)} has shape {uk.shape}, expected {(n, n)}")
        if not _check_unitary(uk):
            raise ValueError(f"matrix for {key_str(k)} is not unitary")
    cups = {}
    for (e, v, w), c in s.cups.items():
        cups[(e, v, w)] = np.asarray(u[(e, v, w)]) @ c @ np.asarray(u[(g.dual(e), w, v)]).T
    return s.with_cups(cups)


# -- block operators ------------------------------------------------------------

Grading = tuple[str, ...]


def grading_tuples(s: FundamentalSolution, path: GammaPath) -> list[Grading]:
    """All ``(v0, ..., vn)`` along ``path`` with every step a nonzero block."""
    tuples = [(v,) for v in s.gradings[path.at]]
    for e in path.edges:
        tuples = [t + (w,) for t in tuples for w in s.targets(e, t[-1])]
    return tuples


def tuple_dims(s: FundamentalSolution, path: GammaPath, t: Grading) -> list[int]:
    return [s.dims[(e, t[i], t[i + 1])] for i, e in enumerate(path.edges)]


@dataclass
class BlockOperator:
    """A bigraded linear map: ``blocks[(dom_tuple, cod_tuple)]`` is a dense matrix.

    Missing blocks are zero.  Blocks only join tuples that agree on their
    first and last grading labels.
    """

    domain: GammaPath
    codomain: GammaPath
    blocks: dict[tuple[Grading, Grading], np.ndarray]

    @classmethod
    def identity(cls, s: FundamentalSolution, path: GammaPath) -> BlockOperator:
        blocks = {}
        for t in grading_tuples(s, path):
            n = int(np.prod(tuple_dims(s, path, t), dtype=int))
            blocks[(t, t)] = np.eye(n, dtype=complex)
        return cls(path, path, blocks)

    def __matmul__(self, other: BlockOperator) -> BlockOperator:
        """``self @ other`` applies ``other`` first."""
        if other.codomain.edges != self.domain.edges:
            raise ValueError("block operators are not composable")
        by_dom: dict[Grading, list[tuple[Grading, np.ndarray]]] = {}
        for (d, c), m in self.blocks.items():
            by_dom.setdefault(d, []).append((c, m))
        out: dict[tuple[Grading, Grading], np.ndarray] = {}
        for (d, mid), m1 in sorted(other.blocks.items()):
            for c, m2 in by_dom.get(mid, ()):
                prod = m2 @ m1
                if (d, c) in out:
                    out[(d, c)] = out[(d, c)] + prod
                else:
                    out[(d, c)] = prod
        return BlockOperator(other.domain, self.codomain, out)

    def tensor(self, other: BlockOperator) -> BlockOperator:
        """Horizontal product; the shared middle grading label must agree."""
        out = {}
        for (d1, c1), m1 in self.blocks.items():
            for (d2, c2), m2 in other.blocks.items():
                if d1[-1] != d2[0] or c1[-1] != c2[0]:
                    continue
                out[(d1 + d2[1:], c1 + c2[1:])] = np.kron(m1, m2)
        return BlockOperator(self.domain.concat(other.domain), self.codomain.concat(other.codomain), out)

    def adjoint(self) -> BlockOperator:
        return BlockOperator(self.codomain, self.domain, {(c, d): m.conj().T for (d, c), m in self.blocks.items()})

    def __mul__(self, k: complex) -> BlockOperator:
        return BlockOperator(self.domain, self.codomain, {key: k * m for key, m in self.blocks.items()})

    __rmul__ = __mul__

    def __add__(self, other: BlockOperator) -> BlockOperator:
        out = dict(self.blocks)
        for key, m in other.blocks.items():
            out[key] = out[key] + m if key in out else m
        return BlockOperator(self.domain, self.codomain, out)

    def max_diff(self, other: BlockOperator) -> float:
        worst = 0.0
        for key in set(self.blocks) | set(other.blocks):
            a = self.blocks.get(key)
            b = other.blocks.get(key)
            if a is None:
                a = np.zeros_like(b)
            if b is None:
                b = np.zeros_like(a)
            if a.shape != b.shape:
                return float("inf")
            if a.size:
                worst = max(worst, float(np.max(np.abs(a - b))))
        return worst

    def allclose(self, other: BlockOperator, atol: float) -> bool:
        return (
            self.domain.edges == other.domain.edges
            and self.codomain.edges == other.codomain.edges
            and self.max_diff(other) <= atol
        )


def _apply_slice(s: FundamentalSolution, op: BlockOperator, sl: ElementarySlice) -> BlockOperator:
    """Post-compose ``op`` with the image of one slice, contracting block by block."""
    if sl.kind == "identity":
        return BlockOperator(op.domain, sl.top, dict(op.blocks))
    p = sl.position
    path = sl.bottom
    out: dict[tuple[Grading, Grading], np.ndarray] = {}
    for (d, t), m in op.blocks.items():
        dims = tuple_dims(s, path, t)
        left = int(np.prod(dims[:p], dtype=int))
        if sl.kind == "cup":
            right = int(np.prod(dims[p:], dtype=int))
            x = m.reshape(left, right, m.shape[1])
            for w in s.targets(sl.edge, t[p]):
                c = s.cups[(sl.edge, t[p], w)]
                y = np.einsum("lrd,ab->labrd", x, c)
                key = (d, t[:p + 1] + (w, t[p]) + t[p + 1:])
                out[key] = y.reshape(-1, m.shape[1])
        else:
            if t[p] != t[p + 2]:
                continue  # cap blocks live on the diagonal of the identity 1-morphism
            right = int(np.prod(dims[p + 2:], dtype=int))
            c = s.cups[(sl.edge, t[p], t[p + 1])]
            x = m.reshape(left, c.shape[0], c.shape[1], right, m.shape[1])
            y = np.einsum("labrd,ab->lrd", x, np.conj(c))
            key = (d, t[:p + 1] + t[p + 3:])
            y = y.reshape(-1, m.shape[1])
            out[key] = out[key] + y if key in out else y
    return BlockOperator(op.domain, sl.top, out)


def evaluate_slices(s: FundamentalSolution, slices: Iterable[ElementarySlice]) -> BlockOperator:
    slices = list(slices)
    op = BlockOperator.identity(s, slices[0].bottom)
    for sl in slices:
        op = _apply_slice(s, op, sl)
    return op


def evaluate_functor(s: FundamentalSolution, m: Morphism2 | Diagram, leftmost: bool = True) -> BlockOperator:
    """Value of the canonical strict functor on a 2-morphism.

    Each diagram is cut into elementary slices; cups insert cup blocks,
    caps insert their adjoints, and slices compose as block operators.
    ``leftmost`` selects the tie-breaking of the slice sweep; the result does
    not depend on it.
    """
    m = as_morphism(m)
    if not gammas_equal(m.gamma, s.gamma):
        raise GammaMismatchError("solution and morphism live over different base graphs")
    result = BlockOperator(m.bottom, m.top, {})
    for d, coeff in m:
        result = result + coeff * evaluate_slices(s, decompose_to_slices(d, leftmost=leftmost))
    return result


def block_operator_to_dict(op: BlockOperator) -> dict:
    blocks = []
    for (d, c), m in sorted(op.blocks.items()):
        blocks.append({
            "domain": list(d),
            "codomain": list(c),
            "matrix": [[[float(z.real), float(z.imag)] for z in row] for row in m],
        })
    return {
        "domain": {"edges": list(op.domain.edges), "at": op.domain.at},
        "codomain": {"edges": list(op.codomain.edges), "at": op.codomain.at},
        "blocks": blocks,
    }


__all__ = [
    "AntiLinearBlock",
    "BlockOperator",
    "FundamentalSolution",
    "block_operator_to_dict",
    "check_well_formed",
    "check_zigzag",
    "conjugate_solution",
    "cups_from_phi",
    "evaluate_functor",
    "evaluate_slices",
    "grading_tuples",
    "phi_from_cups",
    "random_unitary",
    "random_unitary_family",
]
