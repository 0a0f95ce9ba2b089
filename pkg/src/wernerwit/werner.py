"""Werner states, the distillability operator W_N and its projector bases.

Layout convention for N-copy operators: tensor factors are ordered
``[2_A, 2_B, d_A, d_B, d_A, d_B, ...]`` (a qubit pair followed by N qudit
pairs) and side A is every even-indexed factor.

Two coefficient conventions appear for expansions over a projector basis
``{B_i}``: *raw* coefficients ``x`` with ``op = sum x_i B_i`` and
*normalized* coefficients ``c`` with ``op = sum c_i B_i / Tr(B_i)``.
:class:`SymmetricOperator` records which one it holds.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from math import comb, prod

import numpy as np

from wernerwit.operators import (
    CapacityError,
    HermitianOperator,
    SubsystemSplit,
    identity,
    partial_transpose,
    tensor,
)

MAX_DENSE_COPIES = 2
BASIS_KINDS = ("B", "A", "G", "B1copy", "B2copy")


class SpanError(ValueError):
    """Operator does not lie in the span of the requested basis."""

    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class WernerParams:
    """Qudit dimension ``d`` and Werner parameter ``beta`` in [-1, 1]."""

    d: int
    beta: float

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 2:
            raise ValueError(f"d must be an integer >= 2, got {self.d}")
        if not -1.0 - 1e-12 <= self.beta <= 1.0 + 1e-12:
            raise ValueError(f"beta must lie in [-1, 1], got {self.beta}")
        object.__setattr__(self, "d", int(self.d))
        object.__setattr__(self, "beta", float(min(1.0, max(-1.0, self.beta))))

    @property
    def is_separable(self) -> bool:
        return self.beta >= -1.0 / self.d

    @property
    def is_one_distillable(self) -> bool:
        return self.beta < -0.5

    @property
    def norm(self) -> float:
        """``d^2 + d beta``, the Werner normalization."""
        return self.d * self.d + self.d * self.beta

    @property
    def shifted(self) -> float:
        """``1 + d beta``, the weight of the maximally entangled sector."""
        return 1.0 + self.d * self.beta


def copy_dims(d: int, n_copies: int) -> tuple[int, ...]:
    return (2, 2) + (d, d) * n_copies


def copy_split(n_copies: int) -> SubsystemSplit:
    return SubsystemSplit.interleaved(2 + 2 * n_copies)


def qudit_split(n_copies: int) -> SubsystemSplit:
    return SubsystemSplit.interleaved(2 * n_copies)


@lru_cache(maxsize=None)
def swap_op(d: int) -> HermitianOperator:
    """Swap of two qudits, ``sum_ij |ij><ji|``."""
    f = np.zeros((d * d, d * d))
    for i in range(d):
        for j in range(d):
            f[i * d + j, j * d + i] = 1.0
    return HermitianOperator(f, (d, d))


@lru_cache(maxsize=None)
def max_entangled(d: int) -> HermitianOperator:
    """Projector onto ``sum_i |ii> / sqrt(d)``, built as ``F^{T_A} / d``."""
    return partial_transpose(swap_op(d), qudit_split(1)) / d


def werner_state(p: WernerParams) -> HermitianOperator:
    d = p.d
    return (identity((d, d)) + p.beta * swap_op(d)) / p.norm


def werner_pt(p: WernerParams) -> HermitianOperator:
    """Partial transpose ``((1 + d beta) P_d + (I - P_d)) / (d^2 + d beta)``."""
    return partial_transpose(werner_state(p), qudit_split(1))


def _check_dense(n_copies: int):
    if n_copies < 1:
        raise ValueError("need at least one copy")
    if n_copies > MAX_DENSE_COPIES:
        raise CapacityError(
            f"dense operators are limited to {MAX_DENSE_COPIES} copies; "
            "use wn_coefficients for coefficient-level work"
        )


def wn_dense(p: WernerParams, n_copies: int) -> HermitianOperator:
    """``W_N = P_2 (x) (rho_w^{T_A})^{(x)N}`` as a dense operator."""
    _check_dense(n_copies)
    pt = werner_pt(p)
    return tensor(max_entangled(2), *([pt] * n_copies))


def _sector_sum(first: HermitianOperator, second: HermitianOperator, n: int, j: int):
    # Sum over distinct arrangements with ``second`` at j of the n slots.
    total = None
    for pos in itertools.combinations(range(n), j):
        term = tensor(*[second if k in pos else first for k in range(n)])
        total = term if total is None else total + term
    return total


class ProjectorBasis:
    """Named operator basis for the symmetric subspaces.

    ``kind`` is one of

    ``"B"``
        ``N + 1`` orthogonal projectors ``P_2 (x) S_j`` where ``S_j`` sums the
        arrangements of ``j`` factors ``I - P_d`` among ``N - j`` factors ``P_d``.
    ``"B1copy"``, ``"B2copy"``
        the enlarged orthogonal bases that also cover the ``I_2 - P_2``
        sector: ``P_2 (x) S_j`` for all j, then ``(I_2 - P_2) (x) S_j``.
    ``"A"``
        the state-side analogue on qudit pairs only, built from
        ``f_d = F_d / d`` and ``I - f_d``. Not orthogonal.
    ``"G"``
        the three zero-trace combinations of the ``B1copy`` elements used as
        plotting coordinates.

    Traces are available for every ``N``; dense elements only up to two copies.
    """

    def __init__(self, kind: str, n_copies: int, d: int):
        if kind not in BASIS_KINDS:
            raise ValueError(f"unknown basis kind {kind!r}")
        if kind == "B1copy" and n_copies != 1 or kind == "B2copy" and n_copies != 2:
            raise ValueError(f"{kind} is defined for its own copy count only")
        if kind == "G" and n_copies != 1:
            raise ValueError("the G basis is a one-copy basis")
        if n_copies < 1 or d < 2:
            raise ValueError("need n_copies >= 1 and d >= 2")
        self.kind = kind
        self.n_copies = n_copies
        self.d = d

    def __repr__(self):
        return f"ProjectorBasis({self.kind!r}, N={self.n_copies}, d={self.d})"

    def __eq__(self, other):
        return isinstance(other, ProjectorBasis) and self._key == other._key

    def __hash__(self):
        return hash(self._key)

    @property
    def _key(self):
        return (self.kind, self.n_copies, self.d)

    @property
    def orthogonal(self) -> bool:
        return self.kind in ("B", "B1copy", "B2copy")

    @property
    def dims(self) -> tuple[int, ...]:
        if self.kind == "A":
            return (self.d, self.d) * self.n_copies
        return copy_dims(self.d, self.n_copies)

    @property
    def traces(self) -> tuple[int, ...]:
        n, d = self.n_copies, self.d
        base = tuple(comb(n, j) * (d * d - 1) ** j for j in range(n + 1))
        if self.kind in ("B", "A"):
            return base
        if self.kind == "G":
            return (0, 0, 0)
        return base + tuple(3 * t for t in base)

    @property
    def size(self) -> int:
        return len(self.traces)

    @property
    def elements(self) -> tuple[HermitianOperator, ...]:
        _check_dense(self.n_copies)
        return _basis_elements(*self._key)


@lru_cache(maxsize=None)
def _basis_elements(kind, n, d):
    if kind == "G":
        b = _basis_elements("B1copy", 1, d)
        k = d * d - 1
        return (k * b[0] - b[1], k * b[2] - b[3], -3.0 * (b[0] + b[1]) + b[2] + b[3])
    if kind == "A":
        f = swap_op(d) / d
        rest = identity((d, d)) - f
        return tuple(_sector_sum(f, rest, n, j) for j in range(n + 1))
    p = max_entangled(d)
    q = identity((d, d)) - p
    sectors = [_sector_sum(p, q, n, j) for j in range(n + 1)]
    p2 = max_entangled(2)
    out = [tensor(p2, s) for s in sectors]
    if kind != "B":
        q2 = identity((2, 2)) - p2
        out += [tensor(q2, s) for s in sectors]
    return tuple(out)


def basis_B(n_copies: int, d: int) -> ProjectorBasis:
    return ProjectorBasis("B", n_copies, d)


def basis_A(n_copies: int, d: int) -> ProjectorBasis:
    return ProjectorBasis("A", n_copies, d)


def basis_full(n_copies: int, d: int) -> ProjectorBasis:
    """Enlarged one- or two-copy basis covering both qubit-pair sectors."""
    if n_copies not in (1, 2):
        raise ValueError("enlarged bases exist for one and two copies")
    return ProjectorBasis(f"B{n_copies}copy", n_copies, d)


def basis_G(d: int) -> ProjectorBasis:
    return ProjectorBasis("G", 1, d)


@dataclass(frozen=True)
class SymmetricOperator:
    """Coefficient vector over a :class:`ProjectorBasis`."""

    basis: ProjectorBasis
    coeffs: np.ndarray
    normalized: bool = False
    residual: float | None = field(default=None, compare=False)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.float64).copy()
        if c.shape != (self.basis.size,):
            raise ValueError(f"expected {self.basis.size} coefficients, got {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    def raw(self) -> np.ndarray:
        if not self.normalized:
            return self.coeffs
        tr = np.asarray(self.basis.traces, dtype=np.float64)
        if np.any(tr == 0):
            raise ValueError("zero-trace basis has no normalized convention")
        return self.coeffs / tr

    def normalized_coeffs(self) -> np.ndarray:
        if self.normalized:
            return self.coeffs
        return self.coeffs * np.asarray(self.basis.traces, dtype=np.float64)

    def as_raw(self) -> "SymmetricOperator":
        return SymmetricOperator(self.basis, self.raw(), False)

    def as_normalized(self) -> "SymmetricOperator":
        return SymmetricOperator(self.basis, self.normalized_coeffs(), True)

    def trace(self) -> float:
        return float(np.dot(self.raw(), self.basis.traces))

    def densify(self) -> HermitianOperator:
        els = self.basis.elements
        m = sum(x * e.matrix for x, e in zip(self.raw(), els))
        return HermitianOperator(m, self.basis.dims)

    def to_dict(self) -> dict:
        return {
            "basis": self.basis.kind,
            "n_copies": self.basis.n_copies,
            "d": self.basis.d,
            "normalized": self.normalized,
            "coeffs": [float(x) for x in self.coeffs],
        }


def wn_coefficients(p: WernerParams, n_copies: int) -> SymmetricOperator:
    """Raw eigenvalues ``(1 + d beta)^(N-j) / (d^2 + d beta)^N`` over ``B^N``."""
    if n_copies < 1:
        raise ValueError("need at least one copy")
    lam = [p.shifted ** (n_copies - j) / p.norm**n_copies for j in range(n_copies + 1)]
    return SymmetricOperator(basis_B(n_copies, p.d), np.array(lam))


def werner_power_coefficients(p: WernerParams, n_copies: int) -> SymmetricOperator:
    """``rho_w^{(x)N}`` as raw coefficients over the ``A^N`` basis."""
    if n_copies < 1:
        raise ValueError("need at least one copy")
    lam = [p.shifted ** (n_copies - j) / p.norm**n_copies for j in range(n_copies + 1)]
    return SymmetricOperator(basis_A(n_copies, p.d), np.array(lam))


def extend_to_full(op: SymmetricOperator) -> SymmetricOperator:
    """Re-express a ``B``-basis operator over the enlarged basis (zero padding)."""
    if op.basis.kind != "B":
        raise ValueError("only B-basis operators extend to the enlarged basis")
    full = basis_full(op.basis.n_copies, op.basis.d)
    raw = np.concatenate([op.raw(), np.zeros(op.basis.size)])
    return SymmetricOperator(full, raw)


def expand_in_basis(
    op: HermitianOperator, basis: ProjectorBasis, normalized: bool = False
) -> SymmetricOperator:
    """Coefficients of ``op`` over ``basis``; raises :class:`SpanError` off-span.

    Orthogonal bases use ``x_i = Tr(B_i op) / Tr(B_i)``; the others solve the
    Gram system.
    """
    if op.dims != basis.dims:
        raise ValueError(f"operator dims {op.dims} do not match basis dims {basis.dims}")
    els = basis.elements
    proj = np.array([e.inner(op) for e in els])
    if basis.orthogonal:
        raw = proj / np.asarray(basis.traces, dtype=np.float64)
    else:
        gram = np.array([[a.inner(b) for b in els] for a in els])
        raw = np.linalg.solve(gram, proj)
    approx = sum(x * e.matrix for x, e in zip(raw, els))
    residual = float(np.linalg.norm(op.matrix - approx))
    if residual > 1e-8 * max(op.norm(), 1e-300):
        raise SpanError(f"operator lies outside span of {basis} (residual {residual:.3e})", residual)
    out = SymmetricOperator(basis, raw, False, residual)
    if normalized:
        return SymmetricOperator(basis, out.normalized_coeffs(), True, residual)
    return out


def g_coords(op: HermitianOperator) -> np.ndarray:
    """Coordinates ``(g1, g2, g3)`` of ``op = alpha I + sum g_k G_k`` (one copy)."""
    if len(op.dims) != 4 or op.dims[:2] != (2, 2):
        raise ValueError("g_coords expects a one-copy operator")
    d = op.dims[2]
    gs = basis_G(d).elements
    gram = np.array([[a.inner(b) for b in gs] for a in gs])
    g = np.linalg.solve(gram, np.array([x.inner(op) for x in gs]))
    alpha = op.trace() / op.dim
    rest = op.matrix - alpha * np.eye(op.dim) - sum(c * x.matrix for c, x in zip(g, gs))
    residual = float(np.linalg.norm(rest))
    if residual > 1e-8 * max(op.norm(), 1e-300):
        raise SpanError(f"operator lies outside span of I and G (residual {residual:.3e})", residual)
    return g


def g_coords_from_probs(probs, d: int = 3) -> np.ndarray:
    """``g_coords`` of ``sum p_i B_i / Tr(B_i)`` computed from the ``p_i`` alone.

    Works row-wise on an ``(n, 4)`` array; no dense matrices are formed.
    """
    p = np.atleast_2d(np.asarray(probs, dtype=np.float64))
    tr = np.asarray(basis_full(1, d).traces, dtype=np.float64)
    k = d * d - 1
    gmat = np.array([[k, -1, 0, 0], [0, 0, k, -1], [-3, -3, 1, 1]], dtype=np.float64)
    gram = (gmat * tr) @ gmat.T
    rhs = p @ gmat.T  # Tr(G_k rho) = sum_i G_ki p_i for orthogonal B_i
    g = np.linalg.solve(gram, rhs.T).T
    return g[0] if np.ndim(probs) == 1 else g


def twirl_parameter(rho: HermitianOperator) -> WernerParams:
    """Werner parameter with the same swap expectation as ``rho``."""
    if len(rho.dims) != 2 or rho.dims[0] != rho.dims[1]:
        raise ValueError("twirl_parameter expects a two-qudit operator")
    d = rho.dims[0]
    f = rho.inner(swap_op(d)) / rho.trace()
    if abs(d - f) < 1e-12:
        raise ValueError("swap expectation equals d; no Werner parameter")
    return WernerParams(d, (f * d - 1.0) / (d - f))


def eigenvalue_decay_table(p: WernerParams, n_list) -> list[tuple[int, float]]:
    """``(N, max_j |lambda_{j+1}|)`` for each N, from coefficients only."""
    if not abs(p.shifted) < abs(p.norm):
        raise ValueError("eigenvalue decay needs |1 + d beta| < |d^2 + d beta|")
    return [(int(n), float(np.max(np.abs(wn_coefficients(p, n).coeffs)))) for n in n_list]


def wn_spectrum(p: WernerParams, n_copies: int) -> np.ndarray:
    """Full spectrum of ``W_N`` (ascending) predicted from the coefficients."""
    lam = wn_coefficients(p, n_copies)
    tr = lam.basis.traces
    zeros = 3 * p.d ** (2 * n_copies)
    vals = np.concatenate([np.repeat(lam.coeffs, tr), np.zeros(zeros)])
    return np.sort(vals)


def line_state(start: HermitianOperator, end: HermitianOperator, p: float) -> HermitianOperator:
    """``(1 - p) start / Tr(start) + p end / Tr(end)``."""
    return (1.0 - p) * start / start.trace() + p * end / end.trace()


def state_from_probs(basis: ProjectorBasis, probs) -> HermitianOperator:
    """``sum p_i B_i / Tr(B_i)`` as a dense operator."""
    return SymmetricOperator(basis, probs, normalized=True).densify()


def dense_dimension(n_copies: int, d: int) -> int:
    return prod(copy_dims(d, n_copies))
