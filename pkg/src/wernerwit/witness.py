"""Optimal entanglement witnesses from sampled product-state constraints.

A witness ``W`` (unit trace) is non-negative on every separable state iff
``<psi_A| W |psi_A> >= 0`` as an operator on side B for every pure state
``psi_A`` on side A. Sampling finitely many ``psi_A`` relaxes this to an SDP
whose optimum lower-bounds the true optimal witness value; the see-saw
verifier then searches for product states the relaxed witness violates.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from wernerwit import kernels
from wernerwit.operators import (
    CapacityError,
    HermitianOperator,
    SubsystemSplit,
    bipartite_tensor,
    haar_vectors,
    rng_stream,
)
from wernerwit.sdp import (
    CompressionGroup,
    DenseGroup,
    LmiProblem,
    SolverSettings,
    hermitian_basis,
    solve,
)
from wernerwit.werner import ProjectorBasis, SymmetricOperator, basis_full

SCHEMA_VERSION = 1
DEFAULT_SAMPLES = {1: 300, 2: 1000}
DEFAULT_MULTISTARTS = 200
VIOLATION_TOL = 1e-8
FULL_MODE_MAX_DIM = 64
SPECTRAL_EIGVECS = 8


class SolverFailure(RuntimeError):
    """The SDP behind a witness did not reach an optimal status."""

    def __init__(self, message, solution):
        super().__init__(message)
        self.solution = solution


@dataclass(frozen=True)
class Geometry:
    """Factor layout ``[2, 2, d, d, ...]`` for ``n_copies`` copies."""

    d: int
    n_copies: int

    @classmethod
    def of(cls, op: HermitianOperator) -> "Geometry":
        dims = op.dims
        n = (len(dims) - 2) // 2
        if len(dims) < 4 or len(dims) % 2 or dims[:2] != (2, 2) or len(set(dims[2:])) != 1:
            raise ValueError(f"operator dims {dims} are not a [2, 2, d, d, ...] layout")
        return cls(dims[2], n)

    @property
    def split(self) -> SubsystemSplit:
        return SubsystemSplit.interleaved(2 + 2 * self.n_copies)

    @property
    def side_dim(self) -> int:
        return 2 * self.d**self.n_copies

    @property
    def dim(self) -> int:
        return self.side_dim**2


@dataclass
class SampleSet:
    """Pure states on side A used as constraint generators."""

    states: np.ndarray
    origin: dict

    def __post_init__(self):
        st = np.atleast_2d(np.asarray(self.states, dtype=np.complex128))
        if st.shape[0] == 0:
            raise ValueError("sample set is empty")
        norms = np.linalg.norm(st, axis=1)
        if not np.all(np.abs(norms - 1.0) <= 1e-10):
            raise ValueError("sample states must have unit norm")
        self.states = st

    def __len__(self):
        return self.states.shape[0]

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    def extended(self, more, note: str) -> "SampleSet":
        origin = dict(self.origin)
        origin["appended"] = origin.get("appended", 0) + len(more)
        origin["notes"] = list(origin.get("notes", [])) + [note]
        return SampleSet(np.vstack([self.states, more]), origin)


def haar_samples(side_dim: int, count: int, seed: int) -> SampleSet:
    """``count`` Haar-random states on side A from the stream ``(seed, 0)``."""
    if count < 1:
        raise ValueError("need at least one sample")
    return SampleSet(haar_vectors(side_dim, count, rng_stream(seed, 0)),
                     {"kind": "haar", "n": int(count), "seed": int(seed)})


def explicit_samples(states) -> SampleSet:
    st = np.atleast_2d(np.asarray(states, dtype=np.complex128))
    norms = np.linalg.norm(st, axis=1, keepdims=True)
    if np.any(norms < 1e-300):
        raise ValueError("sample states must be non-zero")
    st = st / norms
    return SampleSet(st, {"kind": "explicit", "n": int(st.shape[0])})


@dataclass
class Verification:
    """Outcome of the product-state see-saw on a candidate witness."""

    min_value: float
    psi_a: np.ndarray
    chi_b: np.ndarray
    multistarts: int
    seed: int
    values: np.ndarray = field(repr=False, default=None)
    psis: np.ndarray = field(repr=False, default=None)

    def to_dict(self) -> dict:
        return {
            "min_product_expectation": float(self.min_value),
            "multistarts": int(self.multistarts),
            "seed": int(self.seed),
            "violating_psi_a": _cpairs(self.psi_a) if self.min_value < -VIOLATION_TOL else None,
            "violating_chi_b": _cpairs(self.chi_b) if self.min_value < -VIOLATION_TOL else None,
        }


@dataclass
class WitnessReport:
    """Optimal-witness run with provenance and a-posteriori verification."""

    witness: SymmetricOperator | None
    dense: HermitianOperator
    value: float
    target: HermitianOperator
    provenance: dict
    solver: dict
    mode: str
    verification: Verification | None = None
    symmetry_residual: float = 0.0
    rounds: int = 1
    problem: LmiProblem | None = field(default=None, repr=False)
    solution_x: np.ndarray | None = field(default=None, repr=False)

    @property
    def coefficients(self) -> np.ndarray | None:
        """Normalized coefficients ``c`` with ``W = sum c_i B_i / Tr(B_i)``."""
        return None if self.witness is None else self.witness.normalized_coeffs()

    def to_dict(self) -> dict:
        out = {
            "schema_version": SCHEMA_VERSION,
            "mode": self.mode,
            "value": float(self.value),
            "trace": float(self.dense.trace()),
            "basis": None if self.witness is None else self.witness.basis.kind,
            "coefficients": None if self.witness is None else [float(c) for c in self.coefficients],
            "symmetry_residual": float(self.symmetry_residual),
            "samples": self.provenance,
            "rounds": int(self.rounds),
            "solver": self.solver,
            "verification": None if self.verification is None else self.verification.to_dict(),
        }
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def _cpairs(v):
    return [[float(z.real), float(z.imag)] for z in np.asarray(v).ravel()]


def _compress(tensor, states):
    # <psi|T|psi> over side A for every psi; tensor is T[a, b, a', b'].
    da, db = tensor.shape[0], tensor.shape[1]
    half = states.conj() @ tensor.reshape(da, -1)
    half = half.reshape(-1, db, da, db)
    return np.einsum("jbcd,jc->jbd", half, states, optimize=True)


def _symmetric_problem(rho, samples, geo):
    basis = basis_full(geo.n_copies, geo.d)
    tr = np.asarray(basis.traces, dtype=np.float64)
    els = basis.elements
    split = geo.split
    objective = np.array([rho.inner(e) for e in els]) / tr
    coeffs = []
    for e, t in zip(els, tr):
        coeffs.append(_compress(bipartite_tensor(e, split), samples.states) / t)
    coeffs = np.stack(coeffs, axis=1)
    if not np.any(coeffs.imag):
        coeffs = coeffs.real.copy()
    const = np.zeros(coeffs.shape[:1] + coeffs.shape[2:], dtype=coeffs.dtype)
    group = DenseGroup(const, coeffs)
    prob = LmiProblem(objective, eq_matrix=np.ones((1, basis.size)), eq_rhs=[1.0], groups=[group])
    return prob, basis


def _ab_permutation(geo):
    # Permutation taking factor order [2A, 2B, dA, dB, ...] to [A..., B...].
    split = geo.split
    return list(split.party_a) + list(split.party_b)


def _to_ab(op: HermitianOperator, geo) -> np.ndarray:
    n = len(op.dims)
    order = _ab_permutation(geo)
    t = op.matrix.reshape(op.dims + op.dims).transpose(order + [i + n for i in order])
    return t.reshape(op.dim, op.dim)


def _from_ab(mat: np.ndarray, dims, geo) -> HermitianOperator:
    n = len(dims)
    order = _ab_permutation(geo)
    inv = list(np.argsort(order))
    ab_dims = [dims[i] for i in order]
    t = mat.reshape(ab_dims + ab_dims).transpose(inv + [i + n for i in inv])
    return HermitianOperator(t.reshape(mat.shape), dims)


def _project(op: HermitianOperator, basis: ProjectorBasis):
    els = basis.elements
    tr = np.asarray(basis.traces, dtype=np.float64)
    raw = np.array([e.inner(op) for e in els]) / tr
    approx = sum(x * e.matrix for x, e in zip(raw, els))
    return SymmetricOperator(basis, raw), float(np.linalg.norm(op.matrix - approx))


def optimal_witness(
    rho: HermitianOperator,
    samples: SampleSet,
    restrict_symmetric: bool = True,
    settings: SolverSettings | None = None,
) -> WitnessReport:
    """Minimize ``Tr(W rho)`` over unit-trace ``W`` positive on the sampled blocks.

    Parameters
    ----------
    rho : HermitianOperator
        Unit-trace operator on ``[2, 2, d, d, ...]``.
    samples : SampleSet
        States on side A (dimension ``2 d^N``).
    restrict_symmetric : bool
        Optimize over the enlarged projector basis (one or two copies)
        instead of all Hermitian operators. The full parametrization is
        available for one copy only.
    settings : SolverSettings, optional

    Returns
    -------
    WitnessReport
        ``value`` lower-bounds the true optimal witness value; the report
        carries no verification until :func:`verify_witness` is run.
    """
    geo = Geometry.of(rho)
    if abs(rho.trace() - 1.0) > 1e-9:
        raise ValueError("rho must have unit trace")
    if samples.dim != geo.side_dim:
        raise ValueError(f"samples live in dimension {samples.dim}, side A has {geo.side_dim}")
    settings = settings or SolverSettings()
    if restrict_symmetric:
        prob, basis = _symmetric_problem(rho, samples, geo)
        sol = solve(prob, settings)
        _require(sol)
        c = sol.x / np.sum(sol.x)
        wit = SymmetricOperator(basis, c, normalized=True)
        dense = wit.densify()
        residual = 0.0
    else:
        if geo.dim > FULL_MODE_MAX_DIM:
            raise CapacityError("full Hermitian parametrization is limited to one copy")
        d_total = geo.dim
        t = hermitian_basis(d_total)
        rho_ab = _to_ab(rho, geo)
        objective = np.asarray((t.conj().T @ rho_ab.reshape(-1))).real
        eq = np.zeros((1, t.shape[1]))
        eq[0, :d_total] = 1.0
        group = CompressionGroup(samples.states, (geo.side_dim, geo.side_dim), t)
        prob = LmiProblem(objective, eq_matrix=eq, eq_rhs=[1.0], groups=[group])
        sol = solve(prob, settings)
        _require(sol)
        w_ab = group.operator(sol.x)
        w_ab = w_ab / np.trace(w_ab).real
        dense = _from_ab(w_ab, rho.dims, geo)
        wit, residual = _project(dense, basis_full(geo.n_copies, geo.d)) if geo.n_copies <= 2 else (None, 0.0)
        if wit is not None:
            wit = wit.as_normalized()
    report = WitnessReport(
        witness=wit,
        dense=dense,
        value=dense.inner(rho),
        target=rho,
        provenance=dict(samples.origin, count=len(samples)),
        solver=sol.diagnostics(),
        mode="symmetric" if restrict_symmetric else "full",
        symmetry_residual=residual,
        problem=prob,
        solution_x=sol.x,
    )
    return report


def _require(sol):
    if sol.status != "optimal":
        raise SolverFailure(f"witness SDP ended with status {sol.status}: {sol.message}", sol)


def verify_witness(
    w: HermitianOperator,
    multistarts: int = DEFAULT_MULTISTARTS,
    seed: int = 0,
    split: SubsystemSplit | None = None,
    tol: float = 1e-12,
    max_iter: int = 500,
    spectral_starts: int = SPECTRAL_EIGVECS,
) -> Verification:
    """Search for the product state minimizing ``<psi_A chi_B| W |psi_A chi_B>``.

    Alternates exact lowest-eigenvector updates on each side from
    ``multistarts`` Haar-random starts (start ``j`` uses the stream
    ``(seed, j)``) plus deterministic starts: the side-A eigenvectors of the
    reduced states of the ``spectral_starts`` lowest eigenvectors of ``W``.
    The minimum found is an upper bound on the true minimum over product
    states.
    """
    if multistarts < 1:
        raise ValueError("need at least one start")
    if split is None:
        split = SubsystemSplit.interleaved(len(w.dims))
    t = bipartite_tensor(w, split)
    da, db = t.shape[0], t.shape[1]
    starts = [haar_vectors(da, 1, rng_stream(seed, j))[0] for j in range(multistarts)]
    if spectral_starts > 0:
        _, vecs = np.linalg.eigh(t.reshape(da * db, da * db))
        for k in range(min(spectral_starts, da * db)):
            psi = vecs[:, k].reshape(da, db)
            _, ev = np.linalg.eigh(psi @ psi.conj().T)
            starts.extend(ev.T)
    values, psis, chis, _ = kernels.seesaw_product(t, np.array(starts), tol, max_iter)
    best = int(np.argmin(values))
    return Verification(float(values[best]), psis[best], chis[best], multistarts, seed, values, psis)


def cutting_plane_witness(
    rho: HermitianOperator,
    samples: SampleSet,
    rounds: int = 10,
    settings: SolverSettings | None = None,
    restrict_symmetric: bool = True,
    multistarts: int = DEFAULT_MULTISTARTS,
    seed: int = 0,
    violation_tol: float = VIOLATION_TOL,
    max_cuts: int = 20,
) -> WitnessReport:
    """Alternate solving and verification, adding violated product states.

    Every round solves the relaxed problem, runs :func:`verify_witness` and,
    if some product state gives an expectation below ``-violation_tol``,
    appends the side-A states of the (up to ``max_cuts``) most violating
    starts as new blocks.
    """
    if rounds < 1:
        raise ValueError("need at least one round")
    current = samples
    report = None
    for r in range(1, rounds + 1):
        report = optimal_witness(rho, current, restrict_symmetric, settings)
        ver = verify_witness(report.dense, multistarts, seed + r - 1)
        report.verification = ver
        report.rounds = r
        if ver.min_value >= -violation_tol:
            break
        order = np.argsort(ver.values, kind="stable")
        bad = [j for j in order[:max_cuts] if ver.values[j] < -violation_tol]
        current = current.extended(ver.psis[bad], f"round {r}: {len(bad)} cuts")
    report.provenance = dict(current.origin, count=len(current))
    return report


def deterministic_samples(rho: HermitianOperator, w_candidate: HermitianOperator) -> SampleSet:
    """Side-A states from the border state of ``rho`` along the identity direction.

    Forms ``sigma = (rho - t I) / (1 - D t)`` with ``t = Tr(W rho)``; every
    eigenvector of ``sigma`` gives a reduced state on side A whose
    eigenvectors are all returned (``D * dA`` states).
    """
    geo = Geometry.of(rho)
    if w_candidate.dims != rho.dims:
        raise ValueError("candidate witness and state live on different spaces")
    t = w_candidate.inner(rho)
    dim = rho.dim
    denom = 1.0 - dim * t
    if denom <= 1e-12:
        raise ValueError(f"border-state denominator 1 - D Tr(W rho) = {denom:.3e} is not positive")
    sigma = (rho.matrix - t * np.eye(dim)) / denom
    _, vecs = np.linalg.eigh(sigma)
    tens = bipartite_tensor(HermitianOperator(np.eye(dim), rho.dims), geo.split)
    da, db = tens.shape[0], tens.shape[1]
    perm = _ab_permutation(geo)
    out = []
    for k in range(dim):
        psi = vecs[:, k].reshape(rho.dims).transpose(perm).reshape(da, db)
        red = psi @ psi.conj().T
        _, ev = np.linalg.eigh(0.5 * (red + red.conj().T))
        out.extend(ev.T)
    return SampleSet(np.array(out), {"kind": "deterministic-recipe", "n": len(out)})


@dataclass(frozen=True)
class Robustness:
    """Random robustness ``max(0, -D value)`` with a detection flag."""

    value: float
    raw: float
    detected: bool

    def to_dict(self):
        return {"value": self.value, "raw": self.raw, "detected": self.detected}


def random_robustness(rho: HermitianOperator, witness_value: float, tol: float = 1e-10) -> Robustness:
    """Identity mixing needed to reach the witness plane: ``-Tr(I) * value``."""
    raw = -rho.dim * float(witness_value)
    return Robustness(max(0.0, raw), raw, raw > tol)


def border_state(rho: HermitianOperator, witness_value: float, tol: float = 1e-12) -> HermitianOperator:
    """``(rho + Rr I / D) / (1 + Rr)``: the mixture lying on the witness plane.

    A state already on the plane (``|Rr| <= tol``) is returned unchanged.
    """
    rr = -rho.dim * float(witness_value)
    if rr < -tol:
        raise ValueError(f"state is not detected (Rr = {rr:.3e}); no border state")
    if rr <= tol:
        return rho
    return HermitianOperator((rho.matrix + rr * np.eye(rho.dim) / rho.dim) / (1.0 + rr), rho.dims)
