"""Distillability certificates for qudit Werner states.

Two complementary routes:

* the witness pipeline decides whether ``W_N`` is an entanglement witness by
  comparing it with the optimal witness of the PPT state it detects most
  (``W_N`` not a witness means ``N`` copies are distillable);
* :func:`rank_two_search` looks directly for a Schmidt-rank-two vector with
  negative expectation on ``(rho^{(x)N})^{T_A}``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from wernerwit import kernels
from wernerwit.operators import (
    CapacityError,
    HermitianOperator,
    SubsystemSplit,
    bipartite_tensor,
    haar_vectors,
    lambda_min,
    partial_transpose,
    rng_stream,
    tensor,
)
from wernerwit.sdp import LmiBlock, LmiProblem, SolverSettings, solve
from wernerwit.werner import (
    ProjectorBasis,
    SymmetricOperator,
    WernerParams,
    basis_full,
    copy_split,
    extend_to_full,
    werner_state,
    wn_coefficients,
    wn_dense,
)
from wernerwit.witness import (
    DEFAULT_MULTISTARTS,
    SolverFailure,
    WitnessReport,
    cutting_plane_witness,
    deterministic_samples,
    haar_samples,
    verify_witness,
)

SCHEMA_VERSION = 1
MARGIN_TOL = 1e-5
COEFF_TOL = 1e-3
PRODUCT_FLOOR = -1e-6
SCHMIDT_TOL = 1e-10

NOT_EW = "NOT_EW"
EW = "EW"
OPTIMAL_EW = "OPTIMAL_EW"
INCONCLUSIVE = "INCONCLUSIVE"


def _basis_split(basis: ProjectorBasis) -> SubsystemSplit:
    if basis.kind == "A":
        return SubsystemSplit.interleaved(2 * basis.n_copies)
    return copy_split(basis.n_copies)


def most_detected_ppt(
    w: HermitianOperator, basis: ProjectorBasis, settings: SolverSettings | None = None
) -> SymmetricOperator:
    """PPT state in the span of ``basis`` minimizing ``Tr(W pi)``.

    Positivity of ``pi`` reduces to non-negative simplex weights because the
    basis elements are orthogonal projectors; the partial transpose is one
    dense LMI block. Returns normalized coefficients (probabilities).

    Raises
    ------
    SolverFailure
        If the SDP does not reach an optimal status.
    """
    if not basis.orthogonal:
        raise ValueError("most_detected_ppt needs an orthogonal projector basis")
    if w.dims != basis.dims:
        raise ValueError("witness and basis live on different spaces")
    els = basis.elements
    tr = np.asarray(basis.traces, dtype=np.float64)
    split = _basis_split(basis)
    objective = np.array([w.inner(e) for e in els]) / tr
    pts = np.array([partial_transpose(e, split).matrix for e in els]) / tr[:, None, None]
    block = LmiBlock(np.zeros(pts.shape[1:], dtype=pts.dtype), pts)
    prob = LmiProblem(
        objective,
        [block],
        eq_matrix=np.ones((1, basis.size)),
        eq_rhs=[1.0],
        lower=np.zeros(basis.size),
    )
    sol = solve(prob, settings or SolverSettings())
    if sol.status != "optimal":
        raise SolverFailure(f"PPT search ended with status {sol.status}: {sol.message}", sol)
    p = np.clip(sol.x, 0.0, None)
    p = p / p.sum()
    return SymmetricOperator(basis, p, normalized=True)


def optimal_face_width(
    w: HermitianOperator, basis: ProjectorBasis, slack: float = 1e-7, settings: SolverSettings | None = None
) -> np.ndarray:
    """Range of each weight over PPT states within ``slack`` of the optimum.

    Returns ``max_i - min_i`` per coordinate; a positive entry marks a
    non-unique optimizer.
    """
    best = most_detected_ppt(w, basis, settings)
    els = basis.elements
    tr = np.asarray(basis.traces, dtype=np.float64)
    split = _basis_split(basis)
    objective = np.array([w.inner(e) for e in els]) / tr
    target = float(objective @ best.coeffs) + slack
    pts = np.array([partial_transpose(e, split).matrix for e in els]) / tr[:, None, None]
    block = LmiBlock(np.zeros(pts.shape[1:], dtype=pts.dtype), pts)
    # Objective cut as a scalar block: target - objective . p >= 0.
    cut = LmiBlock([[target]], -objective[:, None, None])
    width = np.zeros(basis.size)
    for i in range(basis.size):
        ext = []
        for sign in (1.0, -1.0):
            c = np.zeros(basis.size)
            c[i] = sign
            prob = LmiProblem(c, [block, cut], np.ones((1, basis.size)), [1.0], lower=np.zeros(basis.size))
            sol = solve(prob, settings or SolverSettings())
            ext.append(sol.x[i])
        width[i] = max(0.0, ext[1] - ext[0])
    return width


def line_family_ppt(start: HermitianOperator, end: HermitianOperator, tol: float = 1e-12) -> float:
    """Smallest ``p`` with ``((1 - p) start/Tr + p end/Tr)^{T_A} >= 0``.

    Bisection on the smallest eigenvalue of the partial transpose, which is
    concave along the segment and non-negative at ``end``.
    """
    if start.dims != end.dims:
        raise ValueError("segment endpoints live on different spaces")
    split = SubsystemSplit.interleaved(len(start.dims))
    a = partial_transpose(start / start.trace(), split).matrix
    b = partial_transpose(end / end.trace(), split).matrix

    def lam(p):
        return float(np.linalg.eigvalsh((1.0 - p) * a + p * b)[0])

    if lam(1.0) < -1e-12:
        raise ValueError("segment end is not PPT; no PPT point on the segment")
    if lam(0.0) >= -1e-12:
        return 0.0
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if lam(mid) >= 0.0:
            hi = mid
        else:
            lo = mid
    return hi


def line_family_sdp(start: HermitianOperator, end: HermitianOperator, settings: SolverSettings | None = None) -> float:
    """Same threshold as :func:`line_family_ppt`, posed as a one-variable SDP."""
    split = SubsystemSplit.interleaved(len(start.dims))
    a = partial_transpose(start / start.trace(), split).matrix
    b = partial_transpose(end / end.trace(), split).matrix
    prob = LmiProblem([1.0], [LmiBlock(a, (b - a)[None])], lower=[0.0], upper=[1.0])
    sol = solve(prob, settings or SolverSettings())
    if sol.status != "optimal":
        raise SolverFailure(f"line-family SDP ended with status {sol.status}", sol)
    return float(sol.x[0])


def classify_beta(d: int, beta: float) -> str:
    """Threshold label for a Werner parameter."""
    p = WernerParams(d, beta)
    if p.is_separable:
        return "separable"
    if p.is_one_distillable:
        return "1-distillable"
    return "conjectured-undistillable-window"


@dataclass
class CertificationVerdict:
    """Outcome of the witness pipeline for ``W_N(beta)``."""

    d: int
    beta: float
    n_copies: int
    pi_star: SymmetricOperator
    report: WitnessReport | None
    verdict: str
    margin: float
    candidate_value: float
    witness_value: float
    coefficient_distance: float
    verify_min: float
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "d": self.d,
            "beta": self.beta,
            "n_copies": self.n_copies,
            "verdict": self.verdict,
            "margin": self.margin,
            "candidate_value": self.candidate_value,
            "witness_value": self.witness_value,
            "coefficient_distance": self.coefficient_distance,
            "verify_min": self.verify_min,
            "pi_star": [float(x) for x in self.pi_star.coeffs],
            "witness": None if self.report is None else self.report.to_dict(),
            "note": self.note,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def candidate_coefficients(p: WernerParams, n_copies: int) -> np.ndarray:
    """Normalized coefficients of ``W_N`` over the enlarged basis."""
    return extend_to_full(wn_coefficients(p, n_copies)).normalized_coeffs()


def certify(
    d: int,
    beta: float,
    n_copies: int,
    settings: SolverSettings | None = None,
    multistarts: int = DEFAULT_MULTISTARTS,
    seed: int = 0,
    rounds: int = 10,
    samples: int | None = None,
    pi: SymmetricOperator | None = None,
) -> CertificationVerdict:
    """Decide whether ``W_N(beta)`` is a (optimal) entanglement witness.

    Pipeline: most detected PPT state ``pi*`` of ``W_N``; optimal witness of
    ``pi*`` from the deterministic recipe refined by cutting planes; then

    * ``Tr(W_N pi*) < value - 1e-5``: ``NOT_EW``;
    * coefficient distance ``<= 1e-3`` and product-state minimum
      ``>= -1e-6``: ``OPTIMAL_EW``;
    * product-state minimum ``>= -1e-6``: ``EW``;
    * otherwise the see-saw found a violating product state: ``NOT_EW``.

    Solver failures give ``INCONCLUSIVE``. ``samples`` replaces the
    deterministic recipe by that many Haar states drawn from ``seed``;
    ``pi`` replaces the most detected PPT state by a given state.
    """
    if n_copies not in (1, 2):
        raise ValueError("certification covers one and two copies")
    params = WernerParams(d, beta)
    w = wn_dense(params, n_copies)
    basis = basis_full(n_copies, d)
    if pi is None:
        try:
            pi = most_detected_ppt(w, basis, settings)
        except SolverFailure as exc:
            return _inconclusive(params, n_copies, basis, str(exc))
    elif pi.basis != basis:
        raise ValueError("pi must be expressed over the enlarged basis of the same copy count")
    pi_dense = pi.densify()
    cand = w.inner(pi_dense)
    try:
        if samples is None:
            pool = deterministic_samples(pi_dense, w)
        else:
            pool = haar_samples(copy_split(n_copies).side_dims(pi_dense.dims)[0], samples, seed)
        report = cutting_plane_witness(
            pi_dense, pool, rounds=rounds, settings=settings, multistarts=multistarts, seed=seed
        )
    except (SolverFailure, ValueError) as exc:
        return _inconclusive(params, n_copies, basis, str(exc), pi)
    value = report.value
    dist = float(np.max(np.abs(report.coefficients - candidate_coefficients(params, n_copies))))
    ver = verify_witness(w, multistarts, seed)
    margin = cand - value
    if cand < value - MARGIN_TOL:
        verdict = NOT_EW
    elif dist <= COEFF_TOL and ver.min_value >= PRODUCT_FLOOR:
        verdict = OPTIMAL_EW
    elif ver.min_value >= PRODUCT_FLOOR:
        verdict = EW
    else:
        verdict = NOT_EW
    return CertificationVerdict(
        d, float(beta), n_copies, pi, report, verdict, float(margin), float(cand), float(value), dist,
        float(ver.min_value),
    )


def _inconclusive(params, n, basis, note, pi=None):
    if pi is None:
        pi = SymmetricOperator(basis, np.full(basis.size, np.nan), normalized=True)
    nan = float("nan")
    return CertificationVerdict(params.d, params.beta, n, pi, None, INCONCLUSIVE, nan, nan, nan, nan, nan, note)


@dataclass
class RankTwoSearchResult:
    """Best Schmidt-rank-two vector found by the see-saw.

    ``psi = s[0] e[0] (x) f[0] + s[1] e[1] (x) f[1]`` with orthonormal
    ``e``, ``f`` and ``s[0]^2 + s[1]^2 = 1``.
    """

    value: float
    e: np.ndarray
    f: np.ndarray
    s: np.ndarray
    iterations: int
    winner: int
    multistarts: int
    seed: int
    third_singular: float

    @property
    def violation_found(self) -> bool:
        return self.value < PRODUCT_FLOOR

    @property
    def vector(self) -> np.ndarray:
        """Coefficient matrix ``psi[a, b]`` on the A|B cut."""
        return sum(self.s[i] * np.outer(self.e[i], self.f[i]) for i in range(2))

    def summary(self) -> str:
        if self.violation_found:
            return f"violation found: value {self.value:.6g}"
        return f"no violation found (multistarts={self.multistarts})"

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "value": float(self.value),
            "violation_found": bool(self.violation_found),
            "summary": self.summary(),
            "s": [float(x) for x in self.s],
            "iterations": int(self.iterations),
            "winner": int(self.winner),
            "multistarts": int(self.multistarts),
            "seed": int(self.seed),
            "third_singular_value": float(self.third_singular),
        }


def distillability_operator(rho, n_copies: int) -> HermitianOperator:
    """``(rho^{(x)N})^{T_A}`` on interleaved qudit pairs (dense, N <= 2)."""
    if isinstance(rho, WernerParams):
        rho = werner_state(rho)
    if len(rho.dims) != 2:
        raise ValueError("rank_two_search expects a two-qudit state")
    if n_copies not in (1, 2):
        raise CapacityError("dense rank-two search is limited to two copies")
    power = tensor(*([rho] * n_copies))
    return partial_transpose(power, SubsystemSplit.interleaved(2 * n_copies))


def rank_two_search(
    rho,
    n_copies: int = 1,
    multistarts: int = DEFAULT_MULTISTARTS,
    seed: int = 0,
    tol: float = 1e-12,
    max_iter: int = 500,
    spectral_starts: int = 8,
) -> RankTwoSearchResult:
    """Minimize ``<psi| (rho^{(x)N})^{T_A} |psi>`` over Schmidt rank <= 2.

    Each see-saw step minimizes over ``span{e1, e2} (x) span{f1, f2}`` with
    one side's frame fixed; start ``j`` draws its side-B frame from the
    stream ``(seed, j)``. Deterministic starts follow: the leading Schmidt
    frames of the ``spectral_starts`` lowest eigenvectors. The winner is the minimum under the ordering
    ``(value, start index)``.
    """
    if multistarts < 1:
        raise ValueError("need at least one start")
    x = distillability_operator(rho, n_copies)
    split = SubsystemSplit.interleaved(len(x.dims))
    t = bipartite_tensor(x, split)
    db = t.shape[1]
    da = t.shape[0]
    frames = []
    for j in range(multistarts):
        g = haar_vectors(db, 2, rng_stream(seed, j)).T
        q, _ = np.linalg.qr(g)
        frames.append(q)
    if spectral_starts > 0:
        _, vecs = np.linalg.eigh(t.reshape(da * db, da * db))
        for k in range(min(spectral_starts, da * db)):
            _, _, vh = np.linalg.svd(vecs[:, k].reshape(da, db))
            frames.append(np.ascontiguousarray(vh[:2].T))
    values, coeffs, iters = kernels.seesaw_rank_two(t, np.array(frames), tol, max_iter)
    order = sorted(range(len(frames)), key=lambda j: (values[j], j))
    best = order[0]
    c = coeffs[best]
    u, sv, vh = np.linalg.svd(c)
    third = float(sv[2]) if sv.shape[0] > 2 else 0.0
    s = sv[:2] / np.linalg.norm(sv[:2])
    e = u[:, :2].T
    f = vh[:2]
    psi = sum(s[i] * np.outer(e[i], f[i]) for i in range(2)).ravel()
    flat = t.reshape(da * db, da * db)
    value = float(np.vdot(psi, flat @ psi).real) if third <= SCHMIDT_TOL else float(values[best])
    return RankTwoSearchResult(value, e, f, s, int(iters[best]), best, multistarts, seed, third)


def ppt_lambda_min(pi: SymmetricOperator) -> float:
    """Smallest eigenvalue of the partial transpose of a basis state."""
    return lambda_min(partial_transpose(pi.densify(), _basis_split(pi.basis)))
