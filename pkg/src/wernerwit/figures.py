"""Point clouds for the one-copy symmetric state space in ``G`` coordinates.

Every one-copy state ``sum p_i B_i / Tr(B_i)`` is written as
``I / D + g1 G1 + g2 G2 + g3 G3``. Three kinds of points are produced:

``border-separable``
    for a random entangled state, the mixture with the identity that lies
    on its optimal witness plane;
``plane``
    ``(rho - t I) / (1 - D t)`` with ``t = Tr(W_1(beta) rho)``, a state on
    the plane ``Tr(W_1(beta) phi) = 0``;
``pi-star`` and ``basis-vertex``
    fixed reference states.

Within this family a symmetric witness suffices, so optimal witnesses are
the facets of the separable region, which is approximated by the convex hull
of see-saw support points.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from wernerwit import kernels
from wernerwit.operators import bipartite_tensor, haar_vectors, rng_stream
from wernerwit.werner import (
    WernerParams,
    basis_full,
    basis_G,
    copy_split,
    extend_to_full,
    g_coords_from_probs,
    wn_coefficients,
)

CSV_HEADER = ("g1", "g2", "g3", "kind", "beta")
KINDS = ("border-separable", "plane", "pi-star", "basis-vertex")
DEFAULT_BETAS = (-0.5, -0.45, -0.4, -1.0 / 3.0)
DEFAULT_SAMPLES = 10_000
FULL_SCALE_SAMPLES = 1_000_000
PI_STAR = (1.0 / 7.0, 0.0, 0.0, 6.0 / 7.0)
_CHUNK = 100_000


@dataclass(frozen=True)
class FigurePoint:
    g1: float
    g2: float
    g3: float
    kind: str
    beta: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown point kind {self.kind!r}")

    @property
    def g(self) -> np.ndarray:
        return np.array([self.g1, self.g2, self.g3])

    def row(self) -> list[str]:
        beta = "" if self.beta is None else repr(float(self.beta))
        return [repr(float(self.g1)), repr(float(self.g2)), repr(float(self.g3)), self.kind, beta]


@dataclass
class FigureData:
    points: list
    counters: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for p in self.points:
            w.writerow(p.row())
        return buf.getvalue()

    def of_kind(self, kind: str) -> list:
        return [p for p in self.points if p.kind == kind]


def read_csv(text: str) -> list[FigurePoint]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != CSV_HEADER:
        raise ValueError("figure CSV must start with header g1,g2,g3,kind,beta")
    out = []
    for r in rows[1:]:
        beta = float(r[4]) if r[4] else None
        out.append(FigurePoint(float(r[0]), float(r[1]), float(r[2]), r[3], beta))
    return out


def fibonacci_sphere(n: int) -> np.ndarray:
    """``n`` nearly uniform unit vectors in three dimensions."""
    i = np.arange(n) + 0.5
    z = 1.0 - 2.0 * i / n
    r = np.sqrt(1.0 - z * z)
    phi = np.pi * (1.0 + 5.0**0.5) * i
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)


def _g_gram(d):
    gs = basis_G(d).elements
    return np.array([[a.inner(b) for b in gs] for a in gs])


def separable_support_points(d: int = 3, directions: int = 400, multistarts: int = 8, seed: int = 0) -> np.ndarray:
    """Weights ``p_i = <B_i>`` of product states minimizing linear functionals.

    For each direction ``u`` in ``g`` space, minimize ``u . g(tau)`` over
    product states ``tau`` with the see-saw; the minimizers' twirled weights
    are extreme points of (an inner approximation of) the separable region.
    """
    gram = _g_gram(d)
    gs = basis_G(d).elements
    split = copy_split(1)
    tens = [bipartite_tensor(g, split) for g in gs]
    da = tens[0].shape[0]
    els = basis_full(1, d).elements
    btens = [bipartite_tensor(b, split) for b in els]
    out = []
    for k, u in enumerate(fibonacci_sphere(directions)):
        # u . g(tau) = sum_l n_l Tr(G_l tau) with n = Gram^{-1} u.
        n = np.linalg.solve(gram, u)
        w = sum(c * t for c, t in zip(n, tens))
        starts = haar_vectors(da, multistarts, rng_stream(seed, 2, k))
        vals, psis, chis, _ = kernels.seesaw_product(w, starts)
        j = int(np.argmin(vals))
        prod_state = np.einsum("a,b->ab", psis[j], chis[j])
        out.append([float(np.einsum("ab,abcd,cd->", prod_state.conj(), bt, prod_state).real) for bt in btens])
    p = np.clip(np.array(out), 0.0, None)
    return p / p.sum(axis=1, keepdims=True)


class SeparableHull:
    """Convex hull of separable support points in ``g`` space."""

    def __init__(self, probs, d: int = 3):
        self.d = d
        self.probs = np.asarray(probs, dtype=np.float64)
        self.points = g_coords_from_probs(self.probs, d)
        try:
            self.hull = ConvexHull(self.points)
        except QhullError as exc:
            raise ValueError(f"support points do not span a three-dimensional hull: {exc}") from exc
        eq = self.hull.equations
        self.normals = eq[:, :3]
        self.offsets = eq[:, 3]
        if np.any(self.offsets >= 0):
            raise ValueError("maximally mixed state is not interior to the separable hull")

    @classmethod
    def build(cls, d: int = 3, directions: int = 400, multistarts: int = 8, seed: int = 0):
        return cls(separable_support_points(d, directions, multistarts, seed), d)

    def exit_scale(self, g) -> np.ndarray:
        """Largest ``s`` with ``s g`` inside the hull (``inf`` at the origin)."""
        g = np.atleast_2d(g)
        proj = g @ self.normals.T
        with np.errstate(divide="ignore", invalid="ignore"):
            s = np.where(proj > 0, -self.offsets / proj, np.inf)
        return s.min(axis=1)

    def contains(self, g, tol: float = 1e-12) -> np.ndarray:
        return self.exit_scale(g) >= 1.0 - tol


def plane_coefficients(beta: float, d: int = 3) -> np.ndarray:
    """Raw coefficients of ``W_1(beta)`` over the enlarged one-copy basis."""
    return extend_to_full(wn_coefficients(WernerParams(d, beta), 1)).raw()


def plane_state_probs(probs, beta: float, d: int = 3):
    """Weights of ``(rho - t I)/(1 - D t)`` and a mask of valid states.

    Rows whose denominator is not positive, or whose result has a negative
    weight, are masked out.
    """
    probs = np.atleast_2d(np.asarray(probs, dtype=np.float64))
    lam = plane_coefficients(beta, d)
    tr = np.asarray(basis_full(1, d).traces, dtype=np.float64)
    dim = tr.sum()
    t = probs @ lam
    denom = 1.0 - dim * t
    ok = denom > 1e-12
    safe = np.where(ok, denom, 1.0)
    out = (probs - t[:, None] * tr[None, :]) / safe[:, None]
    ok &= np.all(out >= -1e-12, axis=1)
    return out, ok


def plane_residual(point: FigurePoint, d: int = 3) -> float:
    """``Tr(W_1(beta) phi)`` for a plane point rebuilt from its coordinates."""
    lam = plane_coefficients(point.beta, d)
    gmat = np.array([[d * d - 1, -1, 0, 0], [0, 0, d * d - 1, -1], [-3, -3, 1, 1]], dtype=np.float64)
    tr = np.asarray(basis_full(1, d).traces, dtype=np.float64)
    # Tr(W I)/D + sum_k g_k Tr(W G_k) with Tr(W G_k) = sum_i G_ki lam_i Tr(B_i).
    return float((lam @ tr) / tr.sum() + point.g @ (gmat @ (lam * tr)))


def figure_data(
    samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
    betas=DEFAULT_BETAS,
    d: int = 3,
    hull: SeparableHull | None = None,
) -> FigureData:
    """Random simplex states, their border states and the ``W_1(beta)`` plane states.

    States are drawn Dirichlet-uniform over the four weights in chunks of
    ``1e5``; chunk ``k`` uses the stream ``(seed, 1, k)``.
    """
    if samples < 1:
        raise ValueError("need at least one sample")
    hull = hull or SeparableHull.build(d, seed=seed)
    points = [FigurePoint(*g_coords_from_probs(PI_STAR, d), "pi-star")]
    for i in range(4):
        e = np.zeros(4)
        e[i] = 1.0
        points.append(FigurePoint(*g_coords_from_probs(e, d), "basis-vertex"))
    counters = {"drawn": 0, "border": 0, "separable_skipped": 0, "plane": 0, "plane_skipped": 0}
    border, planes = [], {float(b): [] for b in betas}
    for k, lo in enumerate(range(0, samples, _CHUNK)):
        n = min(_CHUNK, samples - lo)
        probs = rng_stream(seed, 1, k).dirichlet(np.ones(4), size=n)
        counters["drawn"] += n
        g = g_coords_from_probs(probs, d)
        s = hull.exit_scale(g)
        ent = s < 1.0
        counters["separable_skipped"] += int(np.sum(~ent))
        border.append(g[ent] * s[ent][:, None])
        for b in betas:
            ph, ok = plane_state_probs(probs, b, d)
            counters["plane_skipped"] += int(np.sum(~ok))
            planes[float(b)].append(g_coords_from_probs(ph[ok], d).reshape(-1, 3))
    for row in np.concatenate(border):
        points.append(FigurePoint(*row, "border-separable"))
    for b in betas:
        for row in np.concatenate(planes[float(b)]):
            points.append(FigurePoint(*row, "plane", float(b)))
    counters["border"] = sum(len(x) for x in border)
    counters["plane"] = sum(len(p) for v in planes.values() for p in v)
    meta = {
        "samples": int(samples),
        "seed": int(seed),
        "betas": [float(b) for b in betas],
        "distribution": "dirichlet(1,1,1,1)",
        "hull_vertices": int(len(hull.hull.vertices)),
    }
    return FigureData(points, counters, meta)


@dataclass
class AxisFit:
    """Shared line of the fitted ``beta`` planes."""

    direction: np.ndarray
    anchor: np.ndarray
    plane_residual: float
    line_residual: float

    def deviation_from(self, axis: int) -> float:
        """``1 - |direction . e_axis|`` (zero when parallel to that ``G`` axis)."""
        return float(1.0 - abs(self.direction[axis]))


def fit_common_axis(points) -> AxisFit:
    """Fit a plane per ``beta`` and intersect them all in one line.

    ``plane_residual`` is the worst distance of a point from its fitted
    plane; ``line_residual`` is the least-squares residual of the stacked
    plane equations restricted to the common line.
    """
    by_beta: dict = {}
    for p in points:
        if p.kind == "plane":
            by_beta.setdefault(p.beta, []).append(p.g)
    if len(by_beta) < 2:
        raise ValueError("need plane points for at least two beta values")
    normals, offsets, worst = [], [], 0.0
    for b in sorted(by_beta):
        pts = np.array(by_beta[b])
        centre = pts.mean(axis=0)
        _, _, vh = np.linalg.svd(pts - centre)
        n = vh[-1]
        normals.append(n)
        offsets.append(-n @ centre)
        worst = max(worst, float(np.max(np.abs((pts - centre) @ n))))
    nm = np.array(normals)
    off = np.array(offsets)
    _, sv, vh = np.linalg.svd(nm)
    direction = vh[-1]
    anchor, *_ = np.linalg.lstsq(nm, -off, rcond=None)
    line_res = float(np.max(np.abs(nm @ anchor + off)))
    # The planes share a line only if the normals have rank two.
    line_res = max(line_res, float(sv[2]) if sv.shape[0] > 2 else 0.0)
    if direction[np.argmax(np.abs(direction))] < 0:
        direction = -direction
    return AxisFit(direction, anchor, worst, line_res)
