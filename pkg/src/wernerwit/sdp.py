"""Small dense semidefinite programs in linear-matrix-inequality form.

Problems read

    minimize    c . x
    subject to  A x = b,
                F_0^(j) + sum_k x_k F_k^(j)  >= 0   for every block j,
                lower <= x <= upper               (optional, per variable)

with Hermitian (real symmetric or complex) blocks. The solver is an
infeasible-start primal-dual path-following method using the HKM search
direction with a Mehrotra predictor-corrector. Blocks of equal size are
stacked into batched groups so each iteration is a handful of GEMM calls.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

SCHEMA_VERSION = 1
STATUSES = ("optimal", "max-iterations", "infeasible", "numerical-failure")
_CHUNK_ENTRIES = 1 << 22


@dataclass(frozen=True)
class SolverSettings:
    """Interior-point controls.

    Attributes
    ----------
    tolerance : float
        Relative bound on primal infeasibility, dual infeasibility and
        duality gap for the ``optimal`` status.
    max_iterations : int
        Iteration cap for one path-following run.
    mu_reduction : float
        Centering parameter used when the predictor-corrector is off or
        has stalled.
    step_fraction : float
        Fraction of the distance to the cone boundary taken per step.
    regularization : float
        Static diagonal regularization of the Newton system, relative to
        its largest diagonal entry.
    predictor_corrector : bool
        Use Mehrotra's adaptive centering and second-order correction.
    complex_mode : {"native", "embed"}
        Solve complex blocks directly or through the real symmetric
        embedding ``[[Re, -Im], [Im, Re]]``.
    phase_one : bool
        When a run does not reach optimality, solve the shifted feasibility
        problem to decide whether the problem is infeasible.
    """

    tolerance: float = 1e-9
    max_iterations: int = 200
    mu_reduction: float = 0.3
    step_fraction: float = 0.98
    regularization: float = 1e-12
    predictor_corrector: bool = True
    complex_mode: str = "native"
    phase_one: bool = True

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")
        if not 0 < self.mu_reduction < 1:
            raise ValueError("mu_reduction must lie in (0, 1)")
        if not 0 < self.step_fraction < 1:
            raise ValueError("step_fraction must lie in (0, 1)")
        if self.regularization < 0:
            raise ValueError("regularization must be non-negative")
        if self.complex_mode not in ("native", "embed"):
            raise ValueError("complex_mode must be 'native' or 'embed'")


@dataclass
class SdpSolution:
    """Result of :func:`solve`.

    ``primal_infeasibility``, ``dual_infeasibility`` and ``gap`` are relative
    measures; ``gap`` is signed (primal minus dual objective over
    ``1 + |primal| + |dual|``).
    """

    x: np.ndarray
    objective: float
    status: str
    primal_infeasibility: float
    dual_infeasibility: float
    gap: float
    iterations: int
    dual_objective: float = float("nan")
    phase_one_shift: float | None = None
    message: str = ""
    history: list = field(default_factory=list, repr=False)

    @property
    def ok(self) -> bool:
        return self.status == "optimal"

    def diagnostics(self) -> dict:
        return {
            "status": self.status,
            "objective": float(self.objective),
            "dual_objective": float(self.dual_objective),
            "primal_infeasibility": float(self.primal_infeasibility),
            "dual_infeasibility": float(self.dual_infeasibility),
            "gap": float(self.gap),
            "iterations": int(self.iterations),
            "phase_one_shift": None if self.phase_one_shift is None else float(self.phase_one_shift),
            "message": self.message,
        }


def _hermitian_array(a, name):
    a = np.asarray(a)
    a = a.astype(np.complex128) if np.iscomplexobj(a) else a.astype(np.float64)
    ah = np.swapaxes(a, -1, -2).conj()
    if a.size and np.max(np.abs(a - ah)) > 1e-9:
        raise ValueError(f"{name} is not Hermitian")
    a = 0.5 * (a + ah)
    if np.iscomplexobj(a) and not np.any(a.imag):
        a = a.real.copy()
    return a


class LmiBlock:
    """One constraint ``constant + sum_k x_k coeffs[k] >= 0``."""

    def __init__(self, constant, coeffs):
        const = _hermitian_array(constant, "constant")
        co = _hermitian_array(coeffs, "coefficient")
        if const.ndim != 2 or const.shape[0] != const.shape[1]:
            raise ValueError("constant must be square")
        if co.ndim != 3 or co.shape[1:] != const.shape:
            raise ValueError("coefficients must have shape (m, n, n) matching the constant")
        if np.iscomplexobj(const) != np.iscomplexobj(co):
            const, co = const.astype(np.complex128), co.astype(np.complex128)
        self.constant = const
        self.coeffs = co

    @property
    def dim(self) -> int:
        return self.constant.shape[0]

    @property
    def num_vars(self) -> int:
        return self.coeffs.shape[0]

    def evaluate(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        out = self.constant.copy()
        for xk, fk in zip(x, self.coeffs):
            out = out + xk * fk
        return out


def _sym(a):
    return 0.5 * (a + np.swapaxes(a, -1, -2).conj())


def _chunks(nb, per_block):
    step = max(1, _CHUNK_ENTRIES // max(1, per_block))
    for lo in range(0, nb, step):
        yield slice(lo, min(nb, lo + step))


class DenseGroup:
    """Stack of ``nb`` blocks of size ``n`` with explicit coefficient matrices."""

    def __init__(self, constants, coeffs):
        self.constants = np.asarray(constants)
        self.coeffs = np.asarray(coeffs)
        nb, m, n, _ = self.coeffs.shape
        if self.constants.shape != (nb, n, n):
            raise ValueError("constant stack does not match coefficient stack")
        self.nb, self.m, self.n = nb, m, n
        self.dtype = np.result_type(self.constants, self.coeffs)
        self.constants = self.constants.astype(self.dtype)
        self.coeffs = self.coeffs.astype(self.dtype)

    @classmethod
    def from_blocks(cls, blocks: Sequence[LmiBlock]) -> "DenseGroup":
        cplx = any(np.iscomplexobj(b.coeffs) for b in blocks)
        dt = np.complex128 if cplx else np.float64
        return cls(
            np.stack([b.constant.astype(dt) for b in blocks]),
            np.stack([b.coeffs.astype(dt) for b in blocks]),
        )

    def constant_norm(self) -> float:
        return float(np.linalg.norm(self.constants))

    def evaluate(self, x):
        return self.constants + self.linear(x)

    def linear(self, dx):
        return np.tensordot(np.asarray(dx, dtype=np.float64), self.coeffs, axes=([0], [1]))

    def adjoint(self, z):
        out = np.zeros(self.m)
        per = self.m * self.n * self.n
        for s in _chunks(self.nb, per):
            out += np.tensordot(self.coeffs[s].conj(), z[s], axes=([0, 2, 3], [0, 1, 2])).real
        return out

    def schur(self, sinv, z):
        m = np.zeros((self.m, self.m))
        per = self.m * self.n * self.n
        for s in _chunks(self.nb, per):
            f = self.coeffs[s]
            x = f @ sinv[s][:, None]
            y = np.swapaxes(f @ z[s][:, None], -1, -2)
            m += np.tensordot(x, y, axes=([0, 2, 3], [0, 2, 3])).real
        return m

    def embedded(self) -> "DenseGroup":
        if not np.iscomplexobj(self.coeffs):
            return self
        return DenseGroup(_embed(self.constants), _embed(self.coeffs))

    def blocks(self) -> Iterable[LmiBlock]:
        for j in range(self.nb):
            yield LmiBlock(self.constants[j], self.coeffs[j])

    def select(self, idx) -> "DenseGroup":
        return DenseGroup(self.constants[idx], self.coeffs[idx])


def _embed(a):
    re, im = a.real, a.imag
    top = np.concatenate([re, -im], axis=-1)
    bot = np.concatenate([im, re], axis=-1)
    return np.concatenate([top, bot], axis=-2)


class NonnegGroup:
    """Scalar constraints ``h + G x >= 0`` treated as 1x1 blocks."""

    def __init__(self, g, h):
        self.g = np.atleast_2d(np.asarray(g, dtype=np.float64))
        self.h = np.asarray(h, dtype=np.float64).ravel()
        self.nb, self.m = self.g.shape
        if self.h.shape != (self.nb,):
            raise ValueError("offset length does not match constraint rows")
        self.n = 1
        self.dtype = np.float64

    def constant_norm(self):
        return float(np.linalg.norm(self.h))

    def evaluate(self, x):
        return (self.h + self.g @ x)[:, None, None]

    def linear(self, dx):
        return (self.g @ dx)[:, None, None]

    def adjoint(self, z):
        return self.g.T @ z[:, 0, 0].real

    def schur(self, sinv, z):
        w = (sinv[:, 0, 0] * z[:, 0, 0]).real
        return (self.g.T * w) @ self.g

    def embedded(self):
        return self

    def blocks(self):
        for j in range(self.nb):
            yield LmiBlock(self.h[j : j + 1, None], self.g[j][:, None, None])


def hermitian_basis(dim: int) -> sp.csc_matrix:
    """Orthonormal Hermitian basis of ``dim x dim`` matrices as columns of vec.

    Columns hold row-major vectorizations. The first ``dim`` columns are the
    diagonal units, so ``Tr(W)`` is the sum of the first ``dim`` coordinates.
    """
    rows, cols, vals = [], [], []
    col = 0
    for i in range(dim):
        rows.append(i * dim + i)
        cols.append(col)
        vals.append(1.0)
        col += 1
    r = 1.0 / np.sqrt(2.0)
    for i in range(dim):
        for j in range(i + 1, dim):
            rows += [i * dim + j, j * dim + i]
            cols += [col, col]
            vals += [r, r]
            col += 1
            rows += [i * dim + j, j * dim + i]
            cols += [col, col]
            vals += [1j * r, -1j * r]
            col += 1
    return sp.csc_matrix((np.array(vals, dtype=np.complex128), (rows, cols)), shape=(dim * dim, dim * dim))


class CompressionGroup:
    """Blocks ``<psi_j| W(x) |psi_j>`` for a bipartite operator ``W(x) = T x``.

    ``vectors`` are states on side A (rows), ``dims = (dA, dB)`` and ``basis``
    maps the variables to the row-major vectorization of ``W`` on
    ``A (x) B``. The Schur complement is assembled through one GEMM over the
    sample index instead of forming per-block coefficient matrices.
    """

    def __init__(self, vectors, dims, basis: sp.spmatrix):
        self.vectors = np.asarray(vectors, dtype=np.complex128)
        self.da, self.db = dims
        self.nb = self.vectors.shape[0]
        if self.vectors.shape[1] != self.da:
            raise ValueError("vectors do not match side-A dimension")
        big = self.da * self.db
        if basis.shape[0] != big * big:
            raise ValueError("basis does not match operator dimension")
        self.basis = sp.csc_matrix(basis)
        self.m = basis.shape[1]
        self.n = self.db
        self.dtype = np.complex128

    def constant_norm(self):
        return 0.0

    def operator(self, x):
        big = self.da * self.db
        w = (self.basis @ np.asarray(x, dtype=np.float64)).reshape(big, big)
        return 0.5 * (w + w.conj().T)

    def evaluate(self, x):
        w = self.operator(x).reshape(self.da, self.db, self.da, self.db)
        return np.einsum("ja,aibk,jb->jik", self.vectors.conj(), w, self.vectors, optimize=True)

    linear = evaluate

    def adjoint(self, z):
        y = np.einsum("ja,jc,jik->aick", self.vectors, self.vectors.conj(), z, optimize=True)
        big = self.da * self.db
        # Tr(E_k Y) = vdot(vec E_k, vec Y) for Hermitian Y.
        return (self.basis.conj().T @ y.reshape(big * big)).real

    def schur(self, sinv, z):
        da, db, nb = self.da, self.db, self.nb
        psi = self.vectors
        pc = psi.conj()
        u = np.einsum("ja,jc,je,jg->jaceg", pc, psi, pc, psi, optimize=True).reshape(nb, da**4)
        k = np.einsum("jxy,jwv->jxywv", sinv, z, optimize=True)
        # k[j, x, y, w, v] = Sinv_xy Z_wv ; order as (j, k, l, i) = (x, y, w, v)
        k = k.reshape(nb, db**4)
        phi = (u.T @ k).reshape(da, da, da, da, db, db, db, db)
        # phi[a, c, e, g, j, k, l, i] -> [a, i, c, j, e, k, g, l]
        phi = phi.transpose(0, 7, 1, 4, 2, 5, 3, 6)
        big = (da * db) ** 2
        phi = phi.reshape(big, big)
        t = self.basis
        left = (t.T @ phi)
        return np.asarray((t.T @ left.T).T).real

    def embedded(self):
        return self

    def blocks(self):
        for j in range(self.nb):
            yield _CompressedBlock(self, j)


class _CompressedBlock:
    """Lazy view of one compression block; evaluates via explicit matmuls."""

    def __init__(self, group, j):
        self.group, self.j = group, j
        self.num_vars = group.m
        self.dim = group.db

    def evaluate(self, x):
        g = self.group
        v = np.kron(g.vectors[self.j][:, None], np.eye(g.db))
        return v.conj().T @ g.operator(x) @ v

    def to_block(self) -> LmiBlock:
        g = self.group
        v = np.kron(g.vectors[self.j][:, None], np.eye(g.db))
        big = g.da * g.db
        coeffs = []
        t = g.basis.tocsc()
        for k in range(g.m):
            e = t[:, k].toarray().reshape(big, big)
            coeffs.append(v.conj().T @ e @ v)
        return LmiBlock(np.zeros((g.db, g.db)), np.array(coeffs))


class LmiProblem:
    """Linear objective with equalities, variable bounds and LMI blocks.

    Parameters
    ----------
    objective : array_like, shape (m,)
    blocks : sequence of LmiBlock, optional
    eq_matrix, eq_rhs : array_like, optional
        Equalities ``eq_matrix @ x = eq_rhs``.
    lower, upper : array_like, optional
        Per-variable bounds; ``-inf``/``inf`` entries are ignored.
    groups : sequence, optional
        Pre-batched constraint groups (:class:`DenseGroup`,
        :class:`NonnegGroup` or :class:`CompressionGroup`).
    """

    def __init__(self, objective, blocks=(), eq_matrix=None, eq_rhs=None, lower=None, upper=None, groups=()):
        self.objective = np.asarray(objective, dtype=np.float64).ravel()
        m = self.objective.shape[0]
        self.num_vars = m
        self.dense_blocks = list(blocks)
        for blk in self.dense_blocks:
            if blk.num_vars != m:
                raise ValueError("block coefficient count does not match the objective")
        self.groups = list(groups)
        for g in self.groups:
            if g.m != m:
                raise ValueError("group coefficient count does not match the objective")
        if eq_matrix is None:
            self.eq_matrix = np.zeros((0, m))
            self.eq_rhs = np.zeros(0)
        else:
            self.eq_matrix = np.atleast_2d(np.asarray(eq_matrix, dtype=np.float64))
            self.eq_rhs = np.asarray(eq_rhs, dtype=np.float64).ravel()
            if self.eq_matrix.shape != (self.eq_rhs.shape[0], m):
                raise ValueError("equality shapes are inconsistent")
        self.lower = _bound(lower, m, -np.inf)
        self.upper = _bound(upper, m, np.inf)
        if np.any(self.lower > self.upper):
            raise ValueError("lower bound exceeds upper bound")

    def all_blocks(self) -> list:
        """Every constraint block, in order: dense blocks, groups, bounds."""
        out = list(self.dense_blocks)
        for g in self.groups:
            out.extend(g.blocks())
        bg = self._bound_group()
        if bg is not None:
            out.extend(bg.blocks())
        return out

    def _bound_group(self):
        rows, offs = [], []
        eye = np.eye(self.num_vars)
        for k in range(self.num_vars):
            if np.isfinite(self.lower[k]):
                rows.append(eye[k])
                offs.append(-self.lower[k])
            if np.isfinite(self.upper[k]):
                rows.append(-eye[k])
                offs.append(self.upper[k])
        if not rows:
            return None
        return NonnegGroup(np.array(rows), np.array(offs))

    def solver_groups(self, complex_mode="native") -> list:
        """Batched groups for the solver, dense blocks grouped by size and kind."""
        groups = []
        by_key: dict = {}
        order = []
        for blk in self.dense_blocks:
            key = (blk.dim, np.iscomplexobj(blk.coeffs))
            if key not in by_key:
                by_key[key] = []
                order.append(key)
            by_key[key].append(blk)
        for key in order:
            groups.append(DenseGroup.from_blocks(by_key[key]))
        groups.extend(self.groups)
        bg = self._bound_group()
        if bg is not None:
            groups.append(bg)
        if complex_mode == "embed":
            groups = [g.embedded() for g in groups]
        return groups

    def to_dict(self) -> dict:
        blocks = []
        for blk in self.all_blocks():
            if isinstance(blk, _CompressedBlock):
                blk = blk.to_block()
            blocks.append(
                {
                    "dim": blk.dim,
                    "constant": _pairs(blk.constant),
                    "coeffs": [_pairs(f) for f in blk.coeffs],
                }
            )
        return {
            "schema_version": SCHEMA_VERSION,
            "num_vars": self.num_vars,
            "objective": self.objective.tolist(),
            "equalities": [
                {"a": a.tolist(), "b": float(b)} for a, b in zip(self.eq_matrix, self.eq_rhs)
            ],
            "blocks": blocks,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "LmiProblem":
        if data.get("schema_version") != SCHEMA_VERSION:
            raise ValueError("unsupported problem schema version")
        m = int(data["num_vars"])
        eqs = data.get("equalities", [])
        blocks = [
            LmiBlock(_unpairs(b["constant"]), np.array([_unpairs(f) for f in b["coeffs"]]).reshape(m, b["dim"], b["dim"]))
            for b in data["blocks"]
        ]
        if eqs:
            a = np.array([e["a"] for e in eqs], dtype=np.float64)
            rhs = np.array([e["b"] for e in eqs], dtype=np.float64)
        else:
            a = rhs = None
        return cls(data["objective"], blocks, a, rhs)

    @classmethod
    def from_json(cls, text: str) -> "LmiProblem":
        return cls.from_dict(json.loads(text))


def _bound(v, m, fill):
    if v is None:
        return np.full(m, fill)
    out = np.asarray(v, dtype=np.float64).ravel()
    if out.shape != (m,):
        raise ValueError("bound vector has the wrong length")
    return out


def _pairs(a):
    a = np.asarray(a)
    # Adding 0.0 folds -0.0 into 0.0 so serialization is byte-stable.
    return [[[float(v.real) + 0.0, float(v.imag) + 0.0] for v in row] for row in a]


def _unpairs(rows):
    arr = np.asarray(rows, dtype=np.float64)
    return arr[..., 0] + 1j * arr[..., 1]


# ---------------------------------------------------------------------------
# path following


class _Newton:
    """Solver for ``[M, -A^T; A, 0] [dx; dy] = [g; r]`` with fixed ``A``."""

    def __init__(self, a, reg):
        self.a = a
        self.p, self.m = a.shape
        self.reg = reg
        self.null = None
        if self.p and 4 * self.p <= self.m:
            self.null = sla.null_space(a)
            self.pinv = np.linalg.pinv(a)

    def factor(self, mat):
        self.raw = mat
        scale = max(1.0, float(np.max(np.abs(np.diag(mat))))) if mat.size else 1.0
        self.mat = mat + self.reg * scale * np.eye(self.m)
        if self.p == 0:
            self.chol = sla.cho_factor(self.mat)
        elif self.null is not None:
            red = self.null.T @ self.mat @ self.null
            self.chol = sla.cho_factor(red) if red.size else None
        else:
            kkt = np.zeros((self.m + self.p, self.m + self.p))
            kkt[: self.m, : self.m] = self.mat
            kkt[: self.m, self.m :] = -self.a.T
            kkt[self.m :, : self.m] = self.a
            kkt[self.m :, self.m :] = -self.reg * scale * np.eye(self.p)
            self.lu = sla.lu_factor(kkt)

    def solve(self, g, r, refine=2):
        dx, dy = self._solve(g, r)
        for _ in range(refine):
            eg = g - (self.raw @ dx - self.a.T @ dy)
            er = r - self.a @ dx
            cx, cy = self._solve(eg, er)
            dx, dy = dx + cx, dy + cy
        return dx, dy

    def _solve(self, g, r):
        if self.p == 0:
            return sla.cho_solve(self.chol, g), np.zeros(0)
        if self.null is not None:
            dxp = self.pinv @ r
            rhs = self.null.T @ (g - self.mat @ dxp)
            z = sla.cho_solve(self.chol, rhs) if self.chol is not None else np.zeros(0)
            dx = dxp + self.null @ z
            dy = -self.pinv.T @ (g - self.mat @ dx)
            return dx, dy
        sol = sla.lu_solve(self.lu, np.concatenate([g, r]))
        return sol[: self.m], sol[self.m :]


def _inv_and_chol(s):
    chol = np.linalg.cholesky(s)
    linv = np.linalg.inv(chol)
    sinv = np.swapaxes(linv, -1, -2).conj() @ linv
    return _sym(sinv), linv


def _max_step(linv, ds, frac):
    w = linv @ ds @ np.swapaxes(linv, -1, -2).conj()
    lam = float(np.min(np.linalg.eigvalsh(_sym(w))))
    if lam >= 0:
        return 1.0
    return min(1.0, frac / -lam)


def _backtrack(mats, dirs, alpha, tries=40):
    # Rounding can push a fraction-to-boundary step onto the cone boundary.
    for _ in range(tries):
        cand = [_sym(v + alpha * d) for v, d in zip(mats, dirs)]
        try:
            for c in cand:
                np.linalg.cholesky(c)
            return cand, alpha
        except np.linalg.LinAlgError:
            alpha *= 0.5
    return None, 0.0


def _inner(a, b):
    return float(sum(np.vdot(x, y).real for x, y in zip(a, b)))


def _path_follow(c, groups, a, b, settings, x0=None):
    m = c.shape[0]
    tol = settings.tolerance
    nu = sum(g.nb * g.n for g in groups)
    newton = _Newton(a, settings.regularization)
    if x0 is None:
        x = np.linalg.lstsq(a, b, rcond=None)[0] if a.shape[0] else np.zeros(m)
    else:
        x = np.array(x0, dtype=np.float64)

    f0norm = sum(g.constant_norm() ** 2 for g in groups) ** 0.5
    cnorm = float(np.linalg.norm(c))
    bnorm = float(np.linalg.norm(b))
    fx = [g.evaluate(x) for g in groups]
    size = max(g.n for g in groups)
    xi = max(10.0, np.sqrt(size), max(float(np.max(np.abs(v))) for v in fx) * np.sqrt(size))
    zeta = max(10.0, np.sqrt(size), (1.0 + float(np.max(np.abs(c))) if m else 1.0))
    s = [xi * np.broadcast_to(np.eye(g.n, dtype=g.dtype), (g.nb, g.n, g.n)).copy() for g in groups]
    z = [zeta * np.broadcast_to(np.eye(g.n, dtype=g.dtype), (g.nb, g.n, g.n)).copy() for g in groups]
    y = np.zeros(a.shape[0])
    eyes = [np.broadcast_to(np.eye(g.n, dtype=g.dtype), (g.nb, g.n, g.n)) for g in groups]
    gram_pinv = np.linalg.pinv(sum(g.schur(e, e) for g, e in zip(groups, eyes)), hermitian=True)

    status = "max-iterations"
    message = ""
    stall = 0
    fallback = not settings.predictor_corrector
    rel_p = rel_d = rel_gap = np.inf
    pobj = dobj = np.nan
    it = 0
    history = []
    for it in range(1, settings.max_iterations + 1):
        fx = [g.evaluate(x) for g in groups]
        rs = [f - sv for f, sv in zip(fx, s)]
        re = b - a @ x
        rd = c - sum(g.adjoint(zv) for g, zv in zip(groups, z)) - a.T @ y
        comp = _inner(s, z)
        mu = comp / nu
        pobj = float(c @ x)
        dobj = pobj - _inner(fx, z) + float(y @ (b - a @ x)) - float(rd @ x)
        rel_p = max(
            np.sqrt(sum(np.linalg.norm(r) ** 2 for r in rs)) / (1.0 + f0norm),
            float(np.linalg.norm(re)) / (1.0 + bnorm),
        )
        rel_d = float(np.linalg.norm(rd)) / (1.0 + cnorm)
        rel_gap = max(abs(pobj - dobj), comp) / (1.0 + abs(pobj) + abs(dobj))
        history.append((float(rel_p), float(rel_d), float(rel_gap), pobj))
        if rel_p <= tol and rel_d <= tol and rel_gap <= tol:
            status = "optimal"
            break
        if not np.all(np.isfinite(x)) or np.linalg.norm(x) > 1e12:
            status, message = "numerical-failure", "iterates diverged (problem may be unbounded)"
            break
        try:
            inv = [_inv_and_chol(sv) for sv in s]
            zinv = [_inv_and_chol(zv)[1] for zv in z]
        except np.linalg.LinAlgError:
            status, message = "numerical-failure", "slack lost definiteness"
            break
        sinv = [v[0] for v in inv]
        mat = sum(g.schur(si, zv) for g, si, zv in zip(groups, sinv, z))
        try:
            newton.factor(mat)
        except (np.linalg.LinAlgError, ValueError):
            status, message = "numerical-failure", "Newton system singular after regularization"
            break

        base = [-zv - _sym(si @ r @ zv) for si, r, zv in zip(sinv, rs, z)]

        def direction(shift, corr):
            rr = [bv + shift * si for bv, si in zip(base, sinv)]
            if corr is not None:
                rr = [v - cv for v, cv in zip(rr, corr)]
            g = sum(gr.adjoint(v) for gr, v in zip(groups, rr)) - rd
            dx, dy = newton.solve(g, re)
            # Refine against the matrix-free operator so the dual residual is
            # not limited by roundoff in the batched Schur complement.
            for _ in range(2):
                lin = [gr.linear(dx) for gr in groups]
                mdx = sum(gr.adjoint(_sym(si @ l @ zv)) for gr, si, l, zv in zip(groups, sinv, lin, z))
                cx, cy = newton.solve(g - (mdx - a.T @ dy), re - a @ dx, refine=0)
                dx, dy = dx + cx, dy + cy
            lin = [gr.linear(dx) for gr in groups]
            ds = [l + r for l, r in zip(lin, rs)]
            dz = [v - _sym(si @ l @ zv) for v, si, l, zv in zip(rr, sinv, lin, z)]
            # Roundoff in dz builds up in the dual residual as Z becomes ill
            # conditioned; remove it with a least-norm correction.
            err = rd - a.T @ dy - sum(gr.adjoint(v) for gr, v in zip(groups, dz))
            w = gram_pinv @ err
            dz = [v + gr.linear(w) for v, gr in zip(dz, groups)]
            return dx, dy, ds, dz

        def steps(ds, dz, frac):
            ap = min(_max_step(v[1], d, frac) for v, d in zip(inv, ds))
            ad = min(_max_step(zi, d, frac) for zi, d in zip(zinv, dz))
            return ap, ad

        if fallback:
            dx, dy, ds, dz = direction(settings.mu_reduction * mu, None)
        else:
            dx, dy, ds, dz = direction(0.0, None)
            ap, ad = steps(ds, dz, 1.0)
            s_aff = [sv + ap * d for sv, d in zip(s, ds)]
            z_aff = [zv + ad * d for zv, d in zip(z, dz)]
            mu_aff = _inner(s_aff, z_aff) / nu
            sigma = min(1.0, max(0.0, mu_aff / mu)) ** 3 if mu > 0 else 0.0
            corr = [_sym(si @ a1 @ a2) for si, a1, a2 in zip(sinv, ds, dz)]
            dx, dy, ds, dz = direction(sigma * mu, corr)
        if not (np.all(np.isfinite(dx)) and np.all(np.isfinite(dy))):
            status, message = "numerical-failure", "non-finite search direction"
            break
        ap, ad = steps(ds, dz, settings.step_fraction)
        s_new, ap = _backtrack(s, ds, ap)
        z_new, ad = _backtrack(z, dz, ad)
        if s_new is None or z_new is None:
            status, message = "numerical-failure", "no positive definite step"
            break
        x = x + ap * dx
        s, z = s_new, z_new
        y = y + ad * dy
        if min(ap, ad) < 0.1:
            stall += 1
            if stall >= 3 and not fallback:
                fallback = True
        else:
            stall = 0
    gap_signed = (pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
    return SdpSolution(
        x=x,
        objective=pobj,
        status=status,
        primal_infeasibility=float(rel_p),
        dual_infeasibility=float(rel_d),
        gap=float(gap_signed),
        iterations=it,
        dual_objective=float(dobj),
        message=message,
        history=history,
    )


class _ShiftedGroup:
    """Group with an extra trailing variable ``t`` adding ``t I`` to each block."""

    def __init__(self, g):
        self.g = g
        self.nb, self.n, self.m = g.nb, g.n, g.m + 1
        self.dtype = g.dtype

    def constant_norm(self):
        return self.g.constant_norm()

    def evaluate(self, x):
        return self.g.evaluate(x[:-1]) + x[-1] * np.eye(self.n)

    def linear(self, dx):
        return self.g.linear(dx[:-1]) + dx[-1] * np.eye(self.n)

    def adjoint(self, z):
        tr = float(np.trace(z, axis1=1, axis2=2).real.sum())
        return np.concatenate([self.g.adjoint(z), [tr]])

    def schur(self, sinv, z):
        inner = self.g.schur(sinv, z)
        cross = self.g.adjoint(_sym(sinv @ z))
        corner = float(np.trace(sinv @ z, axis1=1, axis2=2).real.sum())
        out = np.zeros((self.m, self.m))
        out[:-1, :-1] = inner
        out[:-1, -1] = out[-1, :-1] = cross
        out[-1, -1] = corner
        return out


def _phase_one(groups, a, b, settings):
    m = groups[0].m if groups else 0
    shifted = [_ShiftedGroup(g) for g in groups]
    floor = np.zeros((1, m + 1))
    floor[0, -1] = 1.0
    shifted.append(NonnegGroup(floor, [1.0]))
    c = np.zeros(m + 1)
    c[-1] = 1.0
    a1 = np.hstack([a, np.zeros((a.shape[0], 1))])
    return _path_follow(c, shifted, a1, b, settings)


def solve(problem: LmiProblem, settings: SolverSettings | None = None) -> SdpSolution:
    """Minimize ``problem.objective @ x`` over the LMI-feasible set.

    Returns a status-qualified :class:`SdpSolution`. ``optimal`` means the
    relative primal and dual residuals and the duality gap are all within
    ``settings.tolerance``. If the run stops short of that and
    ``settings.phase_one`` is set, the feasibility problem
    ``min t : F(x) + t I >= 0, t >= -1`` is solved; ``t* > tolerance``
    reports ``infeasible``.
    """
    settings = settings or SolverSettings()
    groups = problem.solver_groups(settings.complex_mode)
    a, b = problem.eq_matrix, problem.eq_rhs
    if a.shape[0]:
        x_ls = np.linalg.lstsq(a, b, rcond=None)[0]
        if np.linalg.norm(a @ x_ls - b) > 1e-9 * (1.0 + np.linalg.norm(b)):
            return SdpSolution(x_ls, float(problem.objective @ x_ls), "infeasible", np.inf, np.inf, np.nan, 0,
                               message="inconsistent equalities")
    if not groups:
        raise ValueError("problem has no conic constraints")
    sol = _path_follow(problem.objective, groups, a, b, settings)
    if sol.status != "optimal" and settings.phase_one:
        ph = _phase_one(groups, a, b, settings)
        t = float(ph.x[-1])
        sol.phase_one_shift = t
        if ph.status == "optimal" and t > settings.tolerance:
            sol.status = "infeasible"
            sol.message = f"phase-I shift {t:.3e} > tolerance"
    return sol


@dataclass
class BlockCheck:
    index: int
    dim: int
    lambda_min: float
    violated: bool


@dataclass
class CheckReport:
    """Independent feasibility check of a candidate point."""

    blocks: list = field(default_factory=list)
    equality_residual: float = 0.0
    bound_violation: float = 0.0
    tol: float = 1e-9

    @property
    def violations(self) -> list:
        return [b for b in self.blocks if b.violated]

    @property
    def min_eigenvalue(self) -> float:
        return min((b.lambda_min for b in self.blocks), default=np.inf)

    @property
    def feasible(self) -> bool:
        return (
            not self.violations
            and self.equality_residual <= self.tol
            and self.bound_violation <= self.tol
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        d["feasible"] = self.feasible
        return d


def check_solution(problem: LmiProblem, x, tol: float = 1e-9) -> CheckReport:
    """Recompute every block's smallest eigenvalue and the equality residuals at ``x``.

    Uses per-block evaluation and a LAPACK eigensolve, independent of the
    batched arithmetic inside :func:`solve`. Bounds are reported separately
    from the LMI blocks.
    """
    x = np.asarray(x, dtype=np.float64)
    report = CheckReport(tol=tol)
    blocks = list(problem.dense_blocks)
    for g in problem.groups:
        blocks.extend(g.blocks())
    for j, blk in enumerate(blocks):
        val = blk.evaluate(x)
        lam = float(sla.eigvalsh(0.5 * (val + val.conj().T))[0])
        report.blocks.append(BlockCheck(j, blk.dim, lam, lam < -tol))
    if problem.eq_matrix.shape[0]:
        report.equality_residual = float(np.max(np.abs(problem.eq_matrix @ x - problem.eq_rhs)))
    low = np.where(np.isfinite(problem.lower), problem.lower - x, 0.0)
    up = np.where(np.isfinite(problem.upper), x - problem.upper, 0.0)
    report.bound_violation = float(max(0.0, np.max(low, initial=0.0), np.max(up, initial=0.0)))
    return report
