"""Dense Hermitian operators on tensor-factored Hilbert spaces.

Operators carry the list of local dimensions of their tensor factors, so
partial transposes and partial traces can be taken by factor index.
Matrices stay real (float64) whenever the input is real.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import prod
from typing import Iterable, Sequence

import numpy as np

from wernerwit import kernels

HERMITIAN_REJECT = 1e-9
PSD_TOL = 1e-9


class CapacityError(ValueError):
    """Raised when a dense object would exceed the supported size."""


class HermitianOperator:
    """Dense Hermitian matrix with a subsystem factorization.

    Parameters
    ----------
    matrix : array_like
        Square matrix of size ``prod(dims)``. It is symmetrized as
        ``(M + M^dagger) / 2``; inputs whose anti-Hermitian part exceeds
        ``1e-9`` entrywise are rejected.
    dims : sequence of int, optional
        Local dimensions of the tensor factors. Defaults to a single factor.
    """

    __slots__ = ("dims", "matrix")

    def __init__(self, matrix, dims: Sequence[int] | None = None):
        m = np.asarray(matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {m.shape}")
        if np.iscomplexobj(m):
            m = m.astype(np.complex128)
            if not np.any(m.imag):
                m = m.real.copy()
        else:
            m = m.astype(np.float64)
        dims = (m.shape[0],) if dims is None else tuple(int(x) for x in dims)
        if prod(dims) != m.shape[0]:
            raise ValueError(f"dims {dims} do not multiply to {m.shape[0]}")
        herm = 0.5 * (m + m.conj().T)
        if m.size and np.max(np.abs(m - herm)) > HERMITIAN_REJECT:
            raise ValueError("matrix is not Hermitian")
        herm.setflags(write=False)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "matrix", herm)

    def __setattr__(self, name, value):
        raise AttributeError("HermitianOperator is immutable")

    def __repr__(self):
        return f"HermitianOperator(dims={self.dims})"

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def inner(self, other: "HermitianOperator") -> float:
        """Hilbert-Schmidt product ``Tr(self @ other)``."""
        _check_same_space(self, other)
        return float(np.vdot(self.matrix, other.matrix).real)

    def norm(self) -> float:
        return float(np.linalg.norm(self.matrix))

    def with_dims(self, dims: Sequence[int]) -> "HermitianOperator":
        return HermitianOperator(self.matrix, dims)

    def __add__(self, other):
        _check_same_space(self, other)
        return HermitianOperator(self.matrix + other.matrix, self.dims)

    def __sub__(self, other):
        _check_same_space(self, other)
        return HermitianOperator(self.matrix - other.matrix, self.dims)

    def __mul__(self, scalar):
        if isinstance(scalar, complex) or np.iscomplexobj(scalar):
            raise TypeError("Hermitian operators scale by real numbers only")
        return HermitianOperator(self.matrix * float(scalar), self.dims)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / float(scalar))

    def __neg__(self):
        return self * -1.0


def _check_same_space(a, b):
    if a.dims != b.dims:
        raise ValueError(f"dimension mismatch: {a.dims} vs {b.dims}")


@dataclass(frozen=True)
class SubsystemSplit:
    """Bipartition of tensor factors into side A and side B."""

    party_a: tuple[int, ...]
    party_b: tuple[int, ...]

    def __post_init__(self):
        a, b = set(self.party_a), set(self.party_b)
        if not a:
            raise ValueError("party A must be non-empty")
        if a & b:
            raise ValueError("parties overlap")
        if len(a) != len(self.party_a) or len(b) != len(self.party_b):
            raise ValueError("repeated factor index")

    @classmethod
    def of(cls, party_a: Iterable[int], n_factors: int) -> "SubsystemSplit":
        a = tuple(sorted(set(int(i) for i in party_a)))
        if any(i < 0 or i >= n_factors for i in a):
            raise ValueError(f"factor index out of range for {n_factors} factors")
        b = tuple(i for i in range(n_factors) if i not in a)
        return cls(a, b)

    @classmethod
    def interleaved(cls, n_factors: int) -> "SubsystemSplit":
        """Even factors on side A, odd on side B (the ``[x_A, x_B, ...]`` layout)."""
        if n_factors % 2:
            raise ValueError("interleaved layout needs an even number of factors")
        return cls.of(range(0, n_factors, 2), n_factors)

    def validate(self, dims: Sequence[int]) -> None:
        n = len(dims)
        if sorted(self.party_a + self.party_b) != list(range(n)):
            raise ValueError(f"split {self} does not cover factors of {tuple(dims)}")

    def side_dims(self, dims: Sequence[int]) -> tuple[int, int]:
        self.validate(dims)
        return prod(dims[i] for i in self.party_a), prod(dims[i] for i in self.party_b)


@dataclass(frozen=True)
class PureState:
    """Unit vector in a ``dim``-dimensional Hilbert space."""

    amplitudes: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.amplitudes, dtype=np.complex128).ravel()
        if abs(np.linalg.norm(v) - 1.0) > 1e-12:
            raise ValueError("amplitudes must have unit norm")
        v.setflags(write=False)
        object.__setattr__(self, "amplitudes", v)

    @classmethod
    def normalized(cls, vector) -> "PureState":
        v = np.asarray(vector, dtype=np.complex128).ravel()
        return cls(v / np.linalg.norm(v))

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def projector(self, dims: Sequence[int] | None = None) -> HermitianOperator:
        v = self.amplitudes
        return HermitianOperator(np.outer(v, v.conj()), dims)


def identity(dims: Sequence[int]) -> HermitianOperator:
    return HermitianOperator(np.eye(prod(dims)), dims)


def tensor(*ops: HermitianOperator) -> HermitianOperator:
    """Kronecker product; factor lists are concatenated."""
    if not ops:
        raise ValueError("tensor needs at least one operator")
    m = ops[0].matrix
    dims = list(ops[0].dims)
    for op in ops[1:]:
        m = np.kron(m, op.matrix)
        dims.extend(op.dims)
    return HermitianOperator(m, dims)


def partial_transpose(op: HermitianOperator, split: SubsystemSplit) -> HermitianOperator:
    """Transpose the indices of the side-A factors only."""
    split.validate(op.dims)
    n = len(op.dims)
    perm = list(range(2 * n))
    for i in split.party_a:
        perm[i], perm[i + n] = perm[i + n], perm[i]
    t = op.matrix.reshape(op.dims + op.dims).transpose(perm)
    return HermitianOperator(t.reshape(op.dim, op.dim), op.dims)


def partial_trace(op: HermitianOperator, keep: Iterable[int]) -> HermitianOperator:
    """Trace out every factor not listed in ``keep`` (kept in original order)."""
    keep = sorted(set(int(i) for i in keep))
    n = len(op.dims)
    if not keep:
        raise ValueError("keep must name at least one factor")
    if keep[0] < 0 or keep[-1] >= n:
        raise ValueError(f"factor index out of range for {n} factors")
    t = op.matrix.reshape(op.dims + op.dims)
    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    rows = list(letters[:n])
    cols = [rows[i] if i not in keep else letters[n + i] for i in range(n)]
    out = "".join(rows[i] for i in keep) + "".join(cols[i] for i in keep)
    res = np.einsum("".join(rows) + "".join(cols) + "->" + out, t)
    kd = [op.dims[i] for i in keep]
    d = prod(kd)
    return HermitianOperator(res.reshape(d, d), kd)


def bipartite_tensor(op: HermitianOperator, split: SubsystemSplit) -> np.ndarray:
    """Reorder factors as ``[A..., B...]`` and view as ``W[a, b, a', b']``."""
    da, db = split.side_dims(op.dims)
    n = len(op.dims)
    order = list(split.party_a) + list(split.party_b)
    t = op.matrix.reshape(op.dims + op.dims)
    t = t.transpose(order + [i + n for i in order])
    return np.ascontiguousarray(t.reshape(da, db, da, db))


def eig_hermitian(op: HermitianOperator, method: str = "lapack"):
    """Eigen-decomposition with eigenvalues in ascending order.

    ``method="lapack"`` calls the LAPACK driver; ``method="jacobi"`` runs
    cyclic Jacobi on the real embedding ``[[Re, -Im], [Im, Re]]`` and pairs
    the doubled spectrum back into complex eigenvectors.
    """
    if method == "lapack":
        w, v = np.linalg.eigh(op.matrix)
        return w, v
    if method != "jacobi":
        raise ValueError(f"unknown method {method!r}")
    m = op.matrix
    if not np.iscomplexobj(m):
        return kernels.jacobi_eigh(np.ascontiguousarray(m))
    re, im = m.real, m.imag
    emb = np.ascontiguousarray(np.block([[re, -im], [im, re]]))
    w2, v2 = kernels.jacobi_eigh(emb)
    return _pair_embedding(w2, v2, m.shape[0])


def _pair_embedding(w2, v2, n):
    # Each eigenvalue of the embedding appears twice; the complex vectors
    # u + i v of one eigenspace span it twice over, so keep an orthonormal
    # half by Gram-Schmidt within each cluster.
    cand = v2[:n] + 1j * v2[n:]
    scale = max(1.0, float(np.max(np.abs(w2))))
    ws, vs = [], []
    i = 0
    while i < 2 * n:
        j = i + 1
        while j < 2 * n and abs(w2[j] - w2[i]) <= 1e-9 * scale:
            j += 1
        basis = []
        for col in range(i, j):
            x = cand[:, col].copy()
            for b in basis:
                x -= (b.conj() @ x) * b
            nrm = np.linalg.norm(x)
            if nrm > 1e-6:
                basis.append(x / nrm)
        k = (j - i) // 2
        if len(basis) < k:
            raise np.linalg.LinAlgError("embedding pairing failed")
        for b in basis[:k]:
            ws.append(np.mean(w2[i:j]))
            vs.append(b)
        i = j
    return np.array(ws), np.stack(vs, axis=1)


def eigvalsh(op: HermitianOperator) -> np.ndarray:
    return np.linalg.eigvalsh(op.matrix)


def lambda_min(op: HermitianOperator) -> float:
    return float(np.linalg.eigvalsh(op.matrix)[0])


def is_psd(op: HermitianOperator, tol: float = PSD_TOL) -> bool:
    return lambda_min(op) >= -tol


def rng_stream(seed: int, *keys: int) -> np.random.Generator:
    """Independent generator keyed by ``(seed, *keys)``."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, keys)]))


def haar_vectors(dim: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` Haar-random unit vectors as rows of a ``(count, dim)`` array."""
    if dim < 1:
        raise ValueError("dim must be positive")
    z = rng.standard_normal((count, dim)) + 1j * rng.standard_normal((count, dim))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def sample_haar_vector(dim: int, rng: np.random.Generator) -> PureState:
    return PureState(haar_vectors(dim, 1, rng)[0])


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary (QR of a Ginibre matrix with phase fix)."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph
