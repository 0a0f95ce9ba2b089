"""Pure numpy versions of the routines in ``_kernels.pyx``.

Same signatures and return layouts as the compiled module; used when the
extension is not built or when ``WERNERWIT_PURE_PYTHON`` is set.
"""

import numpy as np


def jacobi_eigh(a, tol=1e-15, max_sweeps=100):
    """Cyclic Jacobi eigensolver for a real symmetric matrix (ascending)."""
    m = np.array(a, dtype=np.float64, copy=True)
    n = m.shape[0]
    v = np.eye(n)
    scale = np.linalg.norm(m)
    for _ in range(max_sweeps):
        off = np.sum(np.triu(m, 1) ** 2)
        if off == 0.0 or np.sqrt(2.0 * off) <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = m[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (m[q, q] - m[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta == 0:
                    t = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rot = np.array([[c, s], [-s, c]])
                idx = [p, q]
                m[:, idx] = m[:, idx] @ rot
                m[idx, :] = rot.T @ m[idx, :]
                m[p, q] = m[q, p] = 0.0
                v[:, idx] = v[:, idx] @ rot
    w = np.diag(m).copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def lowest_eigpair(h):
    """Smallest eigenvalue and a unit eigenvector of a Hermitian matrix."""
    w, v = np.linalg.eigh(h)
    return float(w[0]), v[:, 0].astype(np.complex128)


def _herm(m):
    return 0.5 * (m + m.conj().T)


def seesaw_product(w, starts, tol=1e-12, max_iter=500):
    da, db = w.shape[0], w.shape[1]
    k = starts.shape[0]
    values = np.empty(k)
    psis = np.empty((k, da), dtype=np.complex128)
    chis = np.empty((k, db), dtype=np.complex128)
    iters = np.empty(k, dtype=np.int64)
    flat_a = w.reshape(da, db * da * db)
    for s in range(k):
        psi = starts[s] / np.linalg.norm(starts[s])
        prev = np.inf
        lam = 0.0
        it = 0
        while it < max_iter:
            it += 1
            mb = (psi.conj() @ flat_a).reshape(db, da, db)
            mb = np.einsum("bcd,c->bd", mb, psi)
            _, chi = lowest_eigpair(_herm(mb))
            ma = np.einsum("b,abcd,d->ac", chi.conj(), w, chi)
            lam, psi = lowest_eigpair(_herm(ma))
            if abs(prev - lam) < tol:
                break
            prev = lam
        values[s], psis[s], chis[s], iters[s] = lam, psi, chi, it
    return values, psis, chis, iters


def _orthonormal_pair(u, v):
    if np.linalg.norm(u) < np.linalg.norm(v):
        u, v = v, u
    first = u / np.linalg.norm(u)
    second = v - (first.conj() @ v) * first
    nrm = np.linalg.norm(second)
    if nrm < 1e-12:
        pick = int(np.argmin(np.abs(first)))
        second = -first[pick].conj() * first
        second[pick] += 1.0
        nrm = np.linalg.norm(second)
    return np.stack([first, second / nrm], axis=1)


def seesaw_rank_two(x, frames, tol=1e-12, max_iter=500):
    da, db = x.shape[0], x.shape[1]
    k = frames.shape[0]
    values = np.empty(k)
    coeffs = np.zeros((k, da, db), dtype=np.complex128)
    iters = np.empty(k, dtype=np.int64)
    for s in range(k):
        f = frames[s]
        prev = np.inf
        lam = 0.0
        it = 0
        while it < max_iter:
            it += 1
            ma = np.einsum("bi,abcd,dj->aicj", f.conj(), x, f).reshape(2 * da, 2 * da)
            _, va = lowest_eigpair(_herm(ma))
            va = va.reshape(da, 2)
            e = _orthonormal_pair(va[:, 0], va[:, 1])
            mb = np.einsum("ai,abcd,cj->ibjd", e.conj(), x, e).reshape(2 * db, 2 * db)
            lam, vb = lowest_eigpair(_herm(mb))
            vb = vb.reshape(2, db)
            coeffs[s] = e @ vb
            f = _orthonormal_pair(vb[0], vb[1])
            if abs(prev - lam) < tol:
                break
            prev = lam
        values[s], iters[s] = lam, it
    return values, coeffs, iters
