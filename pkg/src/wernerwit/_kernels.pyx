# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops: cyclic Jacobi and the two see-saw searches.

Every function here has a numpy twin in ``_kernels_py`` with the same
signature and return layout; ``wernerwit.kernels`` picks one at import.
"""

import numpy as np

from libc.math cimport fabs, sqrt
from libc.stdlib cimport free, malloc
from scipy.linalg.cython_lapack cimport zheevr

ctypedef double complex zc


def jacobi_eigh(double[:, ::1] a, double tol=1e-15, int max_sweeps=100):
    """Cyclic Jacobi eigensolver for a real symmetric matrix (ascending)."""
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t i, j, p, q, k
    cdef double[:, ::1] m = np.array(a, dtype=np.float64, copy=True)
    cdef double[:, ::1] v = np.eye(n, dtype=np.float64)
    cdef double off, scale, apq, theta, t, c, s, tau, mkp, mkq
    cdef int sweep

    scale = 0.0
    for i in range(n):
        for j in range(n):
            scale += m[i, j] * m[i, j]
    scale = sqrt(scale)
    for sweep in range(max_sweeps):
        off = 0.0
        for p in range(n):
            for q in range(p + 1, n):
                off += m[p, q] * m[p, q]
        if sqrt(2.0 * off) <= tol * scale or off == 0.0:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = m[p, q]
                if fabs(apq) <= 1e-300:
                    continue
                theta = (m[q, q] - m[p, p]) / (2.0 * apq)
                if theta >= 0:
                    t = 1.0 / (theta + sqrt(theta * theta + 1.0))
                else:
                    t = -1.0 / (-theta + sqrt(theta * theta + 1.0))
                c = 1.0 / sqrt(t * t + 1.0)
                s = t * c
                tau = s / (1.0 + c)
                m[p, p] -= t * apq
                m[q, q] += t * apq
                m[p, q] = 0.0
                m[q, p] = 0.0
                for k in range(n):
                    if k != p and k != q:
                        mkp = m[k, p]
                        mkq = m[k, q]
                        m[k, p] = mkp - s * (mkq + tau * mkp)
                        m[k, q] = mkq + s * (mkp - tau * mkq)
                        m[p, k] = m[k, p]
                        m[q, k] = m[k, q]
                for k in range(n):
                    mkp = v[k, p]
                    mkq = v[k, q]
                    v[k, p] = mkp - s * (mkq + tau * mkp)
                    v[k, q] = mkq + s * (mkp - tau * mkq)
    w = np.array([m[i, i] for i in range(n)])
    order = np.argsort(w, kind="stable")
    return w[order], np.asarray(v)[:, order]


cdef class _Lowest:
    """Workspace for repeated smallest-eigenpair calls of one size."""

    cdef int n, lwork, lrwork, liwork
    cdef zc *a
    cdef zc *z
    cdef zc *work
    cdef double *rwork
    cdef double *w
    cdef int *iwork
    cdef int *isuppz

    def __cinit__(self, int n):
        self.n = n
        self.lwork = 64 * n + 64
        self.lrwork = 24 * n + 24
        self.liwork = 10 * n + 10
        self.a = <zc *> malloc(n * n * sizeof(zc))
        self.z = <zc *> malloc(n * sizeof(zc))
        self.work = <zc *> malloc(self.lwork * sizeof(zc))
        self.rwork = <double *> malloc(self.lrwork * sizeof(double))
        self.w = <double *> malloc(n * sizeof(double))
        self.iwork = <int *> malloc(self.liwork * sizeof(int))
        self.isuppz = <int *> malloc(2 * sizeof(int))
        if (not self.a or not self.z or not self.work or not self.rwork
                or not self.w or not self.iwork or not self.isuppz):
            raise MemoryError()

    def __dealloc__(self):
        free(self.a)
        free(self.z)
        free(self.work)
        free(self.rwork)
        free(self.w)
        free(self.iwork)
        free(self.isuppz)

    cdef double solve(self, zc *out) except? -1e308:
        # self.a holds a Hermitian matrix in row-major order; LAPACK reads it
        # as its transpose (the conjugate), so the returned vector is conjugated.
        cdef char jobz = b'V'
        cdef char rng = b'I'
        cdef char uplo = b'L'
        cdef int n = self.n, lda = self.n, ldz = self.n
        cdef int il = 1, iu = 1, found = 0, info = 0
        cdef double vl = 0.0, vu = 0.0, abstol = 0.0
        cdef int i
        zheevr(&jobz, &rng, &uplo, &n, self.a, &lda, &vl, &vu, &il, &iu,
               &abstol, &found, self.w, self.z, &ldz, self.isuppz, self.work,
               &self.lwork, self.rwork, &self.lrwork, self.iwork,
               &self.liwork, &info)
        if info != 0:
            raise RuntimeError(f"zheevr failed with info={info}")
        for i in range(n):
            out[i] = self.z[i].conjugate()
        return self.w[0]


def lowest_eigpair(zc[:, ::1] h):
    """Smallest eigenvalue and a unit eigenvector of a Hermitian matrix."""
    cdef int n = h.shape[0]
    cdef _Lowest ws = _Lowest(n)
    cdef Py_ssize_t i, j
    vec = np.empty(n, dtype=np.complex128)
    cdef zc[::1] out = vec
    for i in range(n):
        for j in range(n):
            ws.a[i * n + j] = h[i, j]
    cdef double lam = ws.solve(&out[0])
    return lam, vec


cdef void _normalize(zc *x, int n):
    cdef double nrm = 0.0
    cdef int i
    for i in range(n):
        nrm += x[i].real * x[i].real + x[i].imag * x[i].imag
    nrm = sqrt(nrm)
    if nrm > 0:
        for i in range(n):
            x[i] = x[i] / nrm


def seesaw_product(zc[:, :, :, ::1] w, zc[:, ::1] starts, double tol=1e-12,
                   int max_iter=500):
    """Alternating minimisation of <psi chi| W |psi chi> over product vectors.

    ``w`` is indexed ``[a, b, a', b']`` (row ``(a, b)``, column ``(a', b')``).
    Returns ``(values, psis, chis, iterations)`` for every start.
    """
    cdef int da = w.shape[0]
    cdef int db = w.shape[1]
    cdef int k = starts.shape[0]
    cdef _Lowest wa = _Lowest(da)
    cdef _Lowest wb = _Lowest(db)
    values = np.empty(k, dtype=np.float64)
    psis = np.empty((k, da), dtype=np.complex128)
    chis = np.empty((k, db), dtype=np.complex128)
    iters = np.empty(k, dtype=np.int64)
    cdef double[::1] vals_v = values
    cdef zc[:, ::1] psi_v = psis
    cdef zc[:, ::1] chi_v = chis
    cdef long[::1] it_v = iters
    cdef int s, it, a, a2, b, b2
    cdef double lam, prev
    cdef zc acc, ca
    cdef zc *psi
    cdef zc *chi
    for s in range(k):
        psi = &psi_v[s, 0]
        chi = &chi_v[s, 0]
        for a in range(da):
            psi[a] = starts[s, a]
        _normalize(psi, da)
        prev = 1e300
        lam = 0.0
        it = 0
        while it < max_iter:
            it += 1
            for b in range(db):
                for b2 in range(db):
                    acc = 0.0
                    for a in range(da):
                        ca = psi[a].conjugate()
                        for a2 in range(da):
                            acc = acc + ca * w[a, b, a2, b2] * psi[a2]
                    wb.a[b * db + b2] = acc
            for b in range(db):
                for b2 in range(b + 1, db):
                    acc = 0.5 * (wb.a[b * db + b2] + wb.a[b2 * db + b].conjugate())
                    wb.a[b * db + b2] = acc
                    wb.a[b2 * db + b] = acc.conjugate()
                wb.a[b * db + b] = wb.a[b * db + b].real
            wb.solve(chi)
            for a in range(da):
                for a2 in range(da):
                    acc = 0.0
                    for b in range(db):
                        ca = chi[b].conjugate()
                        for b2 in range(db):
                            acc = acc + ca * w[a, b, a2, b2] * chi[b2]
                    wa.a[a * da + a2] = acc
            for a in range(da):
                for a2 in range(a + 1, da):
                    acc = 0.5 * (wa.a[a * da + a2] + wa.a[a2 * da + a].conjugate())
                    wa.a[a * da + a2] = acc
                    wa.a[a2 * da + a] = acc.conjugate()
                wa.a[a * da + a] = wa.a[a * da + a].real
            lam = wa.solve(psi)
            if fabs(prev - lam) < tol:
                break
            prev = lam
        vals_v[s] = lam
        it_v[s] = it
    return values, psis, chis, iters


cdef void _orthonormal_pair(zc *u, zc *v, int n, zc *out):
    # Writes an orthonormal basis of span{u, v} (completed if rank one) into
    # out as an n x 2 row-major matrix.
    cdef double nu = 0.0, nv = 0.0, nr
    cdef zc *first
    cdef zc *second
    cdef zc proj
    cdef int i, pick
    cdef double best
    for i in range(n):
        nu += (u[i] * u[i].conjugate()).real
        nv += (v[i] * v[i].conjugate()).real
    if nu >= nv:
        first = u
        second = v
        nr = sqrt(nu)
    else:
        first = v
        second = u
        nr = sqrt(nv)
    for i in range(n):
        out[2 * i] = first[i] / nr
    proj = 0.0
    for i in range(n):
        proj = proj + out[2 * i].conjugate() * second[i]
    nr = 0.0
    for i in range(n):
        out[2 * i + 1] = second[i] - proj * out[2 * i]
        nr += (out[2 * i + 1] * out[2 * i + 1].conjugate()).real
    nr = sqrt(nr)
    if nr < 1e-12:
        pick = 0
        best = 2.0
        for i in range(n):
            if abs(out[2 * i]) < best:
                best = abs(out[2 * i])
                pick = i
        proj = out[2 * pick].conjugate()
        nr = 0.0
        for i in range(n):
            out[2 * i + 1] = -proj * out[2 * i]
        out[2 * pick + 1] = out[2 * pick + 1] + 1.0
        for i in range(n):
            nr += (out[2 * i + 1] * out[2 * i + 1].conjugate()).real
        nr = sqrt(nr)
    for i in range(n):
        out[2 * i + 1] = out[2 * i + 1] / nr


def seesaw_rank_two(zc[:, :, :, ::1] x, zc[:, :, ::1] frames, double tol=1e-12,
                    int max_iter=500):
    """Minimise <Psi| X |Psi> over Schmidt-rank-two vectors by frame see-saw.

    ``frames`` holds one orthonormal ``(d_B, 2)`` starting frame per start.
    Returns ``(values, coefficient matrices (k, d_A, d_B), iterations)``.
    """
    cdef int da = x.shape[0]
    cdef int db = x.shape[1]
    cdef int k = frames.shape[0]
    cdef _Lowest wa = _Lowest(2 * da)
    cdef _Lowest wb = _Lowest(2 * db)
    values = np.empty(k, dtype=np.float64)
    coeffs = np.zeros((k, da, db), dtype=np.complex128)
    iters = np.empty(k, dtype=np.int64)
    cdef double[::1] vals_v = values
    cdef zc[:, :, ::1] c_v = coeffs
    cdef long[::1] it_v = iters
    cdef zc *f = <zc *> malloc(2 * db * sizeof(zc))
    cdef zc *e = <zc *> malloc(2 * da * sizeof(zc))
    cdef zc *va = <zc *> malloc(2 * da * sizeof(zc))
    cdef zc *vb = <zc *> malloc(2 * db * sizeof(zc))
    cdef zc *t0 = <zc *> malloc((da if da > db else db) * sizeof(zc))
    cdef zc *t1 = <zc *> malloc((da if da > db else db) * sizeof(zc))
    cdef int s, it, a, a2, b, b2, i, i2
    cdef int na = 2 * da, nb = 2 * db
    cdef double lam, prev
    cdef zc acc
    try:
        for s in range(k):
            for b in range(db):
                f[2 * b] = frames[s, b, 0]
                f[2 * b + 1] = frames[s, b, 1]
            prev = 1e300
            lam = 0.0
            it = 0
            while it < max_iter:
                it += 1
                # A-side: free vectors a_0, a_1 paired with the fixed B frame.
                for a in range(da):
                    for i in range(2):
                        for a2 in range(da):
                            for i2 in range(2):
                                acc = 0.0
                                for b in range(db):
                                    for b2 in range(db):
                                        acc = acc + (f[2 * b + i].conjugate()
                                                     * x[a, b, a2, b2]
                                                     * f[2 * b2 + i2])
                                wa.a[(2 * a + i) * na + 2 * a2 + i2] = acc
                for i in range(na):
                    for i2 in range(i + 1, na):
                        acc = 0.5 * (wa.a[i * na + i2] + wa.a[i2 * na + i].conjugate())
                        wa.a[i * na + i2] = acc
                        wa.a[i2 * na + i] = acc.conjugate()
                    wa.a[i * na + i] = wa.a[i * na + i].real
                wa.solve(va)
                for a in range(da):
                    t0[a] = va[2 * a]
                    t1[a] = va[2 * a + 1]
                _orthonormal_pair(t0, t1, da, e)
                # B-side: free vectors b_0, b_1 paired with the new A frame.
                for i in range(2):
                    for b in range(db):
                        for i2 in range(2):
                            for b2 in range(db):
                                acc = 0.0
                                for a in range(da):
                                    for a2 in range(da):
                                        acc = acc + (e[2 * a + i].conjugate()
                                                     * x[a, b, a2, b2]
                                                     * e[2 * a2 + i2])
                                wb.a[(i * db + b) * nb + i2 * db + b2] = acc
                for i in range(nb):
                    for i2 in range(i + 1, nb):
                        acc = 0.5 * (wb.a[i * nb + i2] + wb.a[i2 * nb + i].conjugate())
                        wb.a[i * nb + i2] = acc
                        wb.a[i2 * nb + i] = acc.conjugate()
                    wb.a[i * nb + i] = wb.a[i * nb + i].real
                lam = wb.solve(vb)
                for a in range(da):
                    for b in range(db):
                        c_v[s, a, b] = e[2 * a] * vb[b] + e[2 * a + 1] * vb[db + b]
                for b in range(db):
                    t0[b] = vb[b]
                    t1[b] = vb[db + b]
                _orthonormal_pair(t0, t1, db, f)
                if fabs(prev - lam) < tol:
                    break
                prev = lam
            vals_v[s] = lam
            it_v[s] = it
    finally:
        free(f)
        free(e)
        free(va)
        free(vb)
        free(t0)
        free(t1)
    return values, coeffs, iters
