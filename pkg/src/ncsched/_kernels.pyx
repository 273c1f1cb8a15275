# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: batched Lyapunov solves, mu tables, switched propagation.

Same algorithms and signatures as ``_kernels_py``.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, hypot, NAN, isfinite

cnp.import_array()

cdef int _solve_inplace(double[:, ::1] m, double[::1] rhs, int n) nogil:
    """Partial-pivot elimination; returns 0 on success, 1 if singular."""
    cdef int i, j, k, piv
    cdef double scale = 0.0, best, f, tmp
    for i in range(n):
        for j in range(n):
            if fabs(m[i, j]) > scale:
                scale = fabs(m[i, j])
    if scale == 0.0:
        return 1
    for k in range(n):
        piv = k
        best = fabs(m[k, k])
        for i in range(k + 1, n):
            if fabs(m[i, k]) > best:
                best = fabs(m[i, k])
                piv = i
        if best <= 1e-14 * scale:
            return 1
        if piv != k:
            for j in range(n):
                tmp = m[k, j]
                m[k, j] = m[piv, j]
                m[piv, j] = tmp
            tmp = rhs[k]
            rhs[k] = rhs[piv]
            rhs[piv] = tmp
        for i in range(k + 1, n):
            f = m[i, k] / m[k, k]
            if f != 0.0:
                for j in range(k, n):
                    m[i, j] -= f * m[k, j]
                rhs[i] -= f * rhs[k]
    for k in range(n - 1, -1, -1):
        tmp = rhs[k]
        for j in range(k + 1, n):
            tmp -= m[k, j] * rhs[j]
        rhs[k] = tmp / m[k, k]
    return 0


cdef void _sym_extremes(double* a, int n, double* lo, double* hi) nogil:
    """Extreme eigenvalues of a symmetric n×n row-major buffer (destroyed)."""
    cdef int p, q, k, sweep
    cdef double mid, rad, off, scale, apq, theta, t, c, s, akp, akq, app, aqq
    if n == 1:
        lo[0] = a[0]
        hi[0] = a[0]
        return
    if n == 2:
        mid = 0.5 * (a[0] + a[3])
        rad = hypot(0.5 * (a[0] - a[3]), a[1])
        lo[0] = mid - rad
        hi[0] = mid + rad
        return
    scale = 0.0
    for p in range(n * n):
        if fabs(a[p]) > scale:
            scale = fabs(a[p])
    for sweep in range(100):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                off += a[p * n + q] * a[p * n + q]
        if sqrt(off) <= 1e-17 * scale * n:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p * n + q]
                if apq == 0.0:
                    continue
                app = a[p * n + p]
                aqq = a[q * n + q]
                theta = (aqq - app) / (2.0 * apq)
                t = 1.0 / (fabs(theta) + sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    akp = a[k * n + p]
                    akq = a[k * n + q]
                    a[k * n + p] = c * akp - s * akq
                    a[k * n + q] = s * akp + c * akq
                for k in range(n):
                    akp = a[p * n + k]
                    akq = a[q * n + k]
                    a[p * n + k] = c * akp - s * akq
                    a[q * n + k] = s * akp + c * akq
                a[p * n + q] = 0.0
                a[q * n + p] = 0.0
    lo[0] = a[0]
    hi[0] = a[0]
    for p in range(1, n):
        if a[p * n + p] < lo[0]:
            lo[0] = a[p * n + p]
        if a[p * n + p] > hi[0]:
            hi[0] = a[p * n + p]


def lyap_scaled_batch(A, lambdas):
    """Normalised solutions of (A/√λ)ᵀP(A/√λ) − P + I = 0 for each λ.

    Returns ``(P, kappa)`` with λ_max(P[k]) = 1 and kappa[k] = λ_min(P[k]);
    kappa is NaN where the linear system is singular.
    """
    cdef const double[:, ::1] a = np.ascontiguousarray(A, dtype=np.float64)
    cdef const double[::1] lam = np.ascontiguousarray(lambdas, dtype=np.float64)
    cdef int d = a.shape[0]
    cdef int nn = d * d
    cdef Py_ssize_t nl = lam.shape[0]
    out_np = np.zeros((nl, d, d))
    kappa_np = np.full(nl, np.nan)
    cdef double[:, :, ::1] out = out_np
    cdef double[::1] kappa = kappa_np
    cdef double[:, ::1] m = np.zeros((nn, nn))
    cdef double[::1] rhs = np.zeros(nn)
    cdef double[::1] work = np.zeros(nn)
    cdef double sc, lo, hi
    cdef Py_ssize_t idx
    cdef int i, j, k, l, row, col
    with nogil:
        for idx in range(nl):
            sc = 1.0 / lam[idx]
            # row-major vec: vec(AᵀPA)[i*d+j] = Σ_kl A[k,i] A[l,j] P[k,l]
            for i in range(d):
                for j in range(d):
                    row = i * d + j
                    for k in range(d):
                        for l in range(d):
                            col = k * d + l
                            m[row, col] = -sc * a[k, i] * a[l, j]
                    m[row, row] += 1.0
                    rhs[row] = 1.0 if i == j else 0.0
            if _solve_inplace(m, rhs, nn) != 0:
                continue
            for i in range(d):
                for j in range(d):
                    work[i * d + j] = 0.5 * (rhs[i * d + j] + rhs[j * d + i])
            for i in range(nn):
                rhs[i] = work[i]
            _sym_extremes(&work[0], d, &lo, &hi)
            if not (hi > 0.0) or not isfinite(hi):
                continue
            for i in range(d):
                for j in range(d):
                    out[idx, i, j] = rhs[i * d + j] / hi
            kappa[idx] = lo / hi
    return out_np, kappa_np


cdef int _cholesky(const double* p, double* low, int n) nogil:
    cdef int i, j, k
    cdef double s
    for i in range(n * n):
        low[i] = 0.0
    for j in range(n):
        s = p[j * n + j]
        for k in range(j):
            s -= low[j * n + k] * low[j * n + k]
        if not (s > 0.0):
            return 1
        low[j * n + j] = sqrt(s)
        for i in range(j + 1, n):
            s = p[i * n + j]
            for k in range(j):
                s -= low[i * n + k] * low[j * n + k]
            low[i * n + j] = s / low[j * n + j]
    return 0


cdef double _gen_max(const double* pq, double* low, int n, double* y, double* c) nogil:
    """λ_max(Pq Pp⁻¹) given the Cholesky factor of Pp."""
    cdef int i, j, k
    cdef double s, lo, hi
    # y = L⁻¹ Pq (column by column forward substitution)
    for j in range(n):
        for i in range(n):
            s = pq[i * n + j]
            for k in range(i):
                s -= low[i * n + k] * y[k * n + j]
            y[i * n + j] = s / low[i * n + i]
    # c = L⁻¹ yᵀ
    for j in range(n):
        for i in range(n):
            s = y[j * n + i]
            for k in range(i):
                s -= low[i * n + k] * c[k * n + j]
            c[i * n + j] = s / low[i * n + i]
    for i in range(n):
        for j in range(i + 1, n):
            s = 0.5 * (c[i * n + j] + c[j * n + i])
            c[i * n + j] = s
            c[j * n + i] = s
    _sym_extremes(c, n, &lo, &hi)
    return hi


def mu_table(Ps, Pu):
    """mu_su[j,k] = λ_max(Pu[k] Ps[j]⁻¹), mu_us[j,k] = λ_max(Ps[j] Pu[k]⁻¹).

    NaN marks a factorisation failure (non-PD input).
    """
    cdef const double[:, :, ::1] ps = np.ascontiguousarray(Ps, dtype=np.float64)
    cdef const double[:, :, ::1] pu = np.ascontiguousarray(Pu, dtype=np.float64)
    cdef Py_ssize_t ks = ps.shape[0], ku = pu.shape[0]
    cdef int d = ps.shape[1]
    su_np = np.full((ks, ku), np.nan)
    us_np = np.full((ks, ku), np.nan)
    cdef double[:, ::1] su = su_np
    cdef double[:, ::1] us = us_np
    cdef double[::1] lows = np.zeros(ks * d * d)
    cdef double[::1] lowu = np.zeros(ku * d * d)
    cdef char[::1] oks = np.zeros(ks, dtype=np.int8)
    cdef char[::1] oku = np.zeros(ku, dtype=np.int8)
    cdef double[::1] y = np.zeros(d * d)
    cdef double[::1] c = np.zeros(d * d)
    cdef Py_ssize_t j, k
    with nogil:
        for j in range(ks):
            oks[j] = _cholesky(&ps[j, 0, 0], &lows[j * d * d], d) == 0
        for k in range(ku):
            oku[k] = _cholesky(&pu[k, 0, 0], &lowu[k * d * d], d) == 0
        for j in range(ks):
            if not oks[j]:
                continue
            for k in range(ku):
                if not oku[k]:
                    continue
                su[j, k] = _gen_max(&pu[k, 0, 0], &lows[j * d * d], d, &y[0], &c[0])
                us[j, k] = _gen_max(&ps[j, 0, 0], &lowu[k * d * d], d, &y[0], &c[0])
    return su_np, us_np


def propagate(As, Au, modes, X0, double guard=1e12):
    """Run x(t+1) = A_{mode(t)} x(t) for a batch of initial states.

    ``modes[t]`` is nonzero for the stable matrix.  A trajectory whose norm
    exceeds ``guard`` is frozen and flagged.  Returns ``(X, diverged)`` with
    X of shape (len(modes)+1, m, d).
    """
    cdef const double[:, ::1] a_s = np.ascontiguousarray(As, dtype=np.float64)
    cdef const double[:, ::1] a_u = np.ascontiguousarray(Au, dtype=np.float64)
    cdef const cnp.uint8_t[::1] md = np.ascontiguousarray(modes, dtype=np.uint8)
    cdef const double[:, ::1] x0 = np.ascontiguousarray(X0, dtype=np.float64)
    cdef Py_ssize_t T = md.shape[0], m = x0.shape[0]
    cdef int d = x0.shape[1]
    out_np = np.empty((T + 1, m, d))
    div_np = np.zeros(m, dtype=np.uint8)
    cdef double[:, :, ::1] out = out_np
    cdef cnp.uint8_t[::1] div = div_np
    cdef const double[:, ::1] a
    cdef Py_ssize_t t, r
    cdef int i, j
    cdef double s, nrm
    out[0, :, :] = x0
    with nogil:
        for t in range(T):
            if md[t]:
                a = a_s
            else:
                a = a_u
            for r in range(m):
                if div[r]:
                    for i in range(d):
                        out[t + 1, r, i] = out[t, r, i]
                    continue
                nrm = 0.0
                for i in range(d):
                    s = 0.0
                    for j in range(d):
                        s += a[i, j] * out[t, r, j]
                    out[t + 1, r, i] = s
                    nrm += s * s
                if not (sqrt(nrm) <= guard):
                    div[r] = 1
    return out_np, div_np.astype(bool)
