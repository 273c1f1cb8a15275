"""Dense linear algebra for small real matrices.

Everything here works on ``float64`` numpy arrays but does its own
factorisations (Householder/Francis QR, cyclic Jacobi, Cholesky, Gaussian
elimination) so results do not depend on which LAPACK numpy was built
against.  Plant dimensions are assumed to be at most ~10.
"""
from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .errors import (
    ConvergenceError,
    LinAlgError,
    NotPositiveDefiniteError,
    NotSchurError,
)

SYM_TOL = 1e-9
QR_MAX_ITS = 60
JACOBI_MAX_SWEEPS = 100
DARE_MAX_ITER = 100_000
DARE_STEP_TOL = 1e-12


class SymmetricSpectrum(NamedTuple):
    lambda_min: float
    lambda_max: float


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    m = np.array(a, dtype=float)
    if m.ndim == 1:
        m = m.reshape(1, -1)
    if m.ndim != 2 or m.size == 0:
        raise LinAlgError(f"{name} must be a non-empty 2-D array, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise LinAlgError(f"{name} has non-finite entries")
    return m


def _square(a, name="matrix") -> np.ndarray:
    m = as_matrix(a, name)
    if m.shape[0] != m.shape[1]:
        raise LinAlgError(f"{name} must be square, got shape {m.shape}")
    return m


def _symmetric(a, name="matrix") -> np.ndarray:
    m = _square(a, name)
    asym = np.max(np.abs(m - m.T))
    if asym > SYM_TOL:
        raise LinAlgError(f"{name} is not symmetric (max asymmetry {asym:.3g})")
    return 0.5 * (m + m.T)


# ---------------------------------------------------------------------------
# general eigenvalues


def _hessenberg(a: np.ndarray) -> np.ndarray:
    """Householder reduction to upper Hessenberg form (similarity transform)."""
    h = a.copy()
    n = h.shape[0]
    for k in range(n - 2):
        x = h[k + 1:, k].copy()
        alpha = np.linalg.norm(x)
        if alpha == 0.0:
            continue
        if x[0] > 0:
            alpha = -alpha
        v = x
        v[0] -= alpha
        vnorm = np.linalg.norm(v)
        if vnorm == 0.0:
            continue
        v /= vnorm
        h[k + 1:, k:] -= 2.0 * np.outer(v, v @ h[k + 1:, k:])
        h[:, k + 1:] -= 2.0 * np.outer(h[:, k + 1:] @ v, v)
        h[k + 2:, k] = 0.0
    return h


def _hqr(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues of an upper Hessenberg matrix by Francis double-shift QR.

    ``a`` is overwritten.  Returns real and imaginary parts.
    """
    n = a.shape[0]
    wr = np.zeros(n)
    wi = np.zeros(n)
    anorm = 0.0
    for i in range(n):
        for j in range(max(i - 1, 0), n):
            anorm += abs(a[i, j])
    nn = n - 1
    t = 0.0
    x = y = w = p = q = r = z = 0.0
    while nn >= 0:
        its = 0
        while True:
            l = nn
            while l >= 1:
                s = abs(a[l - 1, l - 1]) + abs(a[l, l])
                if s == 0.0:
                    s = anorm
                if abs(a[l, l - 1]) + s == s:
                    a[l, l - 1] = 0.0
                    break
                l -= 1
            x = a[nn, nn]
            if l == nn:
                wr[nn] = x + t
                wi[nn] = 0.0
                nn -= 1
            else:
                y = a[nn - 1, nn - 1]
                w = a[nn, nn - 1] * a[nn - 1, nn]
                if l == nn - 1:
                    p = 0.5 * (y - x)
                    q = p * p + w
                    z = math.sqrt(abs(q))
                    x += t
                    if q >= 0.0:
                        z = p + math.copysign(z, p)
                        wr[nn - 1] = wr[nn] = x + z
                        if z != 0.0:
                            wr[nn] = x - w / z
                        wi[nn - 1] = wi[nn] = 0.0
                    else:
                        wr[nn - 1] = wr[nn] = x + p
                        wi[nn] = z
                        wi[nn - 1] = -z
                    nn -= 2
                else:
                    if its == QR_MAX_ITS:
                        raise ConvergenceError("QR iteration did not converge")
                    if its in (10, 20, 40):
                        t += x
                        for i in range(nn + 1):
                            a[i, i] -= x
                        s = abs(a[nn, nn - 1]) + abs(a[nn - 1, nn - 2])
                        y = x = 0.75 * s
                        w = -0.4375 * s * s
                    its += 1
                    m = nn - 2
                    while m >= l:
                        z = a[m, m]
                        r = x - z
                        s = y - z
                        p = (r * s - w) / a[m + 1, m] + a[m, m + 1]
                        q = a[m + 1, m + 1] - z - r - s
                        r = a[m + 2, m + 1]
                        s = abs(p) + abs(q) + abs(r)
                        p /= s
                        q /= s
                        r /= s
                        if m == l:
                            break
                        u = abs(a[m, m - 1]) * (abs(q) + abs(r))
                        v = abs(p) * (abs(a[m - 1, m - 1]) + abs(z) + abs(a[m + 1, m + 1]))
                        if u + v == v:
                            break
                        m -= 1
                    for i in range(m + 2, nn + 1):
                        a[i, i - 2] = 0.0
                        if i != m + 2:
                            a[i, i - 3] = 0.0
                    for k in range(m, nn):
                        if k != m:
                            p = a[k, k - 1]
                            q = a[k + 1, k - 1]
                            r = a[k + 2, k - 1] if k != nn - 1 else 0.0
                            x = abs(p) + abs(q) + abs(r)
                            if x != 0.0:
                                p /= x
                                q /= x
                                r /= x
                        s = math.copysign(math.sqrt(p * p + q * q + r * r), p)
                        if s == 0.0:
                            continue
                        if k == m:
                            if l != m:
                                a[k, k - 1] = -a[k, k - 1]
                        else:
                            a[k, k - 1] = -s * x
                        p += s
                        x = p / s
                        y = q / s
                        z = r / s
                        q /= p
                        r /= p
                        for j in range(k, nn + 1):
                            p = a[k, j] + q * a[k + 1, j]
                            if k != nn - 1:
                                p += r * a[k + 2, j]
                                a[k + 2, j] -= p * z
                            a[k + 1, j] -= p * y
                            a[k, j] -= p * x
                        for i in range(l, min(nn, k + 3) + 1):
                            p = x * a[i, k] + y * a[i, k + 1]
                            if k != nn - 1:
                                p += z * a[i, k + 2]
                                a[i, k + 2] -= p * r
                            a[i, k + 1] -= p * q
                            a[i, k] -= p
            if not l < nn - 1:
                break
    return wr, wi


def _eig2(a: np.ndarray) -> np.ndarray:
    tr = a[0, 0] + a[1, 1]
    det = a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
    half = 0.5 * (a[0, 0] - a[1, 1])
    disc = half * half + a[0, 1] * a[1, 0]
    if disc >= 0.0:
        root = math.sqrt(disc)
        big = 0.5 * tr + math.copysign(root, tr) if tr != 0.0 else root
        # det / big avoids cancellation in the small root
        small = det / big if big != 0.0 else 0.5 * tr - root
        return np.array([big, small], dtype=complex)
    root = math.sqrt(-disc)
    return np.array([complex(0.5 * tr, root), complex(0.5 * tr, -root)])


def eigenvalues(a) -> np.ndarray:
    """All (complex) eigenvalues of a real square matrix."""
    m = _square(a)
    n = m.shape[0]
    if n == 1:
        return np.array([complex(m[0, 0])])
    if n == 2:
        return _eig2(m)
    wr, wi = _hqr(_hessenberg(m))
    return wr + 1j * wi


def spectral_radius(a) -> float:
    return float(np.max(np.abs(eigenvalues(a))))


def is_schur(a, tol: float = 1e-9) -> bool:
    return spectral_radius(a) < 1.0 - tol


# ---------------------------------------------------------------------------
# symmetric problems


def _jacobi_eigenvalues(s: np.ndarray) -> np.ndarray:
    a = s.copy()
    n = a.shape[0]
    if n == 1:
        return a.diagonal().copy()
    scale = np.max(np.abs(a))
    if scale == 0.0:
        return np.zeros(n)
    for _ in range(JACOBI_MAX_SWEEPS):
        off = np.sqrt(np.sum(np.triu(a, 1) ** 2))
        if off <= 1e-17 * scale * n:
            return a.diagonal().copy()
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                sn = t * c
                rot = np.array([[c, sn], [-sn, c]])
                idx = [p, q]
                a[idx, :] = rot.T @ a[idx, :]
                a[:, idx] = a[:, idx] @ rot
                a[p, q] = a[q, p] = 0.0
    raise ConvergenceError("Jacobi eigenvalue iteration did not converge")


def symmetric_eigenvalues(p) -> np.ndarray:
    """Eigenvalues of a symmetric matrix, ascending."""
    s = _symmetric(p)
    if s.shape[0] == 2:
        mid = 0.5 * (s[0, 0] + s[1, 1])
        rad = math.hypot(0.5 * (s[0, 0] - s[1, 1]), s[0, 1])
        return np.array([mid - rad, mid + rad])
    return np.sort(_jacobi_eigenvalues(s))


def symmetric_spectrum(p) -> SymmetricSpectrum:
    ev = symmetric_eigenvalues(p)
    return SymmetricSpectrum(float(ev[0]), float(ev[-1]))


def cholesky(p) -> np.ndarray:
    """Lower-triangular L with P = L Lᵀ; raises on non-PD input."""
    s = _symmetric(p)
    n = s.shape[0]
    low = np.zeros_like(s)
    for j in range(n):
        d = s[j, j] - low[j, :j] @ low[j, :j]
        if not d > 0.0:
            raise NotPositiveDefiniteError("matrix is not positive definite")
        low[j, j] = math.sqrt(d)
        for i in range(j + 1, n):
            low[i, j] = (s[i, j] - low[i, :j] @ low[j, :j]) / low[j, j]
    return low


def _forward_sub(low: np.ndarray, b: np.ndarray) -> np.ndarray:
    x = np.zeros_like(b)
    for i in range(low.shape[0]):
        x[i] = (b[i] - low[i, :i] @ x[:i]) / low[i, i]
    return x


def max_generalized_eigenvalue(pq, pp) -> float:
    """λ_max(Pq Pp⁻¹) for SPD Pq, Pp.

    Reduced to the symmetric problem L⁻¹ Pq L⁻ᵀ with Pp = L Lᵀ, which has
    the same spectrum.
    """
    q = _symmetric(pq, "Pq")
    p = _symmetric(pp, "Pp")
    if q.shape != p.shape:
        raise LinAlgError(f"dimension mismatch {q.shape} vs {p.shape}")
    cholesky(q)
    low = cholesky(p)
    y = _forward_sub(low, q)  # L⁻¹ Pq
    c = _forward_sub(low, y.T.copy())  # L⁻¹ (L⁻¹ Pq)ᵀ = L⁻¹ Pq L⁻ᵀ
    return symmetric_spectrum(0.5 * (c + c.T)).lambda_max


# ---------------------------------------------------------------------------
# linear systems and matrix equations


def solve_linear(a, b) -> np.ndarray:
    """Gaussian elimination with partial pivoting."""
    m = _square(a).copy()
    rhs = np.array(b, dtype=float).copy()
    n = m.shape[0]
    if rhs.shape[0] != n:
        raise LinAlgError("right-hand side has wrong length")
    scale = np.max(np.abs(m))
    if scale == 0.0:
        raise LinAlgError("singular linear system")
    for k in range(n):
        piv = k + int(np.argmax(np.abs(m[k:, k])))
        if abs(m[piv, k]) <= 1e-14 * scale:
            raise LinAlgError("singular linear system")
        if piv != k:
            m[[k, piv]] = m[[piv, k]]
            rhs[[k, piv]] = rhs[[piv, k]]
        f = m[k + 1:, k] / m[k, k]
        m[k + 1:, k:] -= np.outer(f, m[k, k:])
        rhs[k + 1:] -= f * rhs[k]
    x = np.zeros_like(rhs)
    for k in range(n - 1, -1, -1):
        x[k] = (rhs[k] - m[k, k + 1:] @ x[k + 1:]) / m[k, k]
    return x


def solve_discrete_lyapunov(a, q) -> np.ndarray:
    """Symmetric P with AᵀPA − P + Q = 0 for Schur-stable A.

    Solved as the d²×d² system (I − Aᵀ⊗Aᵀ) vec(P) = vec(Q).
    """
    a = _square(a, "A")
    q = _symmetric(q, "Q")
    if a.shape != q.shape:
        raise LinAlgError(f"dimension mismatch {a.shape} vs {q.shape}")
    if not spectral_radius(a) < 1.0:
        raise NotSchurError("A is not Schur stable; no positive definite solution")
    d = a.shape[0]
    system = np.eye(d * d) - np.kron(a.T, a.T)
    p = solve_linear(system, q.reshape(-1)).reshape(d, d)
    return 0.5 * (p + p.T)


def solve_dare_lqr(a, b, q, r) -> np.ndarray:
    """LQR gain K = −(R + BᵀPB)⁻¹BᵀPA from the Riccati fixed point.

    Iterates P ← Q + AᵀPA − AᵀPB(R + BᵀPB)⁻¹BᵀPA from P = Q until the
    step change drops below 1e-12 (relative to ‖P‖).
    """
    a = _square(a, "A")
    b = as_matrix(b, "B")
    if b.shape[0] != a.shape[0]:
        b = b.T if b.shape[1] == a.shape[0] else b
    if b.shape[0] != a.shape[0]:
        raise LinAlgError(f"B has shape {b.shape}, expected {a.shape[0]} rows")
    q = _symmetric(q, "Q")
    r = _symmetric(r, "R")
    cholesky(q)
    cholesky(r)
    p = q.copy()
    for _ in range(DARE_MAX_ITER):
        g = r + b.T @ p @ b
        bpa = b.T @ p @ a
        gain = _solve_many(g, bpa)
        p_next = q + a.T @ p @ a - bpa.T @ gain
        p_next = 0.5 * (p_next + p_next.T)
        if not np.all(np.isfinite(p_next)) or np.max(np.abs(p_next)) > 1e15:
            raise ConvergenceError("Riccati iteration diverged; (A, B) looks unstabilizable")
        step = np.max(np.abs(p_next - p))
        p = p_next
        if step <= DARE_STEP_TOL * max(1.0, np.max(np.abs(p))):
            g = r + b.T @ p @ b
            return -_solve_many(g, b.T @ p @ a)
    raise ConvergenceError(f"Riccati iteration hit the {DARE_MAX_ITER} iteration cap")


def _solve_many(a: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    return np.column_stack([solve_linear(a, rhs[:, j]) for j in range(rhs.shape[1])])
