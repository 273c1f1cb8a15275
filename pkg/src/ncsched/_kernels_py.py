"""Pure-Python twin of the compiled ``_kernels`` module.

Used when the extension is not built, or when ``NCSCHED_PURE_PYTHON`` is
set.  Each routine loops over the batch and defers to :mod:`ncsched.matops`.
"""
import numpy as np

from . import matops
from .errors import LinAlgError


def lyap_scaled_batch(A, lambdas):
    a = np.asarray(A, dtype=float)
    d = a.shape[0]
    lambdas = np.asarray(lambdas, dtype=float)
    out = np.zeros((lambdas.size, d, d))
    kappa = np.full(lambdas.size, np.nan)
    eye = np.eye(d)
    system_base = np.kron(a.T, a.T)
    for idx, lam in enumerate(lambdas):
        try:
            p = matops.solve_linear(np.eye(d * d) - system_base / lam, eye.reshape(-1))
        except LinAlgError:
            continue
        p = p.reshape(d, d)
        p = 0.5 * (p + p.T)
        lo, hi = matops.symmetric_spectrum(p)
        if not (hi > 0.0) or not np.isfinite(hi):
            continue
        out[idx] = p / hi
        kappa[idx] = lo / hi
    return out, kappa


def mu_table(Ps, Pu):
    ps = np.asarray(Ps, dtype=float)
    pu = np.asarray(Pu, dtype=float)
    su = np.full((ps.shape[0], pu.shape[0]), np.nan)
    us = np.full_like(su, np.nan)
    for j in range(ps.shape[0]):
        for k in range(pu.shape[0]):
            try:
                su[j, k] = matops.max_generalized_eigenvalue(pu[k], ps[j])
                us[j, k] = matops.max_generalized_eigenvalue(ps[j], pu[k])
            except LinAlgError:
                su[j, k] = us[j, k] = np.nan
    return su, us


def propagate(As, Au, modes, X0, guard=1e12):
    a_s = np.asarray(As, dtype=float)
    a_u = np.asarray(Au, dtype=float)
    x = np.array(X0, dtype=float)
    modes = np.asarray(modes)
    out = np.empty((modes.size + 1,) + x.shape)
    out[0] = x
    diverged = np.zeros(x.shape[0], dtype=bool)
    for t, mode in enumerate(modes):
        a = a_s if mode else a_u
        nxt = x @ a.T
        nxt[diverged] = x[diverged]
        norms = np.sqrt(np.sum(nxt * nxt, axis=1))
        diverged |= ~(norms <= guard)
        out[t + 1] = nxt
        x = nxt
    return out, diverged
