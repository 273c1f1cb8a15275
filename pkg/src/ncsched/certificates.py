"""Per-plant Lyapunov-like certificates and the λ-grid machinery.

For a fixed rate λ the matrix inequality AᵀPA − λP ⪯ 0 is solved
constructively: P is the solution of the discrete Lyapunov equation for
A/√λ with identity right-hand side, rescaled so that λ_max(P) = 1.  Such a
P exists iff ρ(A) < √λ, which doubles as a cheap pre-filter.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, NamedTuple

import numpy as np

from . import kernels, matops
from .errors import LinAlgError
from .plants import NCSConfig, PlantSpec

SCHUR_TOL = 1e-9


@dataclass(frozen=True)
class DesignGrid:
    h_s: float = 1e-2
    h_u: float = 1e-2
    kappa_min: float = 1e-8
    lmi_tol: float = 1e-9

    def __post_init__(self):
        for name in ("h_s", "h_u"):
            h = getattr(self, name)
            if not 0.0 < h < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {h}")
        if not self.kappa_min > 0.0:
            raise ValueError("kappa_min must be positive")

    @property
    def k_s(self) -> int:
        return grid_steps(self.h_s)

    @property
    def k_u(self) -> int:
        return grid_steps(self.h_u)


def grid_steps(h: float) -> int:
    """Largest integer k with k·h < 1 (products within 1e-12 of 1 count as 1)."""
    k = int(math.floor(1.0 / h))
    while k > 0 and k * h >= 1.0 - 1e-12:
        k -= 1
    while (k + 1) * h < 1.0 - 1e-12:
        k += 1
    return k


def lambda_grid_stable(grid: DesignGrid) -> np.ndarray:
    k = grid.k_s
    if k < 1:
        raise ValueError(f"step h_s={grid.h_s} leaves an empty grid")
    return np.arange(1, k + 1) * grid.h_s


def lambda_grid_unstable(A_u, grid: DesignGrid) -> tuple[np.ndarray, np.ndarray]:
    """(η, 1/η²) for every grid η with η·A_u Schur stable, η ascending."""
    rho = matops.spectral_radius(A_u)
    etas = np.arange(1, grid.k_u + 1) * grid.h_u
    keep = etas * rho < 1.0 - SCHUR_TOL
    etas = etas[keep]
    return etas, 1.0 / etas**2


class LMISolution(NamedTuple):
    P: np.ndarray
    kappa: float


def solve_mode_lmi(A, lam: float, grid: DesignGrid) -> LMISolution | None:
    """P with AᵀPA − λP ⪯ 0, κI ⪯ P ⪯ I, or None when infeasible.

    None covers both ρ(A) ≥ √λ and a solution whose conditioning
    violates ``grid.kappa_min``.
    """
    if not lam > 0.0:
        raise ValueError("lambda must be positive")
    a = matops.as_matrix(A, "A")
    scaled = a / math.sqrt(lam)
    if not matops.is_schur(scaled, SCHUR_TOL):
        return None
    try:
        p = matops.solve_discrete_lyapunov(scaled, np.eye(a.shape[0]))
    except LinAlgError:
        return None
    lo, hi = matops.symmetric_spectrum(p)
    p = p / hi
    kappa = lo / hi
    if kappa < grid.kappa_min:
        return None
    return LMISolution(p, kappa)


def compute_mu(P_p, P_q) -> float:
    """Tight constant μ_pq with V_q ≤ μ_pq V_p, i.e. λ_max(P_q P_p⁻¹)."""
    return matops.max_generalized_eigenvalue(P_q, P_p)


def estimate_lambda_s(P, Q) -> float:
    """Decay-rate estimate 1 − λ_min(Q)/λ_max(P) from a Lyapunov pair."""
    q_min = matops.symmetric_spectrum(Q).lambda_min
    if not q_min > 0.0:
        raise ValueError("Q must be positive definite")
    val = 1.0 - q_min / matops.symmetric_spectrum(P).lambda_max
    if not 0.0 < val < 1.0:
        raise ValueError(f"estimate {val} outside (0, 1); P and Q are inconsistent")
    return val


@dataclass(frozen=True)
class ModeScalars:
    """The four scalars a plant contributes to vertex and edge weights."""

    lambda_s: float
    lambda_u: float
    mu_su: float
    mu_us: float

    def __post_init__(self):
        if not 0.0 < self.lambda_s < 1.0:
            raise ValueError(f"lambda_s must lie in (0, 1), got {self.lambda_s}")
        if not self.lambda_u >= 1.0:
            raise ValueError(f"lambda_u must be >= 1, got {self.lambda_u}")
        if not (self.mu_su >= 1.0 - 1e-9 and self.mu_us >= 1.0 - 1e-9):
            raise ValueError("mu values must be >= 1")

    @property
    def stable_weight(self) -> float:
        return -abs(math.log(self.lambda_s))

    @property
    def unstable_weight(self) -> float:
        return abs(math.log(self.lambda_u))

    @property
    def log_mu_su(self) -> float:
        return math.log(self.mu_su)

    @property
    def log_mu_us(self) -> float:
        return math.log(self.mu_us)


@dataclass(frozen=True, eq=False)
class ModeCertificate(ModeScalars):
    P_s: np.ndarray
    P_u: np.ndarray
    plant: int = 0

    @property
    def kappa(self) -> float:
        return min(
            matops.symmetric_spectrum(self.P_s).lambda_min,
            matops.symmetric_spectrum(self.P_u).lambda_min,
        )

    def lmi_residuals(self, A_s, A_u) -> tuple[float, float]:
        """λ_max(AᵀPA − λP) for the stable and unstable modes."""
        rs = A_s.T @ self.P_s @ A_s - self.lambda_s * self.P_s
        ru = A_u.T @ self.P_u @ A_u - self.lambda_u * self.P_u
        return (
            matops.symmetric_spectrum(0.5 * (rs + rs.T)).lambda_max,
            matops.symmetric_spectrum(0.5 * (ru + ru.T)).lambda_max,
        )


class CertificateTable:
    """All feasible grid certificates of one plant.

    Rows follow ascending λ_s, columns ascending λ_u; flat index
    ``j * len(lambda_u) + k`` is the grid enumeration order.
    """

    def __init__(self, plant, lambda_s, P_s, lambda_u, P_u, mu_su, mu_us):
        self.plant = plant
        self.lambda_s = lambda_s
        self.P_s = P_s
        self.lambda_u = lambda_u
        self.P_u = P_u
        self.mu_su = mu_su
        self.mu_us = mu_us

    def __len__(self) -> int:
        return self.lambda_s.size * self.lambda_u.size

    @property
    def empty(self) -> bool:
        return len(self) == 0

    def certificate(self, flat: int) -> ModeCertificate:
        j, k = divmod(int(flat), self.lambda_u.size)
        return ModeCertificate(
            lambda_s=float(self.lambda_s[j]),
            lambda_u=float(self.lambda_u[k]),
            mu_su=float(self.mu_su[j, k]),
            mu_us=float(self.mu_us[j, k]),
            P_s=self.P_s[j],
            P_u=self.P_u[k],
            plant=self.plant,
        )

    def __iter__(self) -> Iterator[ModeCertificate]:
        for flat in range(len(self)):
            yield self.certificate(flat)

    def coefficients(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Flat (|ln λ_s|, |ln λ_u|, ln μ_su, ln μ_us) in grid order."""
        ks, ku = self.lambda_s.size, self.lambda_u.size
        a = np.repeat(np.abs(np.log(self.lambda_s)), ku)
        b = np.tile(np.abs(np.log(self.lambda_u)), ks)
        return a, b, np.log(self.mu_su).reshape(-1), np.log(self.mu_us).reshape(-1)


def _feasible_solutions(A, lams: np.ndarray, grid: DesignGrid):
    rho = matops.spectral_radius(A)
    lams = lams[rho < np.sqrt(lams) * (1.0 - SCHUR_TOL)]
    if lams.size == 0:
        return lams, np.zeros((0,) + A.shape)
    P, kappa = kernels.lyap_scaled_batch(A, lams)
    ok = np.isfinite(kappa) & (kappa >= grid.kappa_min)
    lams, P = lams[ok], P[ok]
    if lams.size:
        res = np.einsum("ji,njk,kl->nil", A, P, A) - lams[:, None, None] * P
        worst = np.linalg.eigvalsh(0.5 * (res + res.transpose(0, 2, 1)))[:, -1]
        ok = worst <= grid.lmi_tol
        lams, P = lams[ok], P[ok]
    return lams, P


def build_certificate_table(plant: PlantSpec, grid: DesignGrid) -> CertificateTable:
    lam_s, P_s = _feasible_solutions(plant.A_s, lambda_grid_stable(grid), grid)
    _, lam_u = lambda_grid_unstable(plant.A_u, grid)
    lam_u = lam_u[::-1].copy()
    lam_u, P_u = _feasible_solutions(plant.A_u, lam_u, grid)
    if lam_s.size and lam_u.size:
        mu_su, mu_us = kernels.mu_table(P_s, P_u)
        # scale-invariant ratios can dip below 1 by rounding only when P_s ∝ P_u
        bad = ~(np.isfinite(mu_su) & np.isfinite(mu_us))
        if bad.any():
            raise LinAlgError(f"plant {plant.index}: non-PD certificate matrix in table")
    else:
        mu_su = mu_us = np.zeros((lam_s.size, lam_u.size))
    return CertificateTable(plant.index, lam_s, P_s, lam_u, P_u, mu_su, mu_us)


def design_certificates(cfg: NCSConfig, grid: DesignGrid) -> Iterator[CertificateTable]:
    """Per-plant certificate tables, built lazily plant by plant."""
    for plant in cfg.plants:
        yield build_certificate_table(plant, grid)
