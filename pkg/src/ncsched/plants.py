"""Plant and NCS configuration model."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import matops
from .errors import ConfigError, ConvergenceError, LinAlgError

SCHUR_TOL = 1e-9
CTRB_RTOL = 1e-10


@dataclass(frozen=True, eq=False)
class PlantSpec:
    """One plant x(t+1) = A x(t) + B u(t) with feedback u = K x when scheduled."""

    index: int
    A: np.ndarray
    B: np.ndarray
    K: np.ndarray

    def __post_init__(self):
        a = matops.as_matrix(self.A, "A")
        b = np.array(self.B, dtype=float)
        if b.ndim == 1:
            b = b.reshape(-1, 1)
        b = matops.as_matrix(b, "B")
        k = matops.as_matrix(self.K, "K")
        d = a.shape[0]
        if a.shape != (d, d):
            raise ConfigError(f"plant {self.index}: A must be square, got {a.shape}")
        if b.shape[0] != d:
            raise ConfigError(f"plant {self.index}: B has {b.shape[0]} rows, A has {d}")
        if k.shape != (b.shape[1], d):
            raise ConfigError(
                f"plant {self.index}: K has shape {k.shape}, expected {(b.shape[1], d)}"
            )
        object.__setattr__(self, "A", a)
        object.__setattr__(self, "B", b)
        object.__setattr__(self, "K", k)

    @property
    def dim(self) -> int:
        return self.A.shape[0]

    @property
    def A_s(self) -> np.ndarray:
        return self.A + self.B @ self.K

    @property
    def A_u(self) -> np.ndarray:
        return self.A


def mode_matrices(p: PlantSpec) -> tuple[np.ndarray, np.ndarray]:
    """(closed-loop, open-loop) matrices of a plant."""
    return p.A_s, p.A_u


@dataclass(frozen=True)
class NCSConfig:
    plants: tuple[PlantSpec, ...]
    M: int

    def __post_init__(self):
        object.__setattr__(self, "plants", tuple(self.plants))
        n = len(self.plants)
        if not 0 < self.M < n:
            raise ConfigError(f"need 0 < M < N, got M={self.M}, N={n}")
        dims = {p.dim for p in self.plants}
        if len(dims) != 1:
            raise ConfigError(f"all plants must share one state dimension, got {sorted(dims)}")

    @property
    def N(self) -> int:
        return len(self.plants)

    @property
    def dim(self) -> int:
        return self.plants[0].dim


@dataclass
class PlantCheck:
    index: int
    rho_open: float
    rho_closed: float
    ok: bool
    reason: str = ""


@dataclass
class ValidationReport:
    plants: list[PlantCheck] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(p.ok for p in self.plants)

    def failures(self) -> list[PlantCheck]:
        return [p for p in self.plants if not p.ok]


def validate_assumption1(cfg: NCSConfig, tol: float = SCHUR_TOL) -> ValidationReport:
    """Every open loop must be non-Schur and every closed loop Schur."""
    report = ValidationReport()
    for p in cfg.plants:
        ro = matops.spectral_radius(p.A_u)
        rc = matops.spectral_radius(p.A_s)
        reasons = []
        if ro < 1.0 - tol:
            reasons.append("open loop not unstable")
        if not rc < 1.0 - tol:
            reasons.append("closed loop not Schur")
        report.plants.append(PlantCheck(p.index, ro, rc, not reasons, "; ".join(reasons)))
    return report


def is_controllable(A, B, rtol: float = CTRB_RTOL) -> bool:
    a = matops.as_matrix(A)
    b = np.array(B, dtype=float).reshape(a.shape[0], -1)
    blocks = [b]
    for _ in range(a.shape[0] - 1):
        blocks.append(a @ blocks[-1])
    sv = np.linalg.svd(np.hstack(blocks), compute_uv=False)
    return bool(sv[-1] > rtol * sv[0]) if sv[0] > 0 else False


def design_lqr_gains(A_list, B_list, Q, R) -> list[np.ndarray]:
    """LQR gain per plant (u = K x convention)."""
    gains = []
    for i, (a, b) in enumerate(zip(A_list, B_list), start=1):
        b = np.array(b, dtype=float)
        if b.ndim == 1:
            b = b.reshape(-1, 1)
        if not is_controllable(a, b):
            raise ConfigError(f"plant {i}: (A, B) is not controllable")
        try:
            gains.append(matops.solve_dare_lqr(a, b, Q, R))
        except (ConvergenceError, LinAlgError) as exc:
            raise ConfigError(f"plant {i}: LQR design failed: {exc}") from exc
    return gains


def build_config(A_list, B_list, K_list, M: int) -> NCSConfig:
    plants = [
        PlantSpec(i, a, b, k) for i, (a, b, k) in enumerate(zip(A_list, B_list, K_list), start=1)
    ]
    return NCSConfig(tuple(plants), M)


def random_plants(N: int, seed: int, dim: int = 2, Q=None, R=None, bound: float = 2.0):
    """Random non-Schur plants with LQR gains for scale runs.

    Entries of A are uniform on [-bound, bound] and entries of B are drawn
    from {0, 1}; draws are rejected until A is not Schur stable and (A, B)
    is controllable.
    """
    rng = np.random.default_rng(seed)
    Q = 5.0 * np.eye(dim) if Q is None else Q
    R = np.eye(1) if R is None else R
    As, Bs = [], []
    while len(As) < N:
        a = rng.uniform(-bound, bound, size=(dim, dim))
        b = rng.integers(0, 2, size=(dim, 1)).astype(float)
        if matops.spectral_radius(a) < 1.0 or not is_controllable(a, b):
            continue
        As.append(a)
        Bs.append(b)
    return As, Bs, design_lqr_gains(As, Bs, Q, R)
