"""End-to-end certificate and T-factor design for a fixed candidate cycle."""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .certificates import CertificateTable, DesignGrid, ModeCertificate, design_certificates
from .cycles import (
    T_MAX_DEFAULT,
    Cycle,
    dwell_relaxation_bound,
    is_candidate_contractive,
    is_T_contractive,
    search_T_factors,
)
from .errors import InfeasibleDesignError, PolicyFormatError
from .plants import NCSConfig

UNDECIDED_NOTE = (
    "the grid search does not conclude about the non-existence of suitable"
    " certificates; try finer steps, a larger T_max or another cycle"
)


@dataclass
class DesignResult:
    cycle: Cycle
    T: tuple[int, ...]
    certificates: list[ModeCertificate]
    xi: np.ndarray
    grid: DesignGrid
    T_max: int

    @property
    def margins(self) -> np.ndarray:
        return -self.xi

    @property
    def period(self) -> int:
        return sum(self.T)

    def to_json(self) -> dict:
        return {
            "N": self.cycle.N,
            "M": self.cycle.M,
            "cycle": self.cycle.sets(),
            "T": list(self.T),
            "period": self.period,
            "xi": [float(x) for x in self.xi],
            "grid": {
                "h_s": self.grid.h_s,
                "h_u": self.grid.h_u,
                "kappa_min": self.grid.kappa_min,
                "lmi_tol": self.grid.lmi_tol,
            },
            "T_max": self.T_max,
            "certificates": [
                {
                    "plant": c.plant,
                    "lambda_s": c.lambda_s,
                    "lambda_u": c.lambda_u,
                    "mu_su": c.mu_su,
                    "mu_us": c.mu_us,
                    "P_s": np.asarray(c.P_s).tolist(),
                    "P_u": np.asarray(c.P_u).tolist(),
                }
                for c in self.certificates
            ],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "DesignResult":
        try:
            W = Cycle.from_sets(int(obj["N"]), obj["cycle"])
            certs = [
                ModeCertificate(
                    lambda_s=float(c["lambda_s"]),
                    lambda_u=float(c["lambda_u"]),
                    mu_su=float(c["mu_su"]),
                    mu_us=float(c["mu_us"]),
                    P_s=np.array(c["P_s"], dtype=float),
                    P_u=np.array(c["P_u"], dtype=float),
                    plant=int(c["plant"]),
                )
                for c in obj["certificates"]
            ]
            g = obj["grid"]
            grid = DesignGrid(g["h_s"], g["h_u"], g["kappa_min"], g["lmi_tol"])
            T = tuple(int(t) for t in obj["T"])
            res = cls(W, T, certs, np.array(obj["xi"], dtype=float), grid, int(obj["T_max"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise PolicyFormatError(f"malformed design file: {exc}") from exc
        if len(T) != W.n or len(certs) != W.N:
            raise PolicyFormatError("design file is inconsistent with its cycle")
        return res

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"


def design_cycle(
    cfg: NCSConfig,
    W: Cycle,
    grid: DesignGrid = DesignGrid(),
    T_max: int = T_MAX_DEFAULT,
) -> DesignResult:
    """Search certificates on the λ grid and T-factors for the cycle ``W``.

    The returned T is the first one (in the search order of
    :func:`search_T_factors`) for which every plant owns some admissible
    grid certificate; each plant then takes its first admissible
    certificate in grid order (ascending λ_s, then ascending λ_u).
    """
    if W.N != cfg.N or W.M != cfg.M:
        raise ValueError(f"cycle is for N={W.N}, M={W.M}; config has N={cfg.N}, M={cfg.M}")
    if not is_candidate_contractive(W):
        raise InfeasibleDesignError(
            InfeasibleDesignError.NO_T_FACTORS,
            "the cycle leaves some plant without a stable vertex, so no T-factors exist",
        )
    tables: list[CertificateTable] = []
    for tb in design_certificates(cfg, grid):
        if tb.empty:
            raise InfeasibleDesignError(
                InfeasibleDesignError.NO_GRID_POINT,
                f"plant {tb.plant}: no feasible grid point (h_s={grid.h_s}, h_u={grid.h_u});"
                f" {UNDECIDED_NOTE}",
            )
        tables.append(tb)
    options = [tb.coefficients() for tb in tables]
    found = search_T_factors(W, options, T_max)
    if found is None:
        label = str(W) if W.n <= 8 else f"the {W.n}-vertex cycle"
        msg = f"feasible certificates exist but no T-factors up to T_max={T_max} make {label} T-contractive"
        if dwell_relaxation_bound(W, options) >= 0.0:
            msg += "; even ignoring switching costs no dwell split works with these grid rates"
        raise InfeasibleDesignError(InfeasibleDesignError.NO_T_FACTORS, f"{msg}; {UNDECIDED_NOTE}")
    certs = [tb.certificate(k) for tb, k in zip(tables, found.choice)]
    check = is_T_contractive(W, found.T, certs)
    if not check.ok:
        raise ArithmeticError(f"selected certificates fail the cycle check: {check.xi}")
    return DesignResult(W, found.T, certs, check.xi, grid, T_max)
