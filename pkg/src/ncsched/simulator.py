"""Simulation of all plants under a schedule and runtime certificate checks.

Along a trajectory of plant i, with σ the mode sequence,

    ln ψ_i(t) = Σ_{k<t} ln λ_{σ(k)} + Σ_{1≤k≤t, σ(k)≠σ(k-1)} ln μ_{σ(k-1)σ(k)}

bounds V_{σ(t)}(x(t)) / V_{σ(0)}(x(0)).  Everything is kept in log space.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence, TextIO

import numpy as np

from . import kernels
from .matops import spectral_radius, symmetric_spectrum
from .certificates import ModeCertificate, ModeScalars
from .plants import NCSConfig
from .scheduler import SchedulingPolicy

GUARD = 1e12
CONVERGING = "converging"
DIVERGING = "diverging"
INCONCLUSIVE = "inconclusive"


@dataclass
class SimState:
    t: int
    x: np.ndarray  # (N, d)
    diverged: np.ndarray  # (N,) bool


def step(cfg: NCSConfig, policy: SchedulingPolicy, state: SimState) -> SimState:
    stable = policy.gamma_at(state.t)
    x = state.x.copy()
    div = state.diverged.copy()
    for k, p in enumerate(cfg.plants):
        if div[k]:
            continue
        a = p.A_s if p.index in stable else p.A_u
        x[k] = a @ state.x[k]
        if not np.linalg.norm(x[k]) <= GUARD:
            div[k] = True
    return SimState(state.t + 1, x, div)


@dataclass
class Trace:
    """States of every plant for a batch of initial conditions.

    ``states`` has shape (horizon + 1, N, trials, d); ``masks[t, i]`` is
    True when plant i+1 runs closed-loop during step t (t ≤ horizon).
    """

    states: np.ndarray
    diverged: np.ndarray
    masks: np.ndarray

    @property
    def horizon(self) -> int:
        return self.states.shape[0] - 1

    @property
    def N(self) -> int:
        return self.states.shape[1]

    @property
    def trials(self) -> int:
        return self.states.shape[2]

    def norms(self) -> np.ndarray:
        """(horizon + 1, N, trials) Euclidean norms."""
        return np.linalg.norm(self.states, axis=-1)


def _as_batch(cfg: NCSConfig, x0) -> np.ndarray:
    x = np.asarray(x0, dtype=float)
    if x.ndim == 2:
        x = x[:, None, :]
    if x.ndim != 3 or x.shape[0] != cfg.N or x.shape[2] != cfg.dim:
        raise ValueError(
            f"initial states must have shape ({cfg.N}, {cfg.dim}) or ({cfg.N}, trials, {cfg.dim}),"
            f" got {np.shape(x0)}"
        )
    return x


def simulate(cfg: NCSConfig, policy: SchedulingPolicy, x0, horizon: int) -> Trace:
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    if policy.N != cfg.N:
        raise ValueError(f"policy is for {policy.N} plants, config has {cfg.N}")
    x = _as_batch(cfg, x0)
    masks = policy.stable_masks(horizon + 1)
    out = np.empty((horizon + 1, cfg.N, x.shape[1], cfg.dim))
    div = np.zeros((cfg.N, x.shape[1]), dtype=bool)
    for k, p in enumerate(cfg.plants):
        X, d = kernels.propagate(p.A_s, p.A_u, masks[:horizon, k].astype(np.uint8), x[k], GUARD)
        out[:, k] = X
        div[k] = d
    return Trace(out, div, masks)


def uniform_initial_states(cfg: NCSConfig, trials: int, seed: int, box: float = 10.0) -> np.ndarray:
    """(N, trials, d) states uniform on [-box, box]^d from ``default_rng(seed)``."""
    rng = np.random.default_rng(seed)
    return rng.uniform(-box, box, size=(cfg.N, trials, cfg.dim))


def _quad(P: np.ndarray, X: np.ndarray) -> np.ndarray:
    return np.einsum("...i,ij,...j->...", X, P, X)


@dataclass
class CertificateCheck:
    decay_checks: int
    decay_violations: int
    switch_checks: int
    switch_violations: int
    worst_ratio: float
    tol: float

    @property
    def ok(self) -> bool:
        return self.decay_violations == 0 and self.switch_violations == 0


def verify_certificates(
    cfg: NCSConfig,
    policy: SchedulingPolicy,
    certs: Sequence[ModeCertificate],
    trace: Trace,
    tol: float = 1e-9,
) -> CertificateCheck:
    """Check the per-step decay and per-switch comparability inequalities.

    ``worst_ratio`` is the largest observed value/bound (≤ 1 + tol when
    everything holds).
    """
    f1 = f1v = f2 = f2v = 0
    worst = 0.0
    T = trace.horizon
    for k, c in enumerate(certs):
        live = ~trace.diverged[k]
        X = trace.states[:, k][:, live]
        modes = trace.masks[: T + 1, k]
        Vs, Vu = _quad(c.P_s, X), _quad(c.P_u, X)
        if T:
            cur = np.where(modes[:T, None], Vs[:-1], Vu[:-1])
            nxt = np.where(modes[:T, None], Vs[1:], Vu[1:])
            lam = np.where(modes[:T], c.lambda_s, c.lambda_u)[:, None]
            bound = lam * cur
            f1 += bound.size
            f1v += int(np.count_nonzero(nxt > bound * (1 + tol)))
            pos = bound > 0
            if pos.any():
                worst = max(worst, float(np.max(nxt[pos] / bound[pos])))
        sw = np.flatnonzero(modes[1:] != modes[:-1]) + 1
        for tau in sw:
            if modes[tau]:
                new, old, mu = Vs[tau], Vu[tau], c.mu_us
            else:
                new, old, mu = Vu[tau], Vs[tau], c.mu_su
            bound = mu * old
            f2 += bound.size
            f2v += int(np.count_nonzero(new > bound * (1 + tol)))
            pos = bound > 0
            if pos.any():
                worst = max(worst, float(np.max(new[pos] / bound[pos])))
    return CertificateCheck(f1, f1v, f2, f2v, worst, tol)


@dataclass
class CertificateTrace:
    """Running dwell totals, switch counts and ln ψ, each (horizon + 1, N)."""

    D_s: np.ndarray
    D_u: np.ndarray
    N_su: np.ndarray
    N_us: np.ndarray
    log_psi: np.ndarray

    @property
    def psi(self) -> np.ndarray:
        return np.exp(self.log_psi)


def certificate_trace(
    certs: Sequence[ModeScalars], policy: SchedulingPolicy, horizon: int
) -> CertificateTrace:
    masks = policy.stable_masks(horizon + 1)
    N = len(certs)
    if masks.shape[1] != N:
        raise ValueError(f"expected {masks.shape[1]} certificates, got {N}")
    ls = np.array([math.log(c.lambda_s) for c in certs])
    lu = np.array([math.log(c.lambda_u) for c in certs])
    lsu = np.array([math.log(c.mu_su) for c in certs])
    lus = np.array([math.log(c.mu_us) for c in certs])
    st = masks[:horizon].astype(int)
    z = np.zeros((1, N), dtype=int)
    D_s = np.vstack([z, np.cumsum(st, axis=0)])
    D_u = np.arange(horizon + 1)[:, None] - D_s
    prev, cur = masks[:-1], masks[1:]
    su = np.vstack([z, np.cumsum(prev & ~cur, axis=0)])
    us = np.vstack([z, np.cumsum(~prev & cur, axis=0)])
    # Accumulate term by term so the period sum follows the same arithmetic as Ξ.
    inc = np.where(masks[:horizon], ls, lu)
    inc = inc + np.where(prev & ~cur, lsu, 0.0) + np.where(~prev & cur, lus, 0.0)
    log_psi = np.vstack([np.zeros((1, N)), np.cumsum(inc, axis=0)])
    return CertificateTrace(D_s, D_u, su, us, log_psi)


def log_psi(certs: Sequence[ModeScalars], policy: SchedulingPolicy, i: int, t: int) -> float:
    return float(certificate_trace(certs, policy, t).log_psi[t, i - 1])


def psi(certs: Sequence[ModeScalars], policy: SchedulingPolicy, i: int, t: int) -> float:
    return math.exp(log_psi(certs, policy, i, t))


def envelope_constant(c: ModeCertificate) -> float:
    ss, su = symmetric_spectrum(c.P_s), symmetric_spectrum(c.P_u)
    return math.sqrt(max(ss.lambda_max, su.lambda_max) / min(ss.lambda_min, su.lambda_min))


@dataclass
class EnvelopeReport:
    c: np.ndarray
    lyapunov_slack: np.ndarray
    norm_slack: np.ndarray
    violations: int
    tol: float

    @property
    def ok(self) -> bool:
        return self.violations == 0


def envelope_check(
    cfg: NCSConfig,
    certs: Sequence[ModeCertificate],
    policy: SchedulingPolicy,
    trace: Trace,
    tol: float = 1e-6,
) -> EnvelopeReport:
    """V_{σ(t)}(x(t)) ≤ ψ(t) V_{σ(0)}(x(0)) and ‖x(t)‖ ≤ c √ψ(t) ‖x(0)‖.

    Slacks are the smallest log(bound / value) seen per plant, +inf when
    every state is zero.
    """
    ct = certificate_trace(certs, policy, trace.horizon)
    N = len(certs)
    cs = np.array([envelope_constant(c) for c in certs])
    vslack = np.full(N, np.inf)
    nslack = np.full(N, np.inf)
    bad = 0
    ltol = math.log1p(tol)
    with np.errstate(divide="ignore"):
        for k, c in enumerate(certs):
            live = ~trace.diverged[k]
            X = trace.states[:, k][:, live]
            modes = trace.masks[: trace.horizon + 1, k][:, None]
            V = np.where(modes, _quad(c.P_s, X), _quad(c.P_u, X))
            nz = V[0] > 0
            if not nz.any():
                continue
            lp = ct.log_psi[:, k][:, None]
            s1 = lp + np.log(V[0][nz]) - np.log(V[:, nz])
            nrm = np.linalg.norm(X[:, nz], axis=-1)
            s2 = math.log(cs[k]) + 0.5 * lp + np.log(nrm[0]) - np.log(nrm)
            vslack[k] = float(np.min(s1))
            nslack[k] = float(np.min(s2))
            bad += int(np.count_nonzero(s1 < -ltol) + np.count_nonzero(s2 < -ltol))
    return EnvelopeReport(cs, vslack, nslack, bad, tol)


def classify_gas(trace: Trace, window: int, decay_factor: float = 0.5) -> list[str]:
    """Per-plant verdict from the first and last ``window`` samples."""
    if window < 1 or trace.horizon + 1 < 2 * window:
        raise ValueError(f"need horizon + 1 >= 2 * window, got {trace.horizon} and {window}")
    if not 0 < decay_factor < 1:
        raise ValueError("decay_factor must lie in (0, 1)")
    norms = trace.norms()
    out = []
    for k in range(trace.N):
        first = float(np.max(norms[:window, k]))
        last = float(np.max(norms[-window:, k]))
        if trace.diverged[k].any() or (last > 0 and last >= first / decay_factor):
            out.append(DIVERGING)
        elif last <= decay_factor * first:
            out.append(CONVERGING)
        else:
            out.append(INCONCLUSIVE)
    return out


def monodromy(cfg: NCSConfig, policy: SchedulingPolicy, i: int) -> np.ndarray:
    """State map of plant i over one repetition of the policy's periodic part."""
    if policy.period == 0:
        raise ValueError("a finite schedule has no period")
    p = cfg.plants[i - 1]
    Phi = np.eye(cfg.dim)
    for s, d in policy.slots[policy.prefix :]:
        a = p.A_s if i in s else p.A_u
        Phi = np.linalg.matrix_power(a, d) @ Phi
    return Phi


def monodromy_radius(cfg: NCSConfig, policy: SchedulingPolicy, i: int) -> float:
    return spectral_radius(monodromy(cfg, policy, i))


def write_trace_csv(trace: Trace, fh: TextIO, trial: int = 0, full_states: bool = True) -> None:
    """Rows ``t, plant, norm[, x1..xd]`` for one trial."""
    d = trace.states.shape[-1]
    w = csv.writer(fh, lineterminator="\n")
    head = ["t", "plant", "norm"] + ([f"x{j + 1}" for j in range(d)] if full_states else [])
    w.writerow(head)
    norms = trace.norms()
    for t in range(trace.horizon + 1):
        for k in range(trace.N):
            row = [t, k + 1, repr(float(norms[t, k, trial]))]
            if full_states:
                row += [repr(float(v)) for v in trace.states[t, k, trial]]
            w.writerow(row)
