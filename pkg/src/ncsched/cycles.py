"""Cycles on the allocation graph, their Ξ sums, and T-factor search."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .certificates import ModeScalars
from .graph import VertexLabel, edge_weight, vertex_weight

MARGIN = 1e-12
DFS_MAX_VERTICES = 6
DFS_NODE_BUDGET = 200_000
T_MAX_DEFAULT = 100


@dataclass(frozen=True)
class Cycle:
    """Ordered distinct vertices; the closing edge back to the first is implicit."""

    vertices: tuple[VertexLabel, ...]

    def __post_init__(self):
        vs = tuple(self.vertices)
        if len(vs) < 2:
            raise ValueError(f"a cycle needs at least 2 vertices, got {len(vs)}")
        if len(set(vs)) != len(vs):
            raise ValueError("cycle vertices must be pairwise distinct")
        if len({(v.N, v.M) for v in vs}) != 1:
            raise ValueError("all vertices must share N and M")
        object.__setattr__(self, "vertices", vs)

    @classmethod
    def from_sets(cls, N: int, sets) -> "Cycle":
        return cls(tuple(VertexLabel(N, tuple(s)) for s in sets))

    @property
    def N(self) -> int:
        return self.vertices[0].N

    @property
    def M(self) -> int:
        return self.vertices[0].M

    @property
    def n(self) -> int:
        return len(self.vertices)

    def __len__(self) -> int:
        return self.n

    def __iter__(self):
        return iter(self.vertices)

    def stable_matrix(self) -> np.ndarray:
        """Boolean (n, N) array, True where plant i is closed-loop at vertex j."""
        return np.vstack([v.mask() for v in self.vertices])

    def sets(self) -> list[list[int]]:
        return [list(v.stable_set) for v in self.vertices]

    def __str__(self) -> str:
        return "(" + ", ".join(str(v) for v in self.vertices) + ")"


def as_tfactors(T, n: int) -> tuple[int, ...]:
    t = tuple(int(x) for x in T)
    if len(t) != n:
        raise ValueError(f"expected {n} T-factors, got {len(t)}")
    if any(x < 1 for x in t) or any(x != y for x, y in zip(t, T)):
        raise ValueError(f"T-factors must be positive integers, got {tuple(T)}")
    return t


class TransitionCounts(NamedTuple):
    su: int
    us: int


def transition_counts(W: Cycle, i: int) -> TransitionCounts:
    modes = [v.is_stable(i) for v in W.vertices]
    su = us = 0
    for j, cur in enumerate(modes):
        nxt = modes[(j + 1) % len(modes)]
        if cur and not nxt:
            su += 1
        elif nxt and not cur:
            us += 1
    return TransitionCounts(su, us)


def _count_arrays(W: Cycle) -> tuple[np.ndarray, np.ndarray]:
    st = W.stable_matrix()
    nxt = np.roll(st, -1, axis=0)
    return (st & ~nxt).sum(axis=0), (~st & nxt).sum(axis=0)


def is_candidate_contractive(W: Cycle, N: int | None = None) -> bool:
    N = W.N if N is None else N
    covered = set()
    for v in W.vertices:
        covered.update(v.stable_set)
    return covered >= set(range(1, N + 1))


def xi(W: Cycle, T, certs: Sequence[ModeScalars]) -> np.ndarray:
    """Per-plant weighted cycle sum, vertex terms times dwell plus edge terms."""
    T = as_tfactors(T, W.n)
    total = np.zeros(W.N)
    vs = W.vertices
    for j, v in enumerate(vs):
        total += vertex_weight(v, certs) * T[j]
        total += edge_weight(v, vs[(j + 1) % len(vs)], certs)
    return total


def _coeffs(certs: Sequence[ModeScalars]):
    a = np.array([abs(math.log(c.lambda_s)) for c in certs])
    b = np.array([abs(math.log(c.lambda_u)) for c in certs])
    lsu = np.array([math.log(c.mu_su) for c in certs])
    lus = np.array([math.log(c.mu_us) for c in certs])
    return a, b, lsu, lus


def xi_grouped(W: Cycle, T, certs: Sequence[ModeScalars]) -> np.ndarray:
    """Same quantity grouped as stable time, unstable time and switch counts."""
    T = np.asarray(as_tfactors(T, W.n), dtype=float)
    st = W.stable_matrix()
    S = T @ st
    U = T.sum() - S
    nsu, nus = _count_arrays(W)
    a, b, lsu, lus = _coeffs(certs)
    return -a * S + b * U + lsu * nsu + lus * nus


class Contractivity(NamedTuple):
    ok: bool
    xi: np.ndarray
    margins: np.ndarray


def is_T_contractive(W: Cycle, T, certs: Sequence[ModeScalars]) -> Contractivity:
    x = xi(W, T, certs)
    return Contractivity(bool(np.all(x < -MARGIN)), x, -x)


# ---------------------------------------------------------------------------
# T-factor search
#
# For a fixed cycle, plant i with option o has
#     Ξ_i(T) = -a_o S_i(T) + b_o U_i(T) + e_o
# where S_i/U_i are the stable/unstable dwell totals and e_o collects the
# switching terms.  Several options per plant arise when searching over
# the whole certificate grid at once.


def pareto_options(a: np.ndarray, b: np.ndarray, e: np.ndarray) -> np.ndarray:
    """Indices of options not dominated in (max a, min b, min e), ascending."""
    order = np.lexsort((e, -a, b))
    a_o, b_o, e_o = a[order], b[order], e[order]
    keep = np.zeros(order.size, dtype=bool)
    kept_a = np.empty(0)
    kept_e = np.empty(0)
    bounds = np.flatnonzero(np.r_[True, b_o[1:] != b_o[:-1], True])
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        ga, ge = a_o[lo:hi], e_o[lo:hi]
        prev_min = np.r_[np.inf, np.minimum.accumulate(ge)[:-1]]
        ok = ge < prev_min
        if kept_a.size:
            srt = np.argsort(kept_a)
            sa = kept_a[srt]
            suffix = np.minimum.accumulate(kept_e[srt][::-1])[::-1]
            pos = np.searchsorted(sa, ga, side="left")
            best = np.where(pos < sa.size, suffix[np.minimum(pos, sa.size - 1)], np.inf)
            ok &= ge < best
        keep[lo:hi] = ok
        kept_a = np.r_[kept_a, ga[ok]]
        kept_e = np.r_[kept_e, ge[ok]]
    return np.sort(order[keep])


class _Problem:
    """Padded per-plant option arrays for a fixed cycle."""

    def __init__(self, st: np.ndarray, a, b, e):
        self.st = st.astype(float)
        self.n, self.N = st.shape
        width = max(x.size for x in a)
        self.a = np.zeros((self.N, width))
        self.b = np.zeros((self.N, width))
        self.e = np.full((self.N, width), np.inf)
        for i in range(self.N):
            k = a[i].size
            self.a[i, :k], self.b[i, :k], self.e[i, :k] = a[i], b[i], e[i]

    def best(self, S, U) -> np.ndarray:
        """min over options of Ξ_i; S, U broadcast as (..., N)."""
        S = np.asarray(S, dtype=float)[..., None]
        U = np.asarray(U, dtype=float)[..., None]
        return np.min(-self.a * S + self.b * U + self.e, axis=-1)

    def totals(self, T) -> tuple[np.ndarray, np.ndarray]:
        T = np.asarray(T, dtype=float)
        S = T @ self.st
        return S, T.sum() - S

    def worst(self, T) -> float:
        return float(np.max(self.best(*self.totals(T))))

    def feasible(self, T) -> bool:
        return self.worst(T) < -MARGIN


class _BudgetExceeded(Exception):
    pass


def _dfs(pb: _Problem, T_max: int, budget: int):
    n = pb.n
    st = pb.st
    s_suf = np.vstack([st[k:].sum(axis=0) for k in range(n + 1)])
    u_suf = np.arange(n, -1, -1)[:, None] - s_suf
    ts = np.arange(1, T_max + 1, dtype=float)[:, None]
    T = [0] * n
    nodes = 0

    def rec(k, S, U):
        nonlocal nodes
        nodes += T_max
        if nodes > budget:
            raise _BudgetExceeded
        S2 = S + ts * st[k]
        U2 = U + ts * (1.0 - st[k])
        lb = pb.best(S2 + T_max * s_suf[k + 1], U2 + u_suf[k + 1])
        for idx in np.flatnonzero(np.all(lb < -MARGIN, axis=1)):
            T[k] = idx + 1
            if k + 1 == n or rec(k + 1, S2[idx], U2[idx]):
                return True
        return False

    zero = np.zeros(pb.N)
    return tuple(int(t) for t in T) if rec(0, zero, zero) else None


def _descend(pb: _Problem, T: list[int]) -> list[int]:
    for j in range(len(T)):
        while T[j] > 1:
            T[j] -= 1
            if not pb.feasible(T):
                T[j] += 1
                break
    return T


def _lp_guess(pb: _Problem, T_max: int):
    from scipy.optimize import linprog

    n, N = pb.n, pb.N
    T = np.full(n, float(T_max))
    for _ in range(5):
        S, U = pb.totals(T)
        vals = -pb.a * S[:, None] + pb.b * U[:, None] + pb.e
        pick = np.argmin(vals, axis=1)
        a = pb.a[np.arange(N), pick]
        b = pb.b[np.arange(N), pick]
        e = pb.e[np.arange(N), pick]
        coef = np.where(pb.st.T > 0, -a[:, None], b[:, None])
        A_ub = np.hstack([coef, np.ones((N, 1))])
        res = linprog(
            np.r_[np.zeros(n), -1.0],
            A_ub=A_ub,
            b_ub=-e,
            bounds=[(1, T_max)] * n + [(None, 1.0)],
            method="highs",
        )
        if not res.success or res.x[-1] <= 0:
            return None
        new = res.x[:n]
        if np.allclose(new, T):
            break
        T = new
    return T


def _repair(pb: _Problem, T: list[int], T_max: int, max_steps: int) -> list[int] | None:
    for _ in range(max_steps):
        if pb.feasible(T):
            return T
        best_j, best_val = None, pb.worst(T)
        for j in range(len(T)):
            for d in (1, -1):
                if not 1 <= T[j] + d <= T_max:
                    continue
                T[j] += d
                val = pb.worst(T)
                T[j] -= d
                if val < best_val - 1e-15:
                    best_j, best_val = (j, d), val
        if best_j is None:
            return None
        T[best_j[0]] += best_j[1]
    return T if pb.feasible(T) else None


def _heuristic(pb: _Problem, T_max: int):
    for t in range(1, T_max + 1):
        if pb.feasible([t] * pb.n):
            return tuple(int(x) for x in _descend(pb, [t] * pb.n))
    guess = _lp_guess(pb, T_max)
    if guess is None:
        return None
    T = [int(min(T_max, max(1, round(x)))) for x in guess]
    T = _repair(pb, T, T_max, max_steps=10 * pb.n * T_max)
    return None if T is None else tuple(int(t) for t in _descend(pb, T))


def _search(pb: _Problem, T_max: int, node_budget: int):
    if pb.n <= DFS_MAX_VERTICES:
        try:
            return _dfs(pb, T_max, node_budget)
        except _BudgetExceeded:
            pass
    return _heuristic(pb, T_max)


class OptionSearch(NamedTuple):
    T: tuple[int, ...]
    choice: np.ndarray
    xi: np.ndarray


def search_T_factors(
    W: Cycle,
    options: Sequence[tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]],
    T_max: int = T_MAX_DEFAULT,
    node_budget: int = DFS_NODE_BUDGET,
) -> OptionSearch | None:
    """T-factors for which every plant has at least one admissible option.

    ``options[i]`` holds plant i's (|ln λ_s|, |ln λ_u|, ln μ_su, ln μ_us)
    arrays in preference order.  The chosen option per plant is the first
    one in that order whose Ξ_i is negative at the returned T.
    """
    if T_max < 1:
        raise ValueError("T_max must be at least 1")
    if len(options) != W.N:
        raise ValueError(f"expected options for {W.N} plants, got {len(options)}")
    if not is_candidate_contractive(W):
        return None
    nsu, nus = _count_arrays(W)
    red_a, red_b, red_e, full_e = [], [], [], []
    for i, (a, b, lsu, lus) in enumerate(options):
        a, b = np.asarray(a, float), np.asarray(b, float)
        e = np.asarray(lsu, float) * nsu[i] + np.asarray(lus, float) * nus[i]
        if a.size == 0:
            return None
        keep = pareto_options(a, b, e)
        red_a.append(a[keep])
        red_b.append(b[keep])
        red_e.append(e[keep])
        full_e.append(e)
    pb = _Problem(W.stable_matrix(), red_a, red_b, red_e)
    T = _search(pb, T_max, node_budget)
    if T is None:
        return None
    S, U = pb.totals(T)
    choice = np.empty(W.N, dtype=int)
    vals = np.empty(W.N)
    for i, (a, b, _, _) in enumerate(options):
        x = -np.asarray(a, float) * S[i] + np.asarray(b, float) * U[i] + full_e[i]
        k = int(np.argmax(x < -MARGIN))
        choice[i], vals[i] = k, x[k]
    return OptionSearch(T, choice, vals)


def dwell_relaxation_bound(W: Cycle, options) -> float:
    """Optimum of min over real dwell fractions of max_i (−a_i S_i + b_i U_i).

    Uses each plant's most favourable rates and drops the switching terms,
    so a nonnegative value proves that no T-factors of any size exist for
    these options (switching terms are never negative).
    """
    from scipy.optimize import linprog

    st = W.stable_matrix().astype(float)
    n, N = st.shape
    a = np.array([np.max(np.asarray(o[0], float)) for o in options])
    b = np.array([np.min(np.asarray(o[1], float)) for o in options])
    coef = np.where(st.T > 0, -a[:, None], b[:, None])
    res = linprog(
        np.r_[np.zeros(n), 1.0],
        A_ub=np.hstack([coef, -np.ones((N, 1))]),
        b_ub=np.zeros(N),
        A_eq=np.r_[np.ones(n), 0.0][None, :],
        b_eq=[1.0],
        bounds=[(0, None)] * n + [(None, None)],
        method="highs",
    )
    return float(res.fun)


def find_T_factors(
    W: Cycle, certs: Sequence[ModeScalars], T_max: int = T_MAX_DEFAULT
) -> tuple[int, ...] | None:
    """Lexicographically first T in [1, T_max]^n making W T-contractive.

    Exact for cycles of up to six vertices; longer cycles fall back to a
    uniform-dwell scan, an LP relaxation and coordinate descent, which
    return a feasible but not necessarily lexicographically first T.
    """
    a, b, lsu, lus = _coeffs(certs)
    opts = [(a[i : i + 1], b[i : i + 1], lsu[i : i + 1], lus[i : i + 1]) for i in range(W.N)]
    found = search_T_factors(W, opts, T_max)
    return None if found is None else found.T


# ---------------------------------------------------------------------------
# Sufficient constructions


class ConditionReport(NamedTuple):
    values: np.ndarray
    ok: bool

    def failing(self) -> list[int]:
        return [i + 1 for i, v in enumerate(self.values) if not v > 0]


def check_prop3(certs: Sequence[ModeScalars], N: int) -> ConditionReport:
    """Single-slot condition |ln λ_s| − (N−1)|ln λ_u| > 0 per plant."""
    a, b, _, _ = _coeffs(certs)
    vals = a - (N - 1) * b
    return ConditionReport(vals, bool(np.all(vals > 0)))


def check_prop4(certs: Sequence[ModeScalars], N: int, M: int) -> ConditionReport:
    """Half-capacity condition |ln λ_s| − |ln λ_u| > 0 per plant (needs 2M ≥ N)."""
    if 2 * M < N:
        raise ValueError(f"needs M >= N/2, got N={N}, M={M}")
    a, b, _, _ = _coeffs(certs)
    vals = a - b
    return ConditionReport(vals, bool(np.all(vals > 0)))


def _smallest_uniform(slope: np.ndarray, const: np.ndarray) -> int:
    """Smallest integer t ≥ 1 with slope·t + const < -MARGIN for every entry."""
    t = 1
    for s, c in zip(slope, const):
        if c + s < -MARGIN:
            continue
        k = max(1, int(math.floor((c + MARGIN) / -s)))
        while s * k + c >= -MARGIN:
            k += 1
        t = max(t, k)
    return t


def _verified(W: Cycle, T, certs) -> tuple[Cycle, tuple[int, ...]]:
    res = is_T_contractive(W, T, certs)
    if not res.ok:
        raise ArithmeticError(f"constructed cycle {W} is not T-contractive at T={T}: {res.xi}")
    return W, tuple(T)


def construct_prop3_cycle(certs: Sequence[ModeScalars], N: int, T: int | None = None):
    """Rotation cycle giving the slot to one plant at a time, uniform dwell.

    ``T`` defaults to the smallest uniform dwell meeting the sufficient
    bound; an explicit value is checked against the same bound.
    """
    rep = check_prop3(certs, N)
    if not rep.ok:
        raise ValueError(f"single-slot condition fails for plants {rep.failing()}")
    a, b, lsu, lus = _coeffs(certs)
    t_min = _smallest_uniform(-a + (N - 1) * b, lsu + lus)
    t = t_min if T is None else int(T)
    if t < t_min:
        raise ValueError(f"uniform dwell {t} is below the sufficient bound {t_min}")
    W = Cycle.from_sets(N, [(i,) for i in range(1, N + 1)])
    return _verified(W, (t,) * N, certs)


def prop4_partner(N: int, M: int, v0_stable_set, filler: str = "highest") -> tuple[int, ...]:
    """Second vertex: every plant missing from v0 plus fillers taken from v0."""
    v0 = sorted(set(v0_stable_set))
    rest = [i for i in range(1, N + 1) if i not in v0]
    need = M - len(rest)
    if need < 0:
        raise ValueError(f"v0 leaves {len(rest)} plants uncovered, more than M={M}")
    if filler == "highest":
        extra = v0[len(v0) - need :] if need else []
    elif filler == "lowest":
        extra = v0[:need]
    else:
        raise ValueError(f"unknown filler rule {filler!r}")
    return tuple(sorted(rest + extra))


def construct_prop4_cycle(
    certs: Sequence[ModeScalars],
    N: int,
    M: int,
    v0_stable_set,
    T: int | None = None,
    filler: str = "highest",
):
    rep = check_prop4(certs, N, M)
    if not rep.ok:
        raise ValueError(f"half-capacity condition fails for plants {rep.failing()}")
    v0 = VertexLabel(N, tuple(v0_stable_set))
    if v0.M != M:
        raise ValueError(f"v0 must hold {M} plants, got {v0.M}")
    v1 = VertexLabel(N, prop4_partner(N, M, v0.stable_set, filler))
    a, b, lsu, lus = _coeffs(certs)
    t_min = _smallest_uniform(-a + b, lsu + lus)
    t = t_min if T is None else int(T)
    if t < t_min:
        raise ValueError(f"uniform dwell {t} is below the sufficient bound {t_min}")
    return _verified(Cycle((v0, v1)), (t, t), certs)


# ---------------------------------------------------------------------------
# Random candidate cycles


def random_subset(rng: np.random.Generator, N: int, M: int) -> tuple[int, ...]:
    """M distinct plants by a partial Fisher–Yates shuffle of 1..N.

    Step k swaps position k with a uniform position in [k, N) drawn by
    ``rng.integers(k, N)``; the first M entries, sorted, are returned.
    """
    pool = list(range(1, N + 1))
    for k in range(M):
        j = int(rng.integers(k, N))
        pool[k], pool[j] = pool[j], pool[k]
    return tuple(sorted(pool[:M]))


def generate_candidate_cycle(N: int, M: int, seed: int) -> Cycle:
    """Draw random allocations until every plant has been stabilised once.

    Repeated draws are skipped, so the first occurrence order is kept.
    """
    if not 0 < M < N:
        raise ValueError(f"need 0 < M < N, got N={N}, M={M}")
    rng = np.random.default_rng(seed)
    seen: dict[tuple[int, ...], None] = {}
    covered: set[int] = set()
    while len(covered) < N:
        s = random_subset(rng, N, M)
        seen.setdefault(s, None)
        covered.update(s)
    return Cycle.from_sets(N, list(seen))
