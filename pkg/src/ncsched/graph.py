"""Implicit complete digraph whose vertices are channel allocations.

A vertex is identified by the sorted set of plants that hold a channel
slot (and therefore run in closed loop).  Nothing is ever materialised
except on explicit request below a size cap.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .certificates import ModeScalars

ENUMERATION_CAP = 10**6


def vertex_count(N: int, M: int) -> int:
    if not 0 < M < N:
        raise ValueError(f"need 0 < M < N, got N={N}, M={M}")
    return math.comb(N, M)


@dataclass(frozen=True, order=True)
class VertexLabel:
    N: int
    stable_set: tuple[int, ...]

    def __post_init__(self):
        s = tuple(sorted(int(i) for i in self.stable_set))
        if len(set(s)) != len(s):
            raise ValueError(f"repeated plant index in {self.stable_set}")
        if not 0 < len(s) < self.N:
            raise ValueError(f"stable set size must lie in (0, {self.N}), got {len(s)}")
        if s[0] < 1 or s[-1] > self.N:
            raise ValueError(f"plant index out of 1..{self.N} in {self.stable_set}")
        object.__setattr__(self, "stable_set", s)

    @property
    def M(self) -> int:
        return len(self.stable_set)

    def is_stable(self, i: int) -> bool:
        return i in self.stable_set

    def mode(self, i: int) -> str:
        if not 1 <= i <= self.N:
            raise ValueError(f"plant {i} out of range 1..{self.N}")
        return "s" if self.is_stable(i) else "u"

    def mask(self) -> np.ndarray:
        m = np.zeros(self.N, dtype=bool)
        m[np.asarray(self.stable_set) - 1] = True
        return m

    def __str__(self) -> str:
        return "{" + ",".join(map(str, self.stable_set)) + "}"


def enumerate_vertices(N: int, M: int, cap: int = ENUMERATION_CAP) -> list[VertexLabel]:
    """All labels in lexicographic order of their stable sets."""
    count = vertex_count(N, M)
    if count > cap:
        raise ValueError(f"C({N},{M}) = {count} vertices exceeds the enumeration cap {cap}")
    return [VertexLabel(N, c) for c in itertools.combinations(range(1, N + 1), M)]


def _check_certs(N: int, certs: Sequence[ModeScalars]) -> None:
    if len(certs) != N:
        raise ValueError(f"expected {N} certificates, got {len(certs)}")


def vertex_weight(v: VertexLabel, certs: Sequence[ModeScalars]) -> np.ndarray:
    _check_certs(v.N, certs)
    return np.array(
        [c.stable_weight if s else c.unstable_weight for c, s in zip(certs, v.mask())]
    )


def edge_weight(u: VertexLabel, v: VertexLabel, certs: Sequence[ModeScalars]) -> np.ndarray:
    if u == v:
        raise ValueError("self-loops are not edges of the allocation graph")
    if u.N != v.N:
        raise ValueError("labels belong to different graphs")
    _check_certs(u.N, certs)
    mu, mv = u.mask(), v.mask()
    out = np.zeros(u.N)
    for k, c in enumerate(certs):
        if mu[k] and not mv[k]:
            out[k] = c.log_mu_su
        elif mv[k] and not mu[k]:
            out[k] = c.log_mu_us
    return out
