"""Periodic channel schedules built from cycles, plus baselines and concatenations."""
from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .cycles import Cycle, as_tfactors
from .errors import PolicyFormatError

PERIODIC = "periodic"
CONCATENATED = "concatenated-static"


def _slot(N: int, M: int | None, s, dwell) -> tuple[tuple[int, ...], int]:
    ss = tuple(sorted(int(i) for i in s))
    if len(set(ss)) != len(ss):
        raise ValueError(f"slot {s} repeats a plant")
    if not ss or ss[0] < 1 or ss[-1] > N:
        raise ValueError(f"slot {s} has plants outside 1..{N}")
    if M is not None and len(ss) != M:
        raise ValueError(f"slot {s} holds {len(ss)} plants, expected {M}")
    d = int(dwell)
    if d != dwell or d < 1:
        raise ValueError(f"dwell must be a positive integer, got {dwell}")
    return ss, d


@dataclass(frozen=True)
class SchedulingPolicy:
    """Channel allocation over time.

    ``slots[:prefix]`` are played once, then ``slots[prefix:]`` repeat
    forever.  Periodic policies have ``prefix == 0``.  A concatenated policy
    whose tail is empty is finite.
    """

    N: int
    slots: tuple[tuple[tuple[int, ...], int], ...]
    kind: str = PERIODIC
    prefix: int = 0
    _starts: tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in (PERIODIC, CONCATENATED):
            raise ValueError(f"unknown policy kind {self.kind!r}")
        if not self.slots:
            raise ValueError("a policy needs at least one slot")
        M = len(self.slots[0][0])
        slots = tuple(_slot(self.N, M, s, d) for s, d in self.slots)
        if self.kind == PERIODIC:
            if len(slots) < 2:
                raise ValueError("a periodic policy needs at least two slots")
            if self.prefix != 0:
                raise ValueError("periodic policies have no prefix")
        elif not 0 <= self.prefix <= len(slots):
            raise ValueError("prefix out of range")
        object.__setattr__(self, "slots", slots)
        starts = [0]
        for _, d in slots:
            starts.append(starts[-1] + d)
        object.__setattr__(self, "_starts", tuple(starts))

    @property
    def M(self) -> int:
        return len(self.slots[0][0])

    @property
    def n(self) -> int:
        return len(self.slots)

    @property
    def prefix_length(self) -> int:
        return self._starts[self.prefix]

    @property
    def period(self) -> int:
        """Length of the repeating part (0 for a finite schedule)."""
        return self._starts[-1] - self.prefix_length

    @property
    def length(self) -> int | None:
        """Total length of a finite schedule, else None."""
        return self._starts[-1] if self.period == 0 else None

    def slot_index(self, t: int) -> int:
        if t < 0:
            raise ValueError("time must be nonnegative")
        total = self._starts[-1]
        if t >= total:
            if self.period == 0:
                raise IndexError(f"t={t} is beyond the finite schedule of length {total}")
            t = self.prefix_length + (t - self.prefix_length) % self.period
        return bisect.bisect_right(self._starts, t) - 1

    def gamma_at(self, t: int) -> tuple[int, ...]:
        return self.slots[self.slot_index(t)][0]

    def sigma_at(self, i: int, t: int) -> str:
        if not 1 <= i <= self.N:
            raise ValueError(f"plant {i} out of range 1..{self.N}")
        return "s" if i in self.gamma_at(t) else "u"

    def stable_masks(self, horizon: int) -> np.ndarray:
        """Boolean (horizon, N) array; row t marks plants closed-loop at time t."""
        masks = np.zeros((len(self.slots), self.N), dtype=bool)
        for j, (s, _) in enumerate(self.slots):
            masks[j, np.asarray(s) - 1] = True
        idx = [self.slot_index(t) for t in range(horizon)]
        return masks[idx] if horizon else np.zeros((0, self.N), dtype=bool)

    def stable_time(self, i: int) -> int:
        """Stable steps of plant i over one repetition of the tail."""
        return sum(d for s, d in self.slots[self.prefix :] if i in s)

    def table(self) -> list[tuple[int, int, tuple[int, ...]]]:
        """(t_start, t_end exclusive, stable set) for every stored slot."""
        return [(self._starts[j], self._starts[j + 1], s) for j, (s, _) in enumerate(self.slots)]


def build_policy(W: Cycle, T) -> SchedulingPolicy:
    T = as_tfactors(T, W.n)
    return SchedulingPolicy(W.N, tuple((v.stable_set, t) for v, t in zip(W.vertices, T)))


def gamma_at(p: SchedulingPolicy, t: int) -> tuple[int, ...]:
    return p.gamma_at(t)


def sigma_at(p: SchedulingPolicy, i: int, t: int) -> str:
    return p.sigma_at(i, t)


def round_robin(N: int, groups: Sequence[Sequence[int]], dwell: int = 1) -> SchedulingPolicy:
    groups = [tuple(g) for g in groups]
    sizes = {len(g) for g in groups}
    if len(sizes) != 1:
        raise ValueError(f"groups must share one size, got sizes {sorted(sizes)}")
    return SchedulingPolicy(N, tuple((g, dwell) for g in groups))


def concatenate(
    policies: Sequence[SchedulingPolicy], pattern: Sequence[int], tail: Sequence[int] | None = None
) -> SchedulingPolicy:
    """Play whole tail-repetitions of ``policies`` in ``pattern`` order.

    The policies named by ``tail`` then repeat forever; ``tail=None``
    repeats ``pattern`` itself and ``tail=()`` leaves the schedule finite.
    """
    if not pattern:
        raise ValueError("empty concatenation pattern")
    if not policies:
        raise ValueError("no policies to concatenate")
    N, M = policies[0].N, policies[0].M
    for p in policies:
        if (p.N, p.M) != (N, M):
            raise ValueError("all policies must share N and M")

    def body(seq):
        out = []
        for k in seq:
            if not 0 <= k < len(policies):
                raise ValueError(f"pattern index {k} out of range")
            out.extend(policies[k].slots[policies[k].prefix :])
        return out

    if tail is None:
        head, rep = [], body(pattern)
    else:
        head, rep = body(pattern), body(tail)
    return SchedulingPolicy(N, tuple(head + rep), kind=CONCATENATED, prefix=len(head))


# ---------------------------------------------------------------------------
# Text format: a header line then one "t_start t_end {i,j,...}" line per slot.


def serialize_policy(p: SchedulingPolicy) -> str:
    head = f"# period {p.period} N {p.N} M {p.M} kind {p.kind}"
    if p.kind == CONCATENATED:
        head += f" prefix {p.prefix}"
    lines = [head]
    for a, b, s in p.table():
        lines.append(f"{a} {b} {{{','.join(map(str, s))}}}")
    return "\n".join(lines) + "\n"


def parse_policy(text: str) -> SchedulingPolicy:
    rows = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not rows or not rows[0].startswith("#"):
        raise PolicyFormatError("missing policy header")
    tokens = rows[0].lstrip("#").split()
    if len(tokens) % 2:
        raise PolicyFormatError(f"malformed header: {rows[0]!r}")
    header = dict(zip(tokens[::2], tokens[1::2]))
    try:
        period, N, M = int(header["period"]), int(header["N"]), int(header["M"])
        kind = header["kind"]
        prefix = int(header.get("prefix", 0))
    except (KeyError, ValueError) as exc:
        raise PolicyFormatError(f"malformed header: {rows[0]!r}") from exc
    slots = []
    expect = 0
    for ln in rows[1:]:
        parts = ln.split(maxsplit=2)
        try:
            a, b = int(parts[0]), int(parts[1])
            body = parts[2].strip()
            if not (body.startswith("{") and body.endswith("}")):
                raise ValueError
            s = tuple(int(x) for x in body[1:-1].split(","))
        except (IndexError, ValueError) as exc:
            raise PolicyFormatError(f"malformed slot line: {ln!r}") from exc
        if a != expect or b <= a:
            raise PolicyFormatError(f"slot {ln!r} does not continue at t={expect}")
        slots.append((s, b - a))
        expect = b
    try:
        p = SchedulingPolicy(N, tuple(slots), kind=kind, prefix=prefix)
    except ValueError as exc:
        raise PolicyFormatError(str(exc)) from exc
    if p.M != M or p.period != period:
        raise PolicyFormatError(
            f"header says period {period}, M {M}; slots give period {p.period}, M {p.M}"
        )
    return p

