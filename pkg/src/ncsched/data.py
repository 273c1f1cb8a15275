"""Reference plant sets and published scalar values used by tests and ``reproduce``."""
from __future__ import annotations

import itertools

import numpy as np

from .certificates import ModeScalars
from .plants import NCSConfig, build_config

LQR_Q = 5.0 * np.eye(2)
LQR_R = np.eye(1)

# Five second-order plants sharing a two-slot channel.
FIVE_A = [
    [[1.0310, 0.9725], [-0.4311, 0.6219]],
    [[0.8375, 1.0187], [-0.8959, 0.7188]],
    [[1.2571, -1.0259], [1.7171, -0.6001]],
    [[0.7569, 0.9926], [-0.1978, -1.6647]],
    [[0.5294, -1.6098], [-0.8860, 0.1875]],
]
FIVE_B = [[[1], [0]], [[0], [1]], [[1], [0]], [[1], [1]], [[0], [1]]]
FIVE_K = [
    [[-0.9869, -0.7541]],
    [[0.4978, -1.0887]],
    [[-0.7247, 0.8152]],
    [[-0.0933, 0.8329]],
    [[0.9852, -0.6016]],
]
FIVE_OPEN_MAGNITUDES = [
    (1.0298, 1.0298),
    (1.2307, 1.2307),
    (1.0036, 1.0036),
    (0.6729, 1.5807),
    (1.5649, 0.8480),
]
FIVE_CLOSED_MAGNITUDES = [
    (0.3487, 0.3487),
    (0.3095, 0.3095),
    (0.2056, 0.2056),
    (0.0826, 0.2508),
    (0.3085, 0.1932),
]
FIVE_M = 2

# (λ_s, λ_u, μ_su, μ_us) per plant, as published for the five-plant design.
FIVE_SCALARS = [
    ModeScalars(0.1360, 1.2346, 2.8452, 1.3232),
    ModeScalars(0.0720, 1.2346, 1.5681, 1.3509),
    ModeScalars(0.0715, 1.2346, 1.9025, 1.3046),
    ModeScalars(0.1757, 2.7778, 3.0854, 1.1665),
    ModeScalars(0.2430, 2.7778, 3.4664, 1.1576),
]

# Vertex k (1-based) is the k-th 2-subset of {1..5} in lexicographic order.
FIVE_VERTICES = list(itertools.combinations(range(1, 6), 2))


def vbar(k: int) -> tuple[int, int]:
    return FIVE_VERTICES[k - 1]


FIVE_CYCLE = [vbar(5), vbar(4), vbar(10)]
FIVE_T = (4, 3, 5)
FIVE_XI = (-2.7629, -8.0877, -7.9572, -0.2626, -5.8414)

COMPARISON_CYCLES = [
    ([vbar(5), vbar(3), vbar(9)], (2, 7, 8), (-10.5325, -1.3503, -23.9963, -0.67556, -0.73315)),
    ([vbar(2), vbar(6), vbar(7)], (3, 8, 9), (-1.0769, -43.3456, -3.4224, -0.37122, -0.10453)),
    ([vbar(8), vbar(9), vbar(1)], (8, 9, 3), (-1.0769, -3.5599, -43.3057, -0.37122, -0.10453)),
]

ROUND_ROBIN_GROUPS = [(1, 2), (2, 3), (4, 5)]

# Three-plant toy with uniform scalars on the cycle ({1,2}, {1,3}).
TOY_SCALARS = [ModeScalars(0.25, 1.1, 1.1, 1.2)] * 3
TOY_CYCLE = [(1, 2), (1, 3)]
TOY_T = (5, 4)
TOY_XI_PUBLISHED = (-1.3863, -6.2726, -4.791)
TOY_XI_RECOMPUTED_1 = -12.4766

# Three plants for the uniform-dwell sufficient constructions.
THREE_A = [
    [[0.2, 0.7], [1.6, 0.1]],
    [[1.0, 0.1], [0.1, 1.0]],
    [[1.2, 0.2], [0.1, 0.9]],
]
THREE_B = [[[1], [0]], [[0], [1]], [[1], [0]]]
THREE_K = [[[-0.2752, -0.6705]], [[-0.9137, -0.9505]], [[-1.0757, -0.4839]]]
THREE_SCALARS = [
    ModeScalars(0.2787, 1.5625, 4.1786, 1.5338),
    ModeScalars(0.0859, 1.2346, 23.5578, 1.9130),
    ModeScalars(0.2147, 2.0408, 3.6524, 2.5238),
]
THREE_SINGLE_SLOT_VALUES = (0.3850, 2.0331, 0.1118)
THREE_SINGLE_SLOT_T = 20
THREE_SINGLE_SLOT_XI = (-6.0596, -36.85, -0.0154)
THREE_HALF_V0 = (1, 2)
THREE_HALF_V1 = (2, 3)
THREE_HALF_T = 5
THREE_HALF_XI = (-2.2990, -24.5457, -1.9047)
THREE_HALF_UNEVEN_T = (5, 4)
THREE_HALF_UNEVEN_XI = (-2.7452, -22.0911, -0.3662)

# Large-scale runs: (N, |V| as printed, cycle length n).
SCALE_ROWS = [
    (100, 1.73e13, 61),
    (200, 2.24e16, 104),
    (500, 2.45e20, 345),
    (700, 7.3e21, 532),
    (1000, 2.63e23, 822),
]
SCALE_M = 10


def five_plant_config(gains: str = "published") -> NCSConfig:
    """The five-plant NCS with either the published gains or fresh LQR gains."""
    if gains == "published":
        K = FIVE_K
    elif gains == "lqr":
        from .plants import design_lqr_gains

        K = design_lqr_gains(FIVE_A, FIVE_B, LQR_Q, LQR_R)
    else:
        raise ValueError(f"unknown gain source {gains!r}")
    return build_config(FIVE_A, FIVE_B, K, FIVE_M)


def three_plant_config(M: int = 1) -> NCSConfig:
    return build_config(THREE_A, THREE_B, THREE_K, M)
