"""Compiled vs pure-Python kernel timings.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Each kernel runs on the same inputs under both backends; the report shows
the best wall time of ``--repeat`` runs and the speed-up, and checks that
the outputs agree.
"""
import argparse
import timeit

import numpy as np

from ncsched import _kernels_py

try:
    from ncsched import _kernels
except ImportError:
    _kernels = None


def _spd(rng, d):
    q, _ = np.linalg.qr(rng.normal(size=(d, d)))
    return (q * rng.uniform(0.1, 1.0, d)) @ q.T


def cases(rng):
    a = rng.normal(size=(2, 2))
    a *= 0.9 / np.max(np.abs(np.linalg.eigvals(a)))
    lams = np.linspace(0.82, 0.9999, 2000)
    ps = np.array([_spd(rng, 2) for _ in range(200)])
    pu = np.array([_spd(rng, 2) for _ in range(50)])
    a_u = rng.normal(size=(2, 2))
    modes = rng.integers(0, 2, size=200).astype(np.uint8)
    x0 = rng.uniform(-10, 10, size=(1000, 2))
    return {
        "lyap_scaled_batch (2000 λ, d=2)": ("lyap_scaled_batch", (a, lams)),
        "mu_table (200×50 pairs, d=2)": ("mu_table", (ps, pu)),
        "propagate (1000 trials × 200 steps)": ("propagate", (a, a_u, modes, x0, 1e12)),
    }


def _same(x, y) -> bool:
    if isinstance(x, tuple):
        return all(_same(a, b) for a, b in zip(x, y))
    x, y = np.asarray(x), np.asarray(y)
    if x.dtype == bool:
        return bool(np.array_equal(x, y))
    return bool(np.allclose(x, y, rtol=1e-8, atol=1e-10, equal_nan=True))


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    if _kernels is None:
        print("compiled extension not built; only the pure-Python timings are shown")
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':40s} {'python [s]':>11s} {'compiled [s]':>13s} {'speed-up':>9s}  agree")
    for label, (name, inputs) in cases(rng).items():
        py = getattr(_kernels_py, name)
        t_py = min(timeit.repeat(lambda: py(*inputs), number=1, repeat=args.repeat))
        if _kernels is None:
            print(f"{label:40s} {t_py:11.4f} {'-':>13s} {'-':>9s}  -")
            continue
        cy = getattr(_kernels, name)
        t_cy = min(timeit.repeat(lambda: cy(*inputs), number=1, repeat=args.repeat))
        agree = _same(py(*inputs), cy(*inputs))
        print(f"{label:40s} {t_py:11.4f} {t_cy:13.5f} {t_py / t_cy:8.1f}x  {agree}")


if __name__ == "__main__":
    main()
