import importlib

import numpy as np
import pytest

from ncsched import _kernels_py, kernels

from conftest import random_schur, random_spd

try:
    compiled = importlib.import_module("ncsched._kernels")
except ImportError:  # extension not built
    compiled = None

needs_ext = pytest.mark.skipif(compiled is None, reason="compiled extension not built")


def test_backend_name():
    assert kernels.BACKEND in ("cython", "python")


def test_lyap_batch_solves_scaled_equation(rng):
    a = random_schur(rng, 3, 0.8)
    lams = np.array([0.7, 0.8, 0.9, 1.2])
    ps, kappa = _kernels_py.lyap_scaled_batch(a, lams)
    for p, lam, k in zip(ps, lams, kappa):
        if np.isnan(k):
            continue
        scaled = a / np.sqrt(lam)
        q = p - scaled.T @ p @ scaled
        # P ∝ solution with Q = I, normalised to unit top eigenvalue
        ev = np.linalg.eigvalsh(p)
        assert ev[-1] == pytest.approx(1.0)
        assert ev[0] == pytest.approx(k)
        assert np.allclose(q, q[0, 0] * np.eye(3), atol=1e-10)


@needs_ext
def test_lyap_batch_parity(rng):
    for d in (2, 3, 5):
        a = random_schur(rng, d, 0.9)
        lams = np.linspace(0.5, 3.0, 40)
        p1, k1 = compiled.lyap_scaled_batch(a, lams)
        p2, k2 = _kernels_py.lyap_scaled_batch(a, lams)
        ok = np.isfinite(k2)
        assert np.array_equal(np.isfinite(k1), ok)
        assert np.allclose(k1[ok], k2[ok], rtol=1e-8, atol=1e-12)
        assert np.allclose(p1[ok], p2[ok], atol=1e-8)


@needs_ext
def test_mu_table_parity(rng):
    ps = np.array([random_spd(rng, 3) for _ in range(5)])
    pu = np.array([random_spd(rng, 3) for _ in range(4)])
    s1, u1 = compiled.mu_table(ps, pu)
    s2, u2 = _kernels_py.mu_table(ps, pu)
    assert np.allclose(s1, s2, rtol=1e-10)
    assert np.allclose(u1, u2, rtol=1e-10)


def test_mu_table_definition(rng):
    ps = np.array([random_spd(rng, 2) for _ in range(2)])
    pu = np.array([random_spd(rng, 2) for _ in range(3)])
    su, us = kernels.mu_table(ps, pu)
    for j in range(2):
        for k in range(3):
            assert su[j, k] == pytest.approx(np.max(np.linalg.eigvals(pu[k] @ np.linalg.inv(ps[j])).real))
            assert us[j, k] == pytest.approx(np.max(np.linalg.eigvals(ps[j] @ np.linalg.inv(pu[k])).real))


@pytest.mark.parametrize("impl", ["py", "ext"])
def test_propagate_matches_matrix_powers(rng, impl):
    mod = _kernels_py if impl == "py" else compiled
    if mod is None:
        pytest.skip("compiled extension not built")
    a_s = random_schur(rng, 2, 0.5)
    a_u = rng.normal(size=(2, 2))
    modes = rng.integers(0, 2, size=25).astype(np.uint8)
    x0 = rng.normal(size=(7, 2))
    out, div = mod.propagate(a_s, a_u, modes, x0, 1e12)
    x = x0.copy()
    for t, m in enumerate(modes):
        x = x @ (a_s if m else a_u).T
        assert np.allclose(out[t + 1], x)
    assert not div.any()


@pytest.mark.parametrize("impl", ["py", "ext"])
def test_propagate_guard_freezes_diverged_rows(impl):
    mod = _kernels_py if impl == "py" else compiled
    if mod is None:
        pytest.skip("compiled extension not built")
    a_u = 10.0 * np.eye(2)
    x0 = np.array([[1.0, 0.0], [0.0, 0.0]])
    out, div = mod.propagate(np.eye(2) * 0.5, a_u, np.zeros(20, np.uint8), x0, 1e6)
    assert div.tolist() == [True, False]
    assert np.all(np.isfinite(out))
    assert np.linalg.norm(out[-1, 0]) <= 1e8


def test_environment_forces_fallback():
    import subprocess
    import sys

    code = "import ncsched, ncsched.kernels as k; print(ncsched.BACKEND, k.propagate.__module__)"
    env = {"NCSCHED_PURE_PYTHON": "1", "PATH": ""}
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.split() == ["python", "ncsched._kernels_py"]
