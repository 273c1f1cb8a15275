import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ncsched import data
from ncsched.certificates import (
    DesignGrid,
    ModeCertificate,
    ModeScalars,
    build_certificate_table,
    compute_mu,
    estimate_lambda_s,
    grid_steps,
    lambda_grid_stable,
    lambda_grid_unstable,
    solve_mode_lmi,
)
from ncsched.plants import PlantSpec

from conftest import random_schur, random_spd


def test_grid_sizes():
    assert grid_steps(0.1) == 9
    assert grid_steps(0.3) == 3
    assert grid_steps(1e-4) == 9999
    g = DesignGrid(0.25, 0.2)
    assert np.allclose(lambda_grid_stable(g), [0.25, 0.5, 0.75])
    etas, lam = lambda_grid_unstable(np.diag([2.0, 0.5]), g)
    # η ρ < 1 keeps η = 0.2, 0.4
    assert np.allclose(etas, [0.2, 0.4])
    assert np.allclose(lam, 1 / np.array([0.04, 0.16]))


@given(st.integers(0, 10_000), st.floats(0.05, 3.0))
def test_lmi_solution_satisfies_constraints(seed, lam):
    rng = np.random.default_rng(seed)
    a = random_schur(rng, 3, rng.uniform(0.1, 1.5))
    sol = solve_mode_lmi(a, lam, DesignGrid(kappa_min=1e-12))
    rho = np.max(np.abs(np.linalg.eigvals(a)))
    if rho >= math.sqrt(lam) * (1 - 1e-9):
        assert sol is None
        return
    if sol is None:  # conditioning below kappa_min
        return
    ev = np.linalg.eigvalsh(sol.P)
    assert ev[-1] == pytest.approx(1.0)
    assert ev[0] == pytest.approx(sol.kappa)
    res = a.T @ sol.P @ a - lam * sol.P
    assert np.linalg.eigvalsh(res)[-1] <= 1e-10


def test_lmi_kappa_filter():
    a = np.diag([0.99, 0.0])
    assert solve_mode_lmi(a, 1.0, DesignGrid(kappa_min=0.5)) is None
    assert solve_mode_lmi(a, 1.0, DesignGrid(kappa_min=1e-3)) is not None


def test_lmi_rejects_nonpositive_lambda():
    with pytest.raises(ValueError):
        solve_mode_lmi(np.eye(2) * 0.5, 0.0, DesignGrid())


@given(st.integers(0, 10_000))
def test_mu_is_tight_bound_between_quadratics(seed):
    rng = np.random.default_rng(seed)
    pp, pq = random_spd(rng, 3), random_spd(rng, 3)
    mu = compute_mu(pp, pq)
    x = rng.normal(size=(4000, 3))
    vq = np.einsum("ij,jk,ik->i", x, pq, x)
    vp = np.einsum("ij,jk,ik->i", x, pp, x)
    assert np.all(vq <= mu * vp * (1 + 1e-10))


def test_estimate_lambda_s():
    a = np.array([[0.5, 0.1], [0.0, 0.3]])
    q = np.eye(2)
    p = np.linalg.solve(np.eye(4) - np.kron(a.T, a.T), q.ravel()).reshape(2, 2)
    lam = estimate_lambda_s(p, q)
    x = np.random.default_rng(0).normal(size=(500, 2))
    v0 = np.einsum("ij,jk,ik->i", x, p, x)
    y = x @ a.T
    v1 = np.einsum("ij,jk,ik->i", y, p, y)
    assert np.all(v1 <= lam * v0 + 1e-12)
    with pytest.raises(ValueError):
        estimate_lambda_s(p, -q)


def test_mode_scalars_validation():
    s = ModeScalars(0.5, 2.0, 3.0, 1.0)
    assert s.stable_weight == pytest.approx(math.log(0.5))
    assert s.unstable_weight == pytest.approx(math.log(2.0))
    assert s.log_mu_us == 0.0
    for bad in [(1.0, 2.0, 1.0, 1.0), (0.5, 0.9, 1.0, 1.0), (0.5, 2.0, 0.5, 1.0)]:
        with pytest.raises(ValueError):
            ModeScalars(*bad)


def test_certificate_table_entries_are_valid():
    plant = data.five_plant_config().plants[0]
    tb = build_certificate_table(plant, DesignGrid(0.05, 0.1))
    assert not tb.empty
    assert np.all(np.diff(tb.lambda_s) > 0) and np.all(np.diff(tb.lambda_u) > 0)
    a, b, lsu, lus = tb.coefficients()
    assert a.size == len(tb)
    for flat in (0, len(tb) // 2, len(tb) - 1):
        c = tb.certificate(flat)
        assert isinstance(c, ModeCertificate)
        assert a[flat] == pytest.approx(-math.log(c.lambda_s))
        assert b[flat] == pytest.approx(math.log(c.lambda_u))
        assert lsu[flat] == pytest.approx(math.log(c.mu_su))
        assert lus[flat] == pytest.approx(math.log(c.mu_us))
        rs, ru = c.lmi_residuals(plant.A_s, plant.A_u)
        assert rs <= 1e-9 and ru <= 1e-9
        assert c.kappa >= 1e-8
        assert c.mu_su == pytest.approx(compute_mu(c.P_s, c.P_u))
    # grid order: λ_s ascending first, then λ_u
    c0, c1 = tb.certificate(0), tb.certificate(1)
    assert c0.lambda_s == c1.lambda_s and c0.lambda_u < c1.lambda_u


def test_table_excludes_infeasible_grid_points():
    plant = PlantSpec(1, np.diag([1.5, 0.2]), [[1.0], [0.0]], [[-1.3, 0.0]])
    tb = build_certificate_table(plant, DesignGrid(0.05, 0.05))
    # closed loop eigenvalues 0.2 and 0.2 → λ_s must exceed 0.04
    assert tb.lambda_s.min() > 0.04
    # open loop ρ = 1.5 → λ_u > 2.25
    assert tb.lambda_u.min() > 2.25


def test_coarse_grid_gives_empty_table():
    plant = PlantSpec(1, np.diag([1.5, 0.2]), [[1.0], [0.0]], [[-0.6, 0.0]])
    # closed loop ρ = 0.9 → λ_s > 0.81, grid {0.5} misses it
    tb = build_certificate_table(plant, DesignGrid(0.5, 0.1))
    assert tb.empty
