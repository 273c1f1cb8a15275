import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given
from hypothesis import strategies as st

from ncsched import matops
from ncsched.errors import LinAlgError, NotPositiveDefiniteError, NotSchurError

from conftest import random_schur, random_spd

seeds = st.integers(0, 2**32 - 1)
dims = st.integers(1, 7)


def _match_spectra(got, want, tol):
    # greedy pairing is enough for well separated random spectra
    want = list(want)
    for z in got:
        k = int(np.argmin([abs(z - w) for w in want]))
        assert abs(z - want.pop(k)) <= tol * max(1.0, abs(z))


@given(seeds, dims)
def test_eigenvalues_are_roots_of_characteristic_polynomial(seed, d):
    a = np.random.default_rng(seed).normal(size=(d, d))
    got = matops.eigenvalues(a)
    assert got.shape == (d,)
    _match_spectra(got, np.roots(np.poly(a)) if d > 1 else [a[0, 0]], 1e-6)


def test_eigenvalues_of_companion_matrix():
    roots = np.array([0.9, -0.5, 0.3 + 0.4j, 0.3 - 0.4j, 0.1])
    c = np.real(sla.companion(np.poly(roots)))
    _match_spectra(matops.eigenvalues(c), roots, 1e-8)
    assert matops.spectral_radius(c) == pytest.approx(0.9, abs=1e-9)


def test_eigenvalues_of_rotation_and_defective_blocks():
    th = 0.7
    rot = 0.8 * np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
    ev = matops.eigenvalues(rot)
    assert np.allclose(np.abs(ev), 0.8)
    assert matops.spectral_radius([[2.0, 1.0], [0.0, 2.0]]) == pytest.approx(2.0)
    assert matops.spectral_radius(np.zeros((3, 3))) == 0.0


def test_is_schur_boundary():
    assert matops.is_schur(np.diag([0.5, -0.99]))
    assert not matops.is_schur(np.diag([0.5, 1.0]))
    assert not matops.is_schur(np.diag([1.0 - 1e-12, 0.2]))


@given(seeds, st.integers(1, 6))
def test_symmetric_spectrum_against_eigvalsh(seed, d):
    rng = np.random.default_rng(seed)
    s = rng.normal(size=(d, d))
    s = s + s.T
    lo, hi = matops.symmetric_spectrum(s)
    want = np.linalg.eigvalsh(s)
    assert lo == pytest.approx(want[0], abs=1e-9 * max(1, abs(want).max()))
    assert hi == pytest.approx(want[-1], abs=1e-9 * max(1, abs(want).max()))


def test_symmetric_rejects_asymmetric():
    with pytest.raises(LinAlgError):
        matops.symmetric_spectrum([[1.0, 2.0], [0.0, 1.0]])


@given(seeds, st.integers(1, 6))
def test_cholesky_reconstructs(seed, d):
    p = random_spd(np.random.default_rng(seed), d)
    low = matops.cholesky(p)
    assert np.allclose(np.triu(low, 1), 0.0)
    assert np.allclose(low @ low.T, p, atol=1e-10 * np.abs(p).max())
    assert np.allclose(low, np.linalg.cholesky(p), atol=1e-9)


def test_cholesky_rejects_indefinite():
    with pytest.raises(NotPositiveDefiniteError):
        matops.cholesky([[1.0, 2.0], [2.0, 1.0]])


@given(seeds, st.integers(1, 8))
def test_solve_linear_against_numpy(seed, n):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n, n)) + n * np.eye(n)
    b = rng.normal(size=n)
    assert np.allclose(matops.solve_linear(a, b), np.linalg.solve(a, b), atol=1e-10)


def test_solve_linear_singular():
    with pytest.raises(LinAlgError):
        matops.solve_linear([[1.0, 2.0], [2.0, 4.0]], [1.0, 1.0])


def test_as_matrix_validation():
    assert matops.as_matrix([1.0, 2.0]).shape == (1, 2)
    for bad in ([], [[np.nan]], np.zeros((2, 2, 2))):
        with pytest.raises(LinAlgError):
            matops.as_matrix(bad)


@given(seeds, st.integers(2, 6))
def test_lyapunov_residual_and_series(seed, d):
    rng = np.random.default_rng(seed)
    a = random_schur(rng, d)
    q = random_spd(rng, d, 5.0)
    p = matops.solve_discrete_lyapunov(a, q)
    assert np.max(np.abs(a.T @ p @ a - p + q)) <= 1e-10 * max(1.0, np.abs(p).max())
    # truncated series sum_k (Aᵀ)^k Q A^k
    s, term = np.zeros_like(q), q.copy()
    for _ in range(2000):
        s += term
        term = a.T @ term @ a
        if np.abs(term).max() < 1e-18:
            break
    assert np.allclose(p, s, atol=1e-8 * max(1.0, np.abs(s).max()))


def test_lyapunov_against_scipy(rng):
    a = random_schur(rng, 4, 0.9)
    q = np.eye(4)
    want = sla.solve_discrete_lyapunov(a.T, q)
    assert np.allclose(matops.solve_discrete_lyapunov(a, q), want, atol=1e-9)


def test_lyapunov_requires_schur():
    with pytest.raises(NotSchurError):
        matops.solve_discrete_lyapunov(np.diag([1.2, 0.1]), np.eye(2))


@given(seeds, st.integers(1, 5))
def test_generalized_eigenvalue_against_scipy(seed, d):
    rng = np.random.default_rng(seed)
    pq, pp = random_spd(rng, d), random_spd(rng, d)
    want = sla.eigh(pq, pp, eigvals_only=True)[-1]
    assert matops.max_generalized_eigenvalue(pq, pp) == pytest.approx(want, rel=1e-9)


def test_generalized_eigenvalue_is_max_rayleigh_quotient(rng):
    pq, pp = random_spd(rng, 3), random_spd(rng, 3)
    x = rng.normal(size=(20000, 3))
    ratios = np.einsum("ij,jk,ik->i", x, pq, x) / np.einsum("ij,jk,ik->i", x, pp, x)
    mu = matops.max_generalized_eigenvalue(pq, pp)
    assert ratios.max() <= mu * (1 + 1e-12)
    assert ratios.max() >= mu * (1 - 1e-2)


def test_dare_against_scipy(rng):
    for _ in range(10):
        a = rng.normal(size=(3, 3))
        b = rng.normal(size=(3, 1))
        q, r = 2.0 * np.eye(3), np.eye(1)
        k = matops.solve_dare_lqr(a, b, q, r)
        p = sla.solve_discrete_are(a, b, q, r)
        want = -np.linalg.solve(r + b.T @ p @ b, b.T @ p @ a)
        assert np.allclose(k, want, atol=1e-8)
        assert matops.is_schur(a + b @ k)


def test_dare_rejects_bad_weights():
    with pytest.raises(NotPositiveDefiniteError):
        matops.solve_dare_lqr(np.eye(2), np.ones((2, 1)), -np.eye(2), np.eye(1))
