import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from hxjump.linalg import (NotSPDError, cholesky_factor, dense_generalized_spectrum, lanczos_tridiagonal,
                           pcg, reduced_condition, solve)


def test_identity_solve():
    b = np.arange(6.0)
    assert np.array_equal(solve(cholesky_factor(sp.identity(6)), b), b)


def test_diagonal_solve():
    x = solve(cholesky_factor(sp.diags(np.arange(1.0, 6.0))), np.ones(5))
    assert np.allclose(x, [1, 1 / 2, 1 / 3, 1 / 4, 1 / 5], rtol=0, atol=1e-15)


def test_random_spd_residual():
    rng = np.random.default_rng(0)
    a = rng.standard_normal((50, 50))
    m = a.T @ a + np.eye(50)
    b = rng.standard_normal(50)
    x = solve(cholesky_factor(m), b)
    assert np.linalg.norm(m @ x - b) <= 1e-10 * np.linalg.norm(b)


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=5, max_value=60), st.integers(min_value=0, max_value=10 ** 6))
def test_sparse_spd_residual(n, seed):
    rng = np.random.default_rng(seed)
    r = sp.random(n, n, density=0.1, random_state=rng)
    m = (r @ r.T + sp.identity(n)).tocsr()
    b = rng.standard_normal(n)
    x = solve(cholesky_factor(m), b)
    assert np.linalg.norm(m @ x - b) <= 1e-10 * np.linalg.norm(b)


def test_not_spd_reports_index():
    with pytest.raises(NotSPDError) as err:
        cholesky_factor(sp.diags([1.0, 2.0, -1.0, 3.0]))
    assert err.value.index == 2


def test_ordering_deterministic():
    rng = np.random.default_rng(4)
    r = sp.random(40, 40, density=0.1, random_state=rng)
    m = (r @ r.T + sp.identity(40)).tocsr()
    f1, f2 = cholesky_factor(m), cholesky_factor(m)
    assert np.array_equal(f1.perm, f2.perm) and np.array_equal(f1.bands, f2.bands)


def test_pcg_trivial_cases():
    assert pcg(sp.identity(5), None, np.ones(5)).iterations == 1
    a = sp.diags([1.0, 10.0, 100.0])
    res = pcg(a, sp.diags([1.0, 0.1, 0.01]), np.ones(3))
    assert res.iterations == 1 and res.converged
    res = pcg(a, None, np.zeros(3))
    assert res.iterations == 0 and np.all(res.x == 0)


def test_ritz_extremes_match_dense():
    a = sp.diags(np.arange(1.0, 21.0))
    res = pcg(a, None, np.ones(20), tol=1e-14, maxit=20)
    ritz = res.ritz_values()
    assert abs(ritz[0] - 1) <= 0.01 and abs(ritz[-1] - 20) <= 0.2


def test_lanczos_matrix_reproduces_operator():
    # Ritz values interlace the spectrum of BA; a full Krylov run recovers it
    rng = np.random.default_rng(2)
    q = rng.standard_normal((12, 12))
    a = q @ q.T + 12 * np.eye(12)
    bd = np.diag(1 / np.diag(a))
    res = pcg(a, bd, rng.standard_normal(12), tol=1e-30, maxit=12)
    half = np.sqrt(bd)
    dense = np.linalg.eigvalsh(half @ a @ half)
    ritz = np.linalg.eigvalsh(lanczos_tridiagonal(res.alphas, res.betas))
    assert len(ritz) == 12
    assert np.allclose(ritz, dense, rtol=1e-8)
    short = pcg(a, bd, rng.standard_normal(12), tol=1e-30, maxit=5).ritz_values()
    assert short.min() >= dense.min() - 1e-8 and short.max() <= dense.max() + 1e-8


def test_energy_error_monotone():
    rng = np.random.default_rng(7)
    q = rng.standard_normal((30, 30))
    a = q @ q.T + np.eye(30)
    b = rng.standard_normal(30)
    exact = np.linalg.solve(a, b)
    errors = []
    for k in range(1, 31):
        x = pcg(a, None, b, tol=1e-30, maxit=k).x
        e = x - exact
        errors.append(e @ a @ e)
    assert all(e2 <= e1 * (1 + 1e-10) + 1e-20 for e1, e2 in zip(errors, errors[1:]))


def test_breakdown_on_indefinite():
    res = pcg(sp.diags([1.0, -1.0]), None, np.array([1.0, 1.0]))
    assert not res.converged and res.breakdown


def test_dense_spectrum_oracles():
    rng = np.random.default_rng(1)
    q = rng.standard_normal((20, 20))
    a = q @ q.T + np.eye(20)
    rep = dense_generalized_spectrum(a, np.linalg.inv(a))
    assert np.allclose(rep.eigenvalues, 1, atol=1e-10)
    rep = dense_generalized_spectrum(a, np.eye(20))
    assert np.allclose(rep.eigenvalues, np.linalg.eigvalsh(a), rtol=1e-10)
    assert np.all(np.diff(rep.eigenvalues) >= 0)


def test_dense_spectrum_rejects_asymmetric():
    a = np.eye(3)
    b = np.array([[1.0, 0.5, 0], [0, 1, 0], [0, 0, 1]])
    with pytest.raises(ValueError):
        dense_generalized_spectrum(a, b)


def test_reduced_condition():
    ev = np.array([0.001, 1.0, 2.0])
    assert reduced_condition(ev, 0) == pytest.approx(2000.0)
    assert reduced_condition(ev, 1) == 2.0
    with pytest.raises(ValueError):
        reduced_condition(ev, 3)
    rep = dense_generalized_spectrum(np.diag(ev))
    assert rep.cond == pytest.approx(rep.reduced_cond)
