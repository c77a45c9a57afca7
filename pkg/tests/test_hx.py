import numpy as np
import pytest
import scipy.sparse as sp

from hxjump.assembly import assemble_system
from hxjump.hx import additive_bound, build_for_system, build_hx, measure
from hxjump.linalg import NotSPDError, dense_generalized_spectrum, pcg
from hxjump.probe import ProbeOperators, empirical_decomposition

from conftest import case_coeffs, partition_of, system_of


def _const(geo="single", n=4):
    _, part, _ = partition_of(geo, n)
    one = (1.0,) * part.n_domains
    return system_of(geo, n, one, one)


def test_apply_matches_definition():
    s = system_of("half_cube", 4, (1.0, 1.0), (1.0, 1e4))
    b = build_for_system(s)
    r = np.random.default_rng(0).standard_normal(s.n)
    lap = s.vector_laplacian.toarray()
    lb = (s.G.T @ s.A @ s.G).toarray()
    expect = r / s.A.diagonal() + s.Pi @ np.linalg.solve(lap, s.Pi.T @ r) + s.G @ np.linalg.solve(lb, s.G.T @ r)
    assert np.allclose(b @ r, expect, rtol=1e-10, atol=0)
    assert np.allclose(sum(b.terms(r)), b.apply(r), rtol=1e-14)
    block = np.column_stack([r, 2 * r])
    assert np.allclose(b.apply(block)[:, 1], 2 * b.apply(r), rtol=1e-12)


def test_adjoint_consistency():
    s = _const("checkerboard", 4)
    rng = np.random.default_rng(1)
    w, r = rng.standard_normal(s.Pi.shape[1]), rng.standard_normal(s.n)
    assert abs((s.Pi @ w) @ r - w @ (s.Pi.T @ r)) <= 1e-12 * np.linalg.norm(w) * np.linalg.norm(r)


@pytest.mark.parametrize("geo,case,value", [("single", "const", 0), ("half_cube", "a", 8),
                                            ("checkerboard", "checkerboard", 1e-6)])
def test_symmetric_positive(geo, case, value):
    _, part, _ = partition_of(geo, 4)
    a, bt = case_coeffs(case, value, part.n_domains)
    s = system_of(geo, 4, a, bt)
    b = build_for_system(s)
    rng = np.random.default_rng(2)
    # jump coefficients make |B| large, so the tolerance is taken relative to it
    norm_b = max(np.linalg.norm(b @ e) for e in np.eye(s.n)[:: max(1, s.n // 40)])
    for _ in range(5):
        x, y = rng.standard_normal(s.n), rng.standard_normal(s.n)
        bx, by = b @ x, b @ y
        assert abs(bx @ y - x @ by) <= 1e-10 * norm_b * np.linalg.norm(x) * np.linalg.norm(y)
        assert x @ bx > 0


def test_constant_coefficient_cond_mesh_independent():
    c4 = measure(_const("single", 4).A, build_for_system(_const("single", 4)), method="dense").cond
    s8 = _const("single", 8)
    c8 = measure(s8.A, build_for_system(s8), method="dense").cond
    assert max(c4, c8) / min(c4, c8) < 2


def test_oracle_preconditioner():
    s = _const("single", 2)
    rep = measure(s.A, np.linalg.inv(s.A.toarray()), method="dense")
    assert abs(rep.cond - 1) <= 1e-8


def test_dense_matches_lanczos_at_n4():
    s = _const("single", 4)
    b = build_for_system(s)
    d, l = measure(s.A, b, method="dense"), measure(s.A, b, method="lanczos")
    assert abs(l.lambda_min / d.lambda_min - 1) < 0.01 and abs(l.lambda_max / d.lambda_max - 1) < 0.01
    assert l.iterations > 0 and l.method == "lanczos"


def test_checkerboard_reduced_cond_finite():
    s = system_of("checkerboard", 4, *case_coeffs("checkerboard", 1e-6))
    rep = measure(s.A, build_for_system(s), n_s=1, method="dense")
    assert np.isfinite(rep.reduced_cond) and rep.reduced_cond < rep.cond
    assert np.all(rep.eigenvalues > 0)


def test_global_scaling_invariance():
    a, bt = case_coeffs("a", 4)
    s1 = system_of("half_cube", 2, a, bt)
    s2 = system_of("half_cube", 2, tuple(7.0 * x for x in a), tuple(7.0 * x for x in bt))
    e1 = measure(s1.A, build_for_system(s1), method="dense").eigenvalues
    e2 = measure(s2.A, build_for_system(s2), method="dense").eigenvalues
    assert np.allclose(e1, e2, rtol=1e-8)


def test_additive_bound_dominates_inverse_form():
    # any split gives an upper bound for v' B^-1 v; the optimal probe split too
    for geo, case, value in [("half_cube", "a", -8), ("checkerboard", "checkerboard", 1e-4)]:
        _, part, _ = partition_of(geo, 4)
        s = system_of(geo, 4, *case_coeffs(case, value, part.n_domains))
        b = build_for_system(s)
        binv = np.linalg.inv(b.apply(np.eye(s.n)))
        ops = ProbeOperators.build(s)
        rng = np.random.default_rng(3)
        for _ in range(3):
            v = rng.standard_normal(s.n)
            dec = empirical_decomposition(v, s, ops)
            bound = additive_bound(s, v, dec.p, dec.w)
            assert bound["total"] >= v @ binv @ v * (1 - 1e-8)
            zero = additive_bound(s, v, np.zeros_like(dec.p), np.zeros_like(dec.w))
            assert zero["total"] >= v @ binv @ v * (1 - 1e-8)


def test_build_validation():
    s = _const("single", 2)
    with pytest.raises(ValueError):
        build_hx(s.A, s.vector_laplacian, s.G[:-1], s.Pi)
    with pytest.raises(NotSPDError):
        build_hx(s.A, -s.vector_laplacian, s.G, s.Pi)


def test_pcg_with_hx_converges():
    s = _const("single", 4)
    b = build_for_system(s)
    rhs = np.random.default_rng(0).standard_normal(s.n)
    res = pcg(s.A, b, rhs, tol=1e-8)
    assert res.converged and res.iterations <= 80
    assert np.linalg.norm(s.A @ res.x - rhs) <= 1e-6 * np.linalg.norm(rhs)


def test_reduced_cond_stable_while_cond_grows():
    reps = {}
    for eps in (1e-2, 1e-6):
        s = system_of("checkerboard", 4, *case_coeffs("checkerboard", eps))
        reps[eps] = measure(s.A, build_for_system(s), n_s=1, method="dense")
    k_ratio = reps[1e-6].reduced_cond / reps[1e-2].reduced_cond
    assert 1 / 3 <= k_ratio <= 3
    assert reps[1e-6].cond >= 10 * reps[1e-2].cond
