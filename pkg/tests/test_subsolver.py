import numpy as np
import pytest
import scipy.sparse as sp

from scsf.errors import MaxIterationsError
from scsf.subsolver import ConvexSubproblem, convex_subsolve

from oracles import subproblem_grid_oracle


def quadratic_with_equalities():
    rng = np.random.default_rng(3)
    n = 5
    B = rng.standard_normal((n, n))
    Q = B @ B.T + np.eye(n)
    c = rng.standard_normal(n)
    E = rng.standard_normal((2, n))
    g = rng.standard_normal(2)
    return Q, c, E, g


def test_pure_quadratic_matches_kkt_closed_form():
    Q, c, E, g = quadratic_with_equalities()
    prob = ConvexSubproblem(
        n_vars=5,
        quad=sp.csr_matrix(Q),
        lin=c,
        eq_coeffs=sp.csr_matrix(E),
        eq_rhs=g,
    )
    res = convex_subsolve(prob, tol=1e-9)
    K = np.block([[Q, E.T], [E, np.zeros((2, 2))]])
    rhs = np.concatenate([-c, g])
    expect = np.linalg.solve(K, rhs)[:5]
    assert res.converged
    assert np.allclose(res.x, expect, atol=1e-9)


def test_unconstrained_quadratic():
    rng = np.random.default_rng(4)
    B = rng.standard_normal((4, 4))
    Q = B @ B.T + np.eye(4)
    c = rng.standard_normal(4)
    prob = ConvexSubproblem(n_vars=4, quad=sp.csr_matrix(Q), lin=c)
    res = convex_subsolve(prob, tol=1e-9)
    assert np.allclose(res.x, np.linalg.solve(Q, -c), atol=1e-9)


def test_pinball_median():
    # minimize sum rho_0.5(b_j - x) over samples {1, 2, 100} -> median 2
    A = sp.csr_matrix(np.ones((3, 1)))
    prob = ConvexSubproblem(
        n_vars=1,
        pl_coeffs=A,
        pl_offsets=np.array([1.0, 2.0, 100.0]),
        pl_weights=np.ones(3),
        pl_taus=np.full(3, 0.5),
    )
    res = convex_subsolve(prob, tol=1e-8, max_iters=100000)
    assert res.converged
    assert res.x[0] == pytest.approx(2.0, abs=1e-4)
    assert res.objective == pytest.approx(prob.objective(np.array([2.0])), abs=1e-6)


def test_weighted_quantile():
    # tau = 0.8 quantile of {0..9} with unit weights sits at 8 (within the
    # flat optimum segment [8, 8]); objective must match the exact value
    vals = np.arange(10.0)
    prob = ConvexSubproblem(
        n_vars=1,
        pl_coeffs=sp.csr_matrix(np.ones((10, 1))),
        pl_offsets=vals,
        pl_weights=np.ones(10),
        pl_taus=np.full(10, 0.8),
    )
    res = convex_subsolve(prob, tol=1e-8, max_iters=100000)
    exact = prob.objective(np.array([8.0]))
    assert res.objective == pytest.approx(exact, abs=1e-5)


def _random_instance(rng):
    d = int(rng.integers(1, 7))
    n_pl = int(rng.integers(1, 13))
    B = rng.standard_normal((d, d))
    Q = B @ B.T + (0.1 + rng.random()) * np.eye(d)
    c = rng.standard_normal(d)
    A = rng.standard_normal((n_pl, d))
    b = 3.0 * rng.standard_normal(n_pl)
    w = 0.1 + 2.0 * rng.random(n_pl)
    taus = 0.05 + 0.9 * rng.random(n_pl)
    kwargs = dict(
        n_vars=d,
        quad=sp.csr_matrix(Q),
        lin=c,
        pl_coeffs=sp.csr_matrix(A),
        pl_offsets=b,
        pl_weights=w,
        pl_taus=taus,
    )
    if d >= 3 and rng.random() < 0.4:
        q = int(rng.integers(1, d - 1))
        E = rng.standard_normal((q, d))
        g = rng.standard_normal(q)
        kwargs["eq_coeffs"] = sp.csr_matrix(E)
        kwargs["eq_rhs"] = g
    return ConvexSubproblem(**kwargs)


@pytest.mark.parametrize("seed", range(24))
def test_random_instances_match_grid_oracle(seed):
    rng = np.random.default_rng(1000 + seed)
    prob = _random_instance(rng)
    res = convex_subsolve(prob, tol=1e-7, max_iters=200000)
    _, f_star = subproblem_grid_oracle(prob)
    scale = max(1.0, abs(f_star))
    assert res.objective <= f_star + 1e-6 * scale
    assert res.objective >= f_star - 1e-6 * scale
    if prob.n_eq():
        viol = prob.eq_coeffs @ res.x - prob.eq_rhs
        assert np.max(np.abs(viol)) < 1e-8


def test_warm_start_reuses_state():
    rng = np.random.default_rng(9)
    prob = _random_instance(rng)
    res1 = convex_subsolve(prob, tol=1e-8, max_iters=200000)
    res2 = convex_subsolve(prob, tol=1e-8, max_iters=200000, warm=res1.warm)
    assert res2.iterations <= max(res1.iterations // 2, 2)
    assert res2.objective == pytest.approx(res1.objective, rel=1e-6, abs=1e-9)


def test_determinism():
    rng = np.random.default_rng(11)
    prob = _random_instance(rng)
    r1 = convex_subsolve(prob, tol=1e-8)
    r2 = convex_subsolve(prob, tol=1e-8)
    assert np.array_equal(r1.x, r2.x)
    assert r1.objective == r2.objective


def test_strict_raises_on_budget():
    # a zero-iteration budget cannot converge or certify anything
    rng = np.random.default_rng(12)
    prob = _random_instance(rng)
    with pytest.raises(MaxIterationsError):
        convex_subsolve(prob, tol=1e-12, max_iters=0, strict=True)
