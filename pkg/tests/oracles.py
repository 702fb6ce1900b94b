"""Independent reference implementations used to check the solver path.

These deliberately avoid the package's own numerics: the grid minimizer is a
zooming dense-grid search, penalties are evaluated with explicit operators or
scalar loops, and rank-k errors come from plain power iteration.
"""

import numpy as np
import scipy.linalg


def pinball_scalar(r, tau):
    if r >= 0:
        return tau * r
    return (tau - 1.0) * r


def objective_scalar_loops(data, mask, left, right, tau, mu_l, mu_r, mu_y,
                           gamma, weights, night_rows):
    """Term-by-term objective via plain Python loops."""
    m, n = data.shape
    k = left.shape[1]
    total_pin = 0.0
    for t in range(m):
        if night_rows[t]:
            continue
        for i in range(n):
            if not mask[t, i]:
                continue
            pred = 0.0
            for j in range(k):
                pred += left[t, j] * right[j, i]
            total_pin += weights[i] * pinball_scalar(data[t, i] - pred, tau)
    sm_l = 0.0
    for j in range(k):
        for t in range(m - 2):
            d2 = left[t, j] - 2.0 * left[t + 1, j] + left[t + 2, j]
            sm_l += d2 * d2
    sm_r = 0.0
    for j in range(k):
        for i in range(n - 2):
            d2 = right[j, i] - 2.0 * right[j, i + 1] + right[j, i + 2]
            sm_r += d2 * d2
    yr = 0.0
    for j in range(k):
        for i in range(n - 365):
            d = right[j, i + 365] - gamma * right[j, i]
            yr += d * d
    return total_pin + mu_l * sm_l + mu_r * sm_r + mu_y * yr


def grid_minimize(fn, center, radius, target_shrink=1e-10):
    """Zooming dense-grid minimizer for convex functions, d <= 6.

    fn takes an (N, d) array and returns N objective values. Each round
    evaluates a dense grid over the current box, then re-centers on the best
    point with a two-cell margin, which is safe for convex objectives.
    """
    c = np.asarray(center, dtype=float).copy()
    d = c.size
    r = float(radius)
    pts = {1: 41, 2: 41, 3: 17, 4: 11, 5: 9, 6: 7}[d]
    shrink = 4.0 / (pts - 1)
    rounds = int(np.ceil(np.log(target_shrink) / np.log(shrink))) + 3

    best_x = c.copy()
    best_f = float(fn(c[None, :])[0])
    # several passes: a fresh zoom from the best point escapes the slow
    # corner-tracking that a single pass exhibits along tilted ridges
    for restart_scale in (1.0, 1e-3, 1e-6):
        c = best_x.copy()
        rr = r * restart_scale
        for _ in range(rounds):
            axes = [np.linspace(c[i] - rr, c[i] + rr, pts) for i in range(d)]
            mesh = np.meshgrid(*axes, indexing="ij")
            grid = np.stack([g.ravel() for g in mesh], axis=1)
            vals = fn(grid)
            j = int(np.argmin(vals))
            if vals[j] < best_f:
                best_f = float(vals[j])
                best_x = grid[j].copy()
            c = best_x.copy()
            rr *= shrink
    return best_x, best_f


def subproblem_grid_oracle(prob):
    """Minimize a ConvexSubproblem by dense-grid zooming.

    Equalities are eliminated by parameterizing the feasible affine subspace,
    so the search runs in the reduced coordinates.
    """
    nv = prob.n_vars
    Q = prob.quad.toarray() if prob.quad is not None else np.zeros((nv, nv))
    c = np.asarray(prob.lin, float) if prob.lin is not None else np.zeros(nv)
    if prob.n_pinball():
        A = np.asarray(prob.pl_coeffs.toarray(), float)
        b = np.asarray(prob.pl_offsets, float)
        w = np.asarray(prob.pl_weights, float)
        taus = np.asarray(prob.pl_taus, float)
    else:
        A = np.zeros((0, nv))
        b = w = taus = np.zeros(0)

    if prob.n_eq():
        E = np.asarray(prob.eq_coeffs.toarray(), float)
        g = np.asarray(prob.eq_rhs, float)
        x0, *_ = np.linalg.lstsq(E, g, rcond=None)
        assert np.allclose(E @ x0, g, atol=1e-9), "inconsistent equalities"
        N = scipy.linalg.null_space(E)
        if N.shape[1] == 0:
            return x0, _dense_objective(x0[None, :], Q, c, A, b, w, taus)[0]
    else:
        x0 = np.zeros(nv)
        N = np.eye(nv)

    def reduced(xi):
        X = x0[None, :] + xi @ N.T
        return _dense_objective(X, Q, c, A, b, w, taus)

    d = N.shape[1]
    Qr = N.T @ Q @ N
    lam = np.linalg.eigvalsh(Qr)[0]
    f0 = float(reduced(np.zeros((1, d)))[0])
    cr = np.linalg.norm(N.T @ (c + Q @ x0)) + float(
        np.sum(w * np.maximum(taus, 1 - taus) * np.linalg.norm(A @ N, axis=1))
    )
    if lam > 1e-9:
        radius = 2.0 * (cr + np.sqrt(cr * cr + 2.0 * lam * max(f0, 0.0))) / lam
    else:
        radius = 10.0 * (1.0 + np.linalg.norm(b, np.inf))
    radius = max(radius, 1.0)

    xi_best, f_best = grid_minimize(reduced, np.zeros(d), radius)
    return x0 + N @ xi_best, f_best


def _dense_objective(X, Q, c, A, b, w, taus):
    vals = 0.5 * np.einsum("ij,jk,ik->i", X, Q, X) + X @ c
    if A.shape[0]:
        R = b[None, :] - X @ A.T
        pin = taus[None, :] * np.maximum(R, 0.0) + (1 - taus)[None, :] * np.maximum(-R, 0.0)
        vals = vals + pin @ w
    return vals


def rank_k_error_power_iteration(M, k, iters=500, seed=0):
    """Best rank-k Frobenius reconstruction error via deflated power iteration."""
    rng = np.random.default_rng(seed)
    A = M.astype(float).copy()
    approx = np.zeros_like(A)
    for _ in range(k):
        v = rng.standard_normal(A.shape[1])
        v /= np.linalg.norm(v)
        for _ in range(iters):
            u = A @ v
            nu = np.linalg.norm(u)
            if nu == 0:
                break
            u /= nu
            v = A.T @ u
            nv = np.linalg.norm(v)
            if nv == 0:
                break
            v /= nv
        sigma = float(u @ A @ v)
        comp = sigma * np.outer(u, v)
        approx += comp
        A = A - comp
    return float(np.linalg.norm(A)), approx
