"""Alternating convex fitting with a bootstrap-linearized degradation rate.

Each sweep solves two convex subproblems: the right step updates the mixing
weights jointly with the yearly rate beta, subject to the linearized
year-over-year equality (the rate ratio's denominator is frozen at the
previous iterate's daily energy, keeping the constraint linear); the left
step then refines the daily shape basis under the same equality at fixed
beta. Between sweeps the denominator and the yearly-shape scale factor are
refreshed from the current iterate. In the self-consistent limit the frozen
denominator equals the current energy and beta is the year-over-year rate.

Subproblems are handed to the operator-splitting solver with warm starts
carried across sweeps. Each step's achieved objective is recorded so the
per-step descent property can be audited; a step that fails to improve on a
still-feasible incumbent returns the incumbent unchanged.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import (
    RankTooLargeError,
    ScsfError,
    SolverStallError,
    SubproblemInfeasibleError,
)
from .ingest import PowerMatrix
from .model import (
    YEAR_LAG,
    DailyEnergy,
    DegradationState,
    Factorization,
    HyperParams,
    constrained_indices,
    daily_energy,
    linear_daily_energy,
    night_rows,
    pinball_loss,
    reconstruct,
    robust_scale,
    second_diff_operator,
)
from .subsolver import ConvexSubproblem, WarmStart, convex_subsolve

MIN_FIT_DAYS = 730
MIN_SWEEPS = 3
MIN_DAYTIME_FRACTION = 0.30
SUBSOLVE_MAX_ITERS = 3000

REJECT_TOO_SHORT = "too_short"
REJECT_TOO_SPARSE = "too_sparse"
REJECT_NOT_CONVERGED = "not_converged"
REJECT_DEGENERATE = "degenerate"


@dataclass
class StepRecord:
    sweep: int
    step: str  # "right" | "left"
    objective_before: float
    objective_after: float
    subsolver_iterations: int
    reverted: bool = False

    @property
    def decrease(self) -> float:
        return self.objective_before - self.objective_after


@dataclass
class FitResult:
    factorization: Factorization | None
    clear_sky: np.ndarray | None
    beta: float | None
    daily_energy: DailyEnergy | None
    iterations: int
    objective_trace: list  # (sweep, objective, beta)
    converged: bool
    reject_reason: str | None = None
    step_records: list = field(default_factory=list)
    weights: np.ndarray | None = None
    scale: float = 1.0
    runtime_s: float = 0.0

    @property
    def accepted(self) -> bool:
        return self.reject_reason is None

    @property
    def beta_pct(self) -> float | None:
        return None if self.beta is None else 100.0 * self.beta


def initialize(P: PowerMatrix, k: int, tau: float = 0.85) -> Factorization:
    """Starting factorization: quantile-fill the masked entries, then take
    the best rank-k spectral factorization of the filled matrix.

    The split puts the singular-value scale on the left columns (daily
    shapes, kW) and leaves the right rows order-one day weights. The sign of
    the dominant pair is fixed so the leading shape is nonnegative on
    average.
    """
    m, n = P.m, P.n
    if k > min(m, n):
        raise RankTooLargeError(f"k={k} exceeds min(m, n)={min(m, n)}")

    filled = P.data.copy()
    for t in range(m):
        obs = P.mask[t]
        fill = float(np.quantile(P.data[t, obs], tau)) if obs.any() else 0.0
        filled[t, ~obs] = fill

    U, s, Vt = np.linalg.svd(filled, full_matrices=False)
    U, s, Vt = U[:, :k], s[:k], Vt[:k, :]
    if U[:, 0].mean() < 0:
        U[:, 0] = -U[:, 0]
        Vt[0, :] = -Vt[0, :]
    root_n = np.sqrt(n)
    left = U * (s / root_n)[None, :]
    right = Vt * root_n
    return Factorization(left=left, right=right)


class _FitContext:
    """Precomputed problem structure shared by both steps of every sweep."""

    def __init__(self, P: PowerMatrix, hp: HyperParams, weights: np.ndarray):
        self.P = P
        self.hp = hp
        self.m, self.n = P.m, P.n
        self.k = hp.k
        self.delta_t = P.delta_t

        scale = robust_scale(P.data, P.mask)
        self.global_scale = scale
        night = night_rows(P.data, P.mask, scale)
        self.night = night
        fit_mask = P.mask & ~night[:, None]
        self.t_idx, self.i_idx = np.nonzero(fit_mask)
        self.offsets = P.data[self.t_idx, self.i_idx]
        self.weights = np.asarray(weights, dtype=float)
        self.term_weights = self.weights[self.i_idx]
        self.taus = np.full(self.t_idx.size, hp.tau)

        m, n, k = self.m, self.n, self.k
        nt = self.t_idx.size
        self.left_rows = np.repeat(np.arange(nt), k)
        self.left_cols = (self.t_idx[:, None] * k + np.arange(k)).ravel()
        self.right_rows = self.left_rows
        self.right_cols = (self.i_idx[:, None] * k + np.arange(k)).ravel()

        D2m = sp.csr_matrix(second_diff_operator(m))
        D2n = sp.csr_matrix(second_diff_operator(n))
        self.D2m = D2m
        self.D2n = D2n
        eye_k = sp.identity(k, format="csr")
        self.quad_left = 2.0 * hp.mu_left * sp.kron(D2m.T @ D2m, eye_k, format="csc")
        self.quad_right_smooth = (
            2.0 * hp.mu_right * sp.kron(D2n.T @ D2n, eye_k, format="csc")
        )

        if n > YEAR_LAG:
            rows = np.arange(n - YEAR_LAG)
            self.shift_hi = sp.csr_matrix(
                (np.ones(rows.size), (rows, rows + YEAR_LAG)),
                shape=(n - YEAR_LAG, n),
            )
            self.shift_lo = sp.csr_matrix(
                (np.ones(rows.size), (rows, rows)), shape=(n - YEAR_LAG, n)
            )
        else:
            self.shift_hi = self.shift_lo = None

        self.warm_left: WarmStart | None = None
        self.warm_right: WarmStart | None = None

    # -- objective (matches model.objective on this matrix) -----------------

    def objective(self, f: Factorization, gamma: float) -> float:
        pred = np.einsum(
            "ij,ji->i", f.left[self.t_idx, :], f.right[:, self.i_idx]
        )
        resid = self.offsets - pred
        pin = float(
            np.sum(self.term_weights * pinball_loss(resid, self.hp.tau))
        )
        lt = self.hp.mu_left * float(
            np.sum((self.D2m @ f.left) ** 2)
        )
        rt = self.hp.mu_right * float(np.sum((f.right @ self.D2n.T) ** 2))
        yt = 0.0
        if self.shift_hi is not None:
            diff = f.right[:, YEAR_LAG:] - gamma * f.right[:, :-YEAR_LAG]
            yt = self.hp.mu_year * float(np.sum(diff * diff))
        return pin + lt + rt + yt

    def _year_quad(self, gamma: float) -> sp.spmatrix | None:
        if self.shift_hi is None or self.hp.mu_year == 0:
            return None
        Y = sp.kron(
            self.shift_hi - gamma * self.shift_lo,
            sp.identity(self.k, format="csr"),
            format="csr",
        )
        return 2.0 * self.hp.mu_year * (Y.T @ Y)


def _left_subproblem(ctx, f, state, constrained):
    m, k = ctx.m, ctx.k
    A = sp.csr_matrix(
        (f.right[:, ctx.i_idx].T.ravel(), (ctx.left_rows, ctx.left_cols)),
        shape=(ctx.t_idx.size, m * k),
    )
    eq_coeffs = eq_rhs = None
    if constrained.size:
        U = (
            f.right[:, constrained + YEAR_LAG] - f.right[:, constrained]
        ).T * ctx.delta_t  # |C| x k
        rhs = state.beta * state.d_prev[constrained]
        # the constraints only touch the k column sums; reduce to
        # independent rows and confirm consistency
        Phi, svals, PsiT = np.linalg.svd(U, full_matrices=False)
        keep = svals > max(svals[0], 1e-300) * 1e-10 if svals.size else []
        Phi, svals, PsiT = Phi[:, keep], svals[keep], PsiT[keep, :]
        if svals.size:
            s_ls = PsiT.T @ ((Phi.T @ rhs) / svals)
            gap = np.linalg.norm(U @ s_ls - rhs)
            if gap > 1e-6 * (1.0 + np.linalg.norm(rhs)):
                raise SubproblemInfeasibleError(
                    f"degradation equality inconsistent in shape step (gap {gap:.2e})"
                )
            E_red = svals[:, None] * PsiT
            g_red = Phi.T @ rhs
            eq_coeffs = sp.csr_matrix(
                sp.kron(np.ones((1, m)), sp.csr_matrix(E_red))
            )
            eq_rhs = g_red
    return ConvexSubproblem(
        n_vars=m * k,
        quad=ctx.quad_left,
        pl_coeffs=A,
        pl_offsets=ctx.offsets,
        pl_weights=ctx.term_weights,
        pl_taus=ctx.taus,
        eq_coeffs=eq_coeffs,
        eq_rhs=eq_rhs,
    )


def _right_subproblem(ctx, f, state, constrained, free_beta):
    n, k = ctx.n, ctx.k
    nv = n * k + (1 if free_beta else 0)
    A = sp.csr_matrix(
        (f.left[ctx.t_idx, :].ravel(), (ctx.right_rows, ctx.right_cols)),
        shape=(ctx.t_idx.size, nv),
    )
    quad = ctx.quad_right_smooth
    yq = ctx._year_quad(state.gamma_prev)
    if yq is not None:
        quad = quad + yq
    if free_beta:
        quad = sp.block_diag([quad, sp.csr_matrix((1, 1))], format="csc")

    eq_coeffs = eq_rhs = None
    if constrained.size:
        s = f.left.sum(axis=0)
        if np.linalg.norm(s) < 1e-12:
            raise SubproblemInfeasibleError("shape basis has zero column sums")
        nc = constrained.size
        rows = np.repeat(np.arange(nc), k)
        cols_hi = ((constrained + YEAR_LAG)[:, None] * k + np.arange(k)).ravel()
        cols_lo = (constrained[:, None] * k + np.arange(k)).ravel()
        data_hi = np.tile(s * ctx.delta_t, nc)
        data_lo = np.tile(-s * ctx.delta_t, nc)
        if free_beta:
            rows = np.concatenate([rows, rows, np.arange(nc)])
            cols = np.concatenate([cols_hi, cols_lo, np.full(nc, n * k)])
            data = np.concatenate([data_hi, data_lo, -state.d_prev[constrained]])
            eq_rhs = np.zeros(nc)
        else:
            rows = np.concatenate([rows, rows])
            cols = np.concatenate([cols_hi, cols_lo])
            data = np.concatenate([data_hi, data_lo])
            eq_rhs = state.beta * state.d_prev[constrained]
        eq_coeffs = sp.csr_matrix((data, (rows, cols)), shape=(nc, nv))
    return ConvexSubproblem(
        n_vars=nv,
        quad=quad,
        pl_coeffs=A,
        pl_offsets=ctx.offsets,
        pl_weights=ctx.term_weights,
        pl_taus=ctx.taus,
        eq_coeffs=eq_coeffs,
        eq_rhs=eq_rhs,
    )


MAX_GAMMA_PASSES = 8


def _right_pass(ctx, f, state, constrained, free_beta, sweep):
    """One convex right solve at the fixed scale factor in `state`."""
    prob = _right_subproblem(ctx, f, state, constrained, free_beta)
    res = convex_subsolve(
        prob, tol=ctx.hp.subproblem_tol, max_iters=SUBSOLVE_MAX_ITERS,
        warm=ctx.warm_right,
    )
    n, k = ctx.n, ctx.k
    obj_before = ctx.objective(f, state.gamma_prev)
    cand = Factorization(f.left, res.x[: n * k].reshape(n, k).T)
    obj_after = ctx.objective(cand, state.gamma_prev)
    if obj_after > obj_before and ctx.warm_right is not None:
        # warm state can go stale after a scale jump; retry cold
        res_cold = convex_subsolve(
            prob, tol=ctx.hp.subproblem_tol, max_iters=SUBSOLVE_MAX_ITERS,
        )
        if res_cold.objective < res.objective:
            res = res_cold
            cand = Factorization(f.left, res.x[: n * k].reshape(n, k).T)
            obj_after = ctx.objective(cand, state.gamma_prev)
    ctx.warm_right = res.warm
    beta_new = float(res.x[n * k]) if free_beta else state.beta
    reverted = False
    if obj_after > obj_before and _right_incumbent_feasible(
        ctx, f, state, constrained
    ):
        cand = f
        beta_new = state.beta
        obj_after = obj_before
        reverted = True
    record = StepRecord(
        sweep=sweep, step="right", objective_before=obj_before,
        objective_after=obj_after, subsolver_iterations=res.iterations,
        reverted=reverted,
    )
    return cand, beta_new, record


def _right_incumbent_feasible(ctx, f, state, constrained):
    if not constrained.size:
        return True
    s = f.left.sum(axis=0)
    lhs = ctx.delta_t * (
        s @ (f.right[:, constrained + YEAR_LAG] - f.right[:, constrained])
    )
    viol = np.max(np.abs(lhs - state.beta * state.d_prev[constrained]))
    return viol <= 1e-8 * max(1.0, float(np.abs(state.d_prev).max()))


def _run_right_step(ctx, f, state, constrained, free_beta, sweep):
    """Right updates iterated to self-consistency of the yearly scale.

    The yearly-shape anchor must stay a constant within each convex solve,
    which makes the plain alternation approach the fixed point beta == the
    anchored rate at a painfully slow geometric rate. With the left factor
    and the denominators frozen, beta as a function of the anchor is a
    clean one-dimensional contraction, so a few secant-accelerated passes
    find the anchor that reproduces itself. Every pass is a full convex
    solve recorded like any other step, and the incumbent stays feasible
    from pass to pass, so the descent audit is unaffected.
    """
    if not free_beta:
        cand, beta_out, rec = _right_pass(
            ctx, f, state, constrained, free_beta, sweep
        )
        return cand, beta_out, [rec]

    records = []
    gamma_in = state.gamma_prev
    pair = None
    cand, beta_out = f, state.beta
    for _ in range(MAX_GAMMA_PASSES):
        st = DegradationState(
            beta=beta_out, d_prev=state.d_prev, gamma=gamma_in
        )
        cand, beta_out, rec = _right_pass(
            ctx, cand, st, constrained, free_beta, sweep
        )
        records.append(rec)
        resid = beta_out - (gamma_in - 1.0)
        if abs(resid) < 0.5 * ctx.hp.beta_tol:
            break
        b_in = gamma_in - 1.0
        b_next = beta_out
        if pair is not None:
            d_in = b_in - pair[0]
            d_out = beta_out - pair[1]
            if abs(d_in) > 1e-15:
                slope = d_out / d_in
                if 0.0 < slope <= 0.999:
                    cand_b = (beta_out - slope * b_in) / (1.0 - slope)
                    if abs(cand_b) < 0.5:
                        b_next = cand_b
        pair = (b_in, beta_out)
        gamma_in = 1.0 + b_next
    return cand, beta_out, records


def _rebalance(ctx, f, gamma):
    """Optimal per-component rescaling (L_j / a_j, a_j * R_j).

    Leaves the product, the pinball terms, and the degradation equalities
    unchanged while minimizing the smoothing penalties in closed form, so
    the objective never increases. Removes the scale ambiguity along which
    plain alternation creeps.
    """
    hp = ctx.hp
    left_cost = hp.mu_left * np.asarray(
        (ctx.D2m @ f.left) ** 2
    ).sum(axis=0)
    right_cost = hp.mu_right * np.asarray(
        (f.right @ ctx.D2n.T) ** 2
    ).sum(axis=1)
    if ctx.shift_hi is not None:
        diff = f.right[:, YEAR_LAG:] - gamma * f.right[:, :-YEAR_LAG]
        right_cost = right_cost + hp.mu_year * (diff * diff).sum(axis=1)
    ok = (left_cost > 0) & (right_cost > 0)
    alpha = np.ones(ctx.k)
    alpha[ok] = (left_cost[ok] / right_cost[ok]) ** 0.25
    return Factorization(f.left / alpha[None, :], f.right * alpha[:, None])


def _run_left_step(ctx, f, state, constrained, sweep):
    prob = _left_subproblem(ctx, f, state, constrained)
    res = convex_subsolve(
        prob, tol=ctx.hp.subproblem_tol, max_iters=SUBSOLVE_MAX_ITERS,
        warm=ctx.warm_left,
    )
    obj_before = ctx.objective(f, state.gamma_prev)
    cand = Factorization(res.x.reshape(ctx.m, ctx.k), f.right)
    obj_after = ctx.objective(cand, state.gamma_prev)
    if obj_after > obj_before and ctx.warm_left is not None:
        res_cold = convex_subsolve(
            prob, tol=ctx.hp.subproblem_tol, max_iters=SUBSOLVE_MAX_ITERS,
        )
        if res_cold.objective < res.objective:
            res = res_cold
            cand = Factorization(res.x.reshape(ctx.m, ctx.k), f.right)
            obj_after = ctx.objective(cand, state.gamma_prev)
    ctx.warm_left = res.warm
    reverted = False
    if obj_after > obj_before:
        # the incumbent left matrix is always feasible here
        cand = f
        obj_after = obj_before
        reverted = True
    record = StepRecord(
        sweep=sweep, step="left", objective_before=obj_before,
        objective_after=obj_after, subsolver_iterations=res.iterations,
        reverted=reverted,
    )
    return cand, record


def solve_right_step(
    P: PowerMatrix,
    f: Factorization,
    hp: HyperParams,
    state: DegradationState,
    weights: np.ndarray | None = None,
    free_beta: bool = True,
):
    """One right update on P as given: returns (right matrix, beta)."""
    w = np.ones(P.n) if weights is None else weights
    ctx = _FitContext(P, hp, w)
    constrained = constrained_indices(state.d_prev, P.n)
    cand, beta_new, _ = _run_right_step(
        ctx, f, state, constrained, free_beta, 0
    )
    return cand.right, beta_new


def solve_left_step(
    P: PowerMatrix,
    f: Factorization,
    hp: HyperParams,
    state: DegradationState,
    weights: np.ndarray | None = None,
):
    """One left update on P as given: returns the new left matrix."""
    w = np.ones(P.n) if weights is None else weights
    ctx = _FitContext(P, hp, w)
    constrained = constrained_indices(state.d_prev, P.n)
    cand, _ = _run_left_step(ctx, f, state, constrained, 0)
    return cand.left


def _reject(reason, iterations=0, trace=None, records=None, runtime=0.0):
    return FitResult(
        factorization=None, clear_sky=None, beta=None, daily_energy=None,
        iterations=iterations, objective_trace=trace or [], converged=False,
        reject_reason=reason, step_records=records or [], runtime_s=runtime,
    )


def fit(
    P: PowerMatrix,
    hp: HyperParams | None = None,
    weights: np.ndarray | None = None,
    degradation: bool = True,
) -> FitResult:
    """Fit the clear-sky model and the yearly degradation rate.

    Degenerate inputs are reported through `reject_reason` instead of
    raising. The input is normalized by the robust scale before fitting and
    results are rescaled afterward, which makes beta exactly invariant to a
    uniform rescaling of the data.
    """
    start_time = time.perf_counter()
    hp = hp or HyperParams()

    if P.n < MIN_FIT_DAYS:
        return _reject(REJECT_TOO_SHORT)
    if not P.mask.any():
        return _reject(REJECT_TOO_SPARSE)
    scale = robust_scale(P.data, P.mask)
    if scale <= 0:
        return _reject(REJECT_DEGENERATE)
    night = night_rows(P.data, P.mask, scale)
    if night.all():
        return _reject(REJECT_DEGENERATE)
    if P.mask[~night, :].mean() < MIN_DAYTIME_FRACTION:
        return _reject(REJECT_TOO_SPARSE)

    if weights is None:
        from .baseline import loss_weights

        weights = loss_weights(P)

    # fully-observed-enough columns must support the rank
    day_cov = P.mask[~night, :].mean(axis=0)
    if int((day_cov >= 0.5).sum()) < hp.k:
        return _reject(REJECT_TOO_SPARSE)

    norm = PowerMatrix(
        data=P.data / scale, mask=P.mask, delta_t=P.delta_t,
        day_index=list(P.day_index), site_id=P.site_id,
    )
    ctx = _FitContext(norm, hp, weights)

    f = initialize(norm, hp.k, hp.tau)
    d_prev = linear_daily_energy(f, norm.delta_t)
    if np.median(d_prev) <= 0:
        return _reject(REJECT_DEGENERATE)

    beta = 0.0
    trace = []
    records = []
    converged = False
    prev_obj = None
    sweeps_done = 0

    try:
        for sweep in range(1, hp.max_iters + 1):
            state = DegradationState(beta=beta, d_prev=d_prev)
            constrained = constrained_indices(d_prev, norm.n)
            if degradation and constrained.size == 0:
                return _reject(
                    REJECT_DEGENERATE, sweep - 1, trace, records,
                    time.perf_counter() - start_time,
                )

            f, beta_new, recs_r = _run_right_step(
                ctx, f, state, constrained, degradation, sweep
            )
            records.extend(recs_r)
            state_mid = DegradationState(
                beta=beta_new, d_prev=d_prev, gamma=1.0 + beta_new
            )
            f, rec_l = _run_left_step(ctx, f, state_mid, constrained, sweep)
            records.append(rec_l)
            f = _rebalance(ctx, f, state_mid.gamma_prev)

            obj = ctx.objective(f, state_mid.gamma_prev)
            trace.append((sweep, obj, beta_new))
            sweeps_done = sweep

            resid = abs(beta_new - beta)
            rel_obj = (
                abs(obj - prev_obj) / max(abs(obj), 1.0)
                if prev_obj is not None else np.inf
            )
            beta = beta_new
            d_prev = linear_daily_energy(f, norm.delta_t)
            if np.median(d_prev) <= 0:
                return _reject(
                    REJECT_DEGENERATE, sweep, trace, records,
                    time.perf_counter() - start_time,
                )
            prev_obj = obj

            if sweep >= MIN_SWEEPS:
                if degradation and resid < hp.beta_tol:
                    converged = True
                    break
                if not degradation and rel_obj < 10.0 * hp.subproblem_tol:
                    converged = True
                    break
    except ScsfError as exc:
        reason = (
            REJECT_NOT_CONVERGED
            if isinstance(exc, (SolverStallError,))
            else REJECT_DEGENERATE
        )
        return _reject(
            reason, sweeps_done, trace, records,
            time.perf_counter() - start_time,
        )

    runtime = time.perf_counter() - start_time
    result_f = Factorization(f.left * scale, f.right.copy())
    clear = reconstruct(result_f)
    res = FitResult(
        factorization=result_f,
        clear_sky=clear,
        beta=beta if degradation else 0.0,
        daily_energy=daily_energy(clear, P.delta_t),
        iterations=sweeps_done,
        objective_trace=trace,
        converged=converged,
        reject_reason=None if converged else REJECT_NOT_CONVERGED,
        step_records=records,
        weights=np.asarray(weights, dtype=float),
        scale=scale,
        runtime_s=runtime,
    )
    return res


def self_consistency_beta(result: FitResult) -> float:
    """Median year-over-year rate recomputed with the final daily energy in
    the denominator; at a converged fixed point it matches the fitted beta."""
    d = result.daily_energy.d
    idx = constrained_indices(d, d.size)
    ratios = (d[idx + YEAR_LAG] - d[idx]) / d[idx]
    return float(np.median(ratios))
