"""Low-rank quantile model of a power matrix.

The clear-sky estimate is the clamped product of a left matrix (daily shape
basis, one column per basis vector) and a right matrix (day-indexed mixing
weights). The fit objective combines an asymmetric pinball loss on observed
entries with squared second-difference smoothing along both axes and a
yearly shape-persistence penalty. The year-over-year degradation equality is
enforced by the solver as a hard constraint, not as an objective term.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AxisTooShortError,
    DimensionMismatchError,
    NonpositiveDenominatorError,
    TauOutOfRangeError,
)

# Day pairs used by the yearly terms are exactly this many columns apart.
YEAR_LAG = 365

# Constraint denominators below this fraction of the median are dropped for
# the sweep (near-zero energy days make the linearized ratio ill-conditioned).
DENOMINATOR_FLOOR_FRAC = 0.05

# Rows whose observed 98th percentile falls below this fraction of the global
# scale are treated as nighttime: excluded from the pinball sum, kept in the
# smoothing terms.
NIGHT_ROW_FRAC = 0.01

# Cloudy days keep at least this much pinball weight so they still anchor the
# quantile.
WEIGHT_FLOOR = 0.05


@dataclass
class Factorization:
    """Rank-k factors: ``left`` is m x k, ``right`` is k x n."""

    left: np.ndarray
    right: np.ndarray

    def __post_init__(self):
        self.left = np.asarray(self.left, dtype=float)
        self.right = np.asarray(self.right, dtype=float)
        if self.left.ndim != 2 or self.right.ndim != 2:
            raise DimensionMismatchError("factors must be 2-D")
        if self.left.shape[1] != self.right.shape[0]:
            raise DimensionMismatchError(
                f"left is {self.left.shape}, right is {self.right.shape}"
            )
        if self.rank < 1:
            raise DimensionMismatchError("rank must be >= 1")

    @property
    def rank(self) -> int:
        return self.left.shape[1]

    def copy(self) -> "Factorization":
        return Factorization(self.left.copy(), self.right.copy())


@dataclass
class HyperParams:
    """Model and solver knobs.

    Defaults follow the recommended values from the tuning study: rank 6,
    quantile 0.85, left/right smoothing weights 500 and 1000. The yearly
    shape-persistence weight is our addition and defaults to 100.
    """

    k: int = 6
    tau: float = 0.85
    mu_left: float = 500.0
    mu_right: float = 1000.0
    mu_year: float = 100.0
    max_iters: int = 100
    beta_tol: float = 1e-5
    subproblem_tol: float = 1e-6

    def __post_init__(self):
        self.validate()

    def validate(self) -> "HyperParams":
        if not 0.0 < self.tau < 1.0:
            raise TauOutOfRangeError(f"tau must be in (0, 1), got {self.tau}")
        if not 0.8 <= self.tau <= 0.9:
            warnings.warn(
                f"tau={self.tau} is outside [0.8, 0.9]; estimates may not be "
                "reliable in that regime",
                stacklevel=2,
            )
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if min(self.mu_left, self.mu_right, self.mu_year) < 0:
            raise ValueError("smoothing weights must be nonnegative")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.beta_tol <= 0 or self.subproblem_tol <= 0:
            raise ValueError("tolerances must be positive")
        return self

    def replace(self, **kwargs) -> "HyperParams":
        d = {
            "k": self.k,
            "tau": self.tau,
            "mu_left": self.mu_left,
            "mu_right": self.mu_right,
            "mu_year": self.mu_year,
            "max_iters": self.max_iters,
            "beta_tol": self.beta_tol,
            "subproblem_tol": self.subproblem_tol,
        }
        d.update(kwargs)
        return HyperParams(**d)


@dataclass
class DailyEnergy:
    """Clear-sky energy per day, kWh."""

    d: np.ndarray

    def __post_init__(self):
        self.d = np.asarray(self.d, dtype=float).ravel()

    def __len__(self) -> int:
        return self.d.size


@dataclass
class DegradationState:
    """Bootstrap state carried between sweeps.

    ``beta`` is the current fractional rate per year; ``d_prev`` holds the
    previous iterate's daily energy, used as the fixed denominator of the
    linearized degradation constraint. The yearly-shape scale factor
    gamma_prev defaults to 1 + beta and is refreshed only at sweep
    boundaries, so a mid-sweep state may carry an updated beta together
    with the sweep's original gamma.
    """

    beta: float
    d_prev: np.ndarray = field(repr=False)
    gamma: float | None = None

    def __post_init__(self):
        self.d_prev = np.asarray(self.d_prev, dtype=float).ravel()

    @property
    def gamma_prev(self) -> float:
        return 1.0 + self.beta if self.gamma is None else self.gamma


def constrained_indices(d_prev: np.ndarray, n: int) -> np.ndarray:
    """Day indices i (0-based) where the degradation equality applies.

    Pairs (i, i + YEAR_LAG) with i + YEAR_LAG < n, minus days whose previous
    energy is below the denominator floor.
    """
    d_prev = np.asarray(d_prev, dtype=float).ravel()
    last = n - YEAR_LAG
    if last <= 0:
        return np.empty(0, dtype=int)
    idx = np.arange(last)
    med = float(np.median(d_prev))
    keep = d_prev[idx] >= DENOMINATOR_FLOOR_FRAC * med
    return idx[keep]


def pinball_loss(residual, tau: float):
    """Asymmetric quantile loss: tau * max(r, 0) + (1 - tau) * max(-r, 0)."""
    if not 0.0 < tau < 1.0:
        raise TauOutOfRangeError(f"tau must be in (0, 1), got {tau}")
    r = np.asarray(residual, dtype=float)
    out = tau * np.maximum(r, 0.0) + (1.0 - tau) * np.maximum(-r, 0.0)
    if out.ndim == 0:
        return float(out)
    return out


def second_diff_operator(length: int) -> np.ndarray:
    """Dense (length-2) x length second-difference operator."""
    if length < 3:
        raise AxisTooShortError(f"need length >= 3, got {length}")
    D = np.zeros((length - 2, length))
    idx = np.arange(length - 2)
    D[idx, idx] = 1.0
    D[idx, idx + 1] = -2.0
    D[idx, idx + 2] = 1.0
    return D


def second_diff_penalty(mat: np.ndarray, axis: str) -> float:
    """Sum of squared discrete second differences along rows or columns.

    axis="columns" differences down each column (adjacent row entries);
    axis="rows" differences along each row (adjacent column entries).
    Vanishes exactly on affine sequences. 1-D input is treated as a single
    column.
    """
    a = np.asarray(mat, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if axis == "columns":
        if a.shape[0] < 3:
            raise AxisTooShortError("need >= 3 rows to difference columns")
        d2 = a[:-2, :] - 2.0 * a[1:-1, :] + a[2:, :]
    elif axis == "rows":
        if a.shape[1] < 3:
            raise AxisTooShortError("need >= 3 columns to difference rows")
        d2 = a[:, :-2] - 2.0 * a[:, 1:-1] + a[:, 2:]
    else:
        raise ValueError(f"axis must be 'rows' or 'columns', got {axis!r}")
    return float(np.sum(d2 * d2))


def reconstruct(f: Factorization) -> np.ndarray:
    """Clear-sky matrix estimate: entrywise max(left @ right, 0)."""
    return np.maximum(f.left @ f.right, 0.0)


def daily_energy(clear_sky: np.ndarray, delta_t: float) -> DailyEnergy:
    """Integrate each day column: d_i = delta_t * sum_t clear_sky[t, i]."""
    if delta_t <= 0:
        raise ValueError(f"delta_t must be positive, got {delta_t}")
    return DailyEnergy(delta_t * np.sum(np.asarray(clear_sky, dtype=float), axis=0))


def linear_daily_energy(f: Factorization, delta_t: float) -> np.ndarray:
    """Daily energy of the unclamped product; linear in either factor.

    This is the quantity the degradation constraint is written on. The
    clamped version is used for reporting only.
    """
    colsum = f.left.sum(axis=0)  # 1^T L, shape (k,)
    return delta_t * (colsum @ f.right)


def robust_scale(data: np.ndarray, mask: np.ndarray) -> float:
    """95th percentile of observed daily maxima; the normalization scale."""
    vals = np.where(mask, data, 0.0)
    maxima = vals.max(axis=0)
    maxima = maxima[maxima > 0]
    if maxima.size == 0:
        return 0.0
    return float(np.percentile(maxima, 95))


def night_rows(data: np.ndarray, mask: np.ndarray, scale: float) -> np.ndarray:
    """Boolean row mask: True where the row is effectively nighttime.

    A row is nighttime when its 98th percentile over observed entries is
    below NIGHT_ROW_FRAC of the global scale. Rows with no observations are
    nighttime as well.
    """
    m = data.shape[0]
    out = np.zeros(m, dtype=bool)
    thresh = NIGHT_ROW_FRAC * scale
    for t in range(m):
        obs = data[t, mask[t]]
        if obs.size == 0 or np.percentile(obs, 98) < thresh:
            out[t] = True
    return out


def _check_denominators(state: DegradationState, n: int) -> None:
    idx = constrained_indices(state.d_prev, n)
    if idx.size and np.any(state.d_prev[idx] <= 0):
        raise NonpositiveDenominatorError(
            "previous-iterate daily energy is nonpositive on a constrained day"
        )


def objective(P, f: Factorization, hp: HyperParams, state: DegradationState,
              weights: np.ndarray | None = None) -> tuple[float, dict]:
    """Full fitting objective and its term-by-term breakdown.

    Masked entries and nighttime rows never enter the pinball sum. The
    degradation equality is not a term here; the solver enforces it as a
    constraint. Returns (total, breakdown).
    """
    data = np.asarray(P.data, dtype=float)
    mask = np.asarray(P.mask, dtype=bool)
    m, n = data.shape
    if f.left.shape[0] != m or f.right.shape[1] != n:
        raise DimensionMismatchError(
            f"factorization {f.left.shape[0]}x{f.right.shape[1]} does not "
            f"match matrix {m}x{n}"
        )
    _check_denominators(state, n)

    if weights is None:
        w = np.ones(n)
    else:
        w = np.asarray(weights, dtype=float).ravel()
        if w.size != n:
            raise DimensionMismatchError("weights length must equal day count")

    scale = robust_scale(data, mask)
    night = night_rows(data, mask, scale)
    fit_mask = mask & ~night[:, None]

    resid = data - f.left @ f.right
    pin = pinball_loss(resid, hp.tau)
    pinball_term = float(np.sum(pin * fit_mask * w[None, :]))

    left_term = hp.mu_left * second_diff_penalty(f.left, axis="columns")
    right_term = hp.mu_right * second_diff_penalty(f.right, axis="rows")

    year_term = 0.0
    if n > YEAR_LAG:
        diff = f.right[:, YEAR_LAG:] - state.gamma_prev * f.right[:, :-YEAR_LAG]
        year_term = hp.mu_year * float(np.sum(diff * diff))

    breakdown = {
        "pinball": pinball_term,
        "smooth_left": left_term,
        "smooth_right": right_term,
        "yearly": year_term,
    }
    return sum(breakdown.values()), breakdown
