"""Clear-day detection and fit diagnostics.

A day scores high when its profile is smooth (small normalized
second-difference energy) and its energy sits near the local envelope (the
rolling 90th percentile of daily energy in a +/-10 day window). The product
of the two sub-scores drives per-day loss weights and marks the days used
for residual diagnostics. Both sub-scores are ratios of same-scale
quantities, so the score is invariant to uniform rescaling of the input.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import TooFewClearDaysError
from .ingest import PowerMatrix
from .model import WEIGHT_FLOOR

CLEAR_THRESHOLD = 0.8

# Smoothness reference: per-triple second-difference energy over day-peak
# squared at which the sub-score reaches zero. Calibrated on the synthetic
# generator across 15-min to hourly sampling.
ROUGHNESS_SCALE = 0.15
ROUGHNESS_POWER = 0.75

ENVELOPE_WINDOW = 10  # days each side
ENVELOPE_PERCENTILE = 90

MIN_FLAGGED_DAYS = 20


@dataclass
class ClearDayScore:
    score: np.ndarray  # per-day fraction in [0, 1]
    flags: np.ndarray  # score >= threshold

    def __len__(self) -> int:
        return self.score.size


@dataclass
class ResidualDiagnostics:
    days: np.ndarray  # day indices of the residuals (clear days only)
    residuals: np.ndarray  # measured minus clear-sky daily energy, kWh
    slope: float  # kWh/day per day
    slope_halfwidth: float  # 95% normal-approximation half-width


@dataclass
class DegradationReport:
    rate_pct: float
    rate_text: str
    iterations: int
    converged: bool
    reject_reason: str | None
    residual_slope: float
    slope_halfwidth: float
    clear_day_count: int


def _smoothness_scores(P: PowerMatrix) -> np.ndarray:
    data, mask = P.data, P.mask
    m, n = data.shape
    scores = np.zeros(n)
    min_triples = max(4, m // 16)
    for i in range(n):
        obs = mask[:, i]
        triple = obs[:-2] & obs[1:-1] & obs[2:]
        count = int(triple.sum())
        peak = data[obs, i].max() if obs.any() else 0.0
        if count < min_triples or peak <= 0:
            continue
        col = data[:, i]
        d2 = col[:-2] - 2.0 * col[1:-1] + col[2:]
        energy = float(np.sum(d2[triple] ** 2))
        roughness = energy / (count * peak * peak)
        scores[i] = np.clip(
            1.0 - (roughness / ROUGHNESS_SCALE) ** ROUGHNESS_POWER, 0.0, 1.0
        )
    return scores


def _envelope_scores(P: PowerMatrix) -> np.ndarray:
    energy = P.delta_t * np.where(P.mask, P.data, 0.0).sum(axis=0)
    n = energy.size
    scores = np.zeros(n)
    for i in range(n):
        lo = max(0, i - ENVELOPE_WINDOW)
        hi = min(n, i + ENVELOPE_WINDOW + 1)
        window = energy[lo:hi]
        window = window[window > 0]
        if window.size == 0:
            continue
        ref = np.percentile(window, ENVELOPE_PERCENTILE)
        if ref <= 0:
            continue
        scores[i] = np.clip(energy[i] / ref, 0.0, 1.0)
    return scores


def detect_clear_days(
    P: PowerMatrix, clear_threshold: float = CLEAR_THRESHOLD
) -> ClearDayScore:
    """Score each day's clearness in [0, 1] and flag days above threshold."""
    score = _smoothness_scores(P) * _envelope_scores(P)
    return ClearDayScore(score=score, flags=score >= clear_threshold)


def loss_weights(P: PowerMatrix, floor: float = WEIGHT_FLOOR) -> np.ndarray:
    """Per-day pinball weights: clear-day score floored so cloudy days still
    anchor the quantile."""
    return np.maximum(detect_clear_days(P).score, floor)


def clear_day_residuals(P: PowerMatrix, fit, flags: np.ndarray) -> ResidualDiagnostics:
    """Daily-energy residuals on clear days, with a least-squares trend.

    Residuals are measured daily energy minus estimated clear-sky daily
    energy, restricted to flagged days.
    """
    flags = np.asarray(flags, dtype=bool)
    days = np.flatnonzero(flags)
    if days.size < MIN_FLAGGED_DAYS:
        raise TooFewClearDaysError(
            f"{days.size} clear days < required {MIN_FLAGGED_DAYS}"
        )
    measured = P.delta_t * np.where(P.mask, P.data, 0.0).sum(axis=0)
    residuals = measured[days] - fit.daily_energy.d[days]

    x = days.astype(float)
    slope, _ = np.polyfit(x, residuals, 1)
    pred = np.polyval(np.polyfit(x, residuals, 1), x)
    dof = max(days.size - 2, 1)
    sigma2 = float(np.sum((residuals - pred) ** 2)) / dof
    sxx = float(np.sum((x - x.mean()) ** 2))
    halfwidth = 1.96 * np.sqrt(sigma2 / sxx) if sxx > 0 else float("inf")
    return ResidualDiagnostics(
        days=days, residuals=residuals, slope=float(slope),
        slope_halfwidth=float(halfwidth),
    )


def degradation_report(fit, diag: ResidualDiagnostics) -> DegradationReport:
    """Human-facing summary of a completed fit."""
    rate_pct = 100.0 * fit.beta
    return DegradationReport(
        rate_pct=rate_pct,
        rate_text=f"{rate_pct:.1f} %/yr",
        iterations=fit.iterations,
        converged=fit.converged,
        reject_reason=fit.reject_reason,
        residual_slope=diag.slope,
        slope_halfwidth=diag.slope_halfwidth,
        clear_day_count=int(diag.days.size),
    )
