"""Synthetic PV power generator with known ground truth.

Produces a clear-sky surface with seasonal daylight and amplitude cycles of
period exactly 365 days, a geometric year-over-year energy decay, optional
cloudy days (ragged multiplicative attenuation), multiplicative observation
noise, and optional capacity anomalies (a block of days scaled by a fixed
factor). Because the seasonal cycle repeats exactly every 365 columns, the
noiseless daily energy satisfies d[i+365] / d[i] = 1 + beta for every day,
which makes recovery testable against exact truth.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date, timedelta

import numpy as np

from .errors import InvalidScenarioError
from .ingest import PowerMatrix

YEAR_DAYS = 365


@dataclass
class Scenario:
    site_id: str = "synth-000"
    seed: int = 0
    n_days: int = 1095
    interval: int = 900  # seconds per sample
    beta: float = -0.01  # fractional energy change per year
    capacity_kw: float = 5.0
    cloud_fraction: float = 0.4
    noise: float = 0.02  # multiplicative observation noise, std fraction
    seasonal_amplitude: float = 0.22  # peak-power seasonal swing
    daylight_base: float = 0.5  # mean daylight fraction of the day
    daylight_swing: float = 0.14  # seasonal daylight variation
    # scale all days in [start, stop) by `factor` (e.g. a year-1 anomaly)
    capacity_shift: tuple[float, int, int] | None = None
    missing_fraction: float = 0.0
    start_date: date = field(default_factory=lambda: date(2015, 1, 1))

    def validate(self) -> "Scenario":
        if self.n_days < 1 or self.interval <= 0 or 86400 % self.interval:
            raise InvalidScenarioError("bad n_days or interval")
        if not -0.5 < self.beta < 0.5:
            raise InvalidScenarioError(f"beta {self.beta} out of range")
        if not 0.0 <= self.cloud_fraction <= 1.0:
            raise InvalidScenarioError("cloud_fraction must be in [0, 1]")
        if self.noise < 0 or self.missing_fraction < 0:
            raise InvalidScenarioError("noise/missing_fraction must be >= 0")
        if self.capacity_shift is not None:
            factor, start, stop = self.capacity_shift
            if factor <= 0 or not 0 <= start < stop:
                raise InvalidScenarioError("bad capacity_shift")
        return self


@dataclass
class SiteTruth:
    site_id: str
    beta_true: float
    capacity_kw: float
    cloudy_days: np.ndarray  # bool per day
    clear_daily_energy: np.ndarray  # kWh per day, pre-anomaly, noiseless


def clear_sky_surface(sc: Scenario) -> np.ndarray:
    """Noiseless clear-sky power, m x n, without clouds or anomalies."""
    m = 86400 // sc.interval
    days = np.arange(sc.n_days)
    phase = 2.0 * np.pi * ((days - 172) % YEAR_DAYS) / YEAR_DAYS
    daylight = sc.daylight_base + sc.daylight_swing * np.cos(phase)
    amp = (
        sc.capacity_kw
        * (1.0 + sc.seasonal_amplitude * np.cos(phase))
        * (1.0 + sc.beta) ** (days / YEAR_DAYS)
    )
    t = (np.arange(m) + 0.5) / m  # sample centers, fraction of day
    rel = (t[:, None] - 0.5) / (daylight[None, :] / 2.0)
    clipped = np.clip(rel, -1.0, 1.0)
    profile = np.cos(0.5 * np.pi * clipped) ** 1.3
    return profile * amp[None, :]


def generate(sc: Scenario) -> tuple[PowerMatrix, SiteTruth]:
    """Build the observed matrix and its ground truth."""
    sc.validate()
    rng = np.random.default_rng(sc.seed)
    m = 86400 // sc.interval

    clear = clear_sky_surface(sc)
    delta_t = sc.interval / 3600.0
    truth_energy = delta_t * clear.sum(axis=0)

    cloudy = rng.random(sc.n_days) < sc.cloud_fraction
    atten = np.ones((m, sc.n_days))
    for i in np.flatnonzero(cloudy):
        base = rng.uniform(0.15, 0.75)
        ragged = np.clip(1.0 + 0.45 * rng.standard_normal(m), 0.1, 1.6)
        atten[:, i] = base * ragged

    data = clear * atten
    if sc.capacity_shift is not None:
        factor, start, stop = sc.capacity_shift
        data[:, start:stop] *= factor
    if sc.noise > 0:
        data = data * (1.0 + sc.noise * rng.standard_normal(data.shape))
    data = np.maximum(data, 0.0)

    mask = np.ones_like(data, dtype=bool)
    if sc.missing_fraction > 0:
        mask &= rng.random(data.shape) >= sc.missing_fraction

    days = [sc.start_date + timedelta(days=int(i)) for i in range(sc.n_days)]
    matrix = PowerMatrix(
        data=data, mask=mask, delta_t=delta_t, day_index=days,
        site_id=sc.site_id,
    )
    truth = SiteTruth(
        site_id=sc.site_id,
        beta_true=sc.beta,
        capacity_kw=sc.capacity_kw,
        cloudy_days=cloudy,
        clear_daily_energy=truth_energy,
    )
    return matrix, truth


def fleet_scenarios(
    n_sites: int,
    seed: int,
    beta_mean: float = -0.008,
    beta_std: float = 0.005,
    n_days: int = 735,
    interval: int = 1800,
    **overrides,
) -> list[Scenario]:
    """Scenarios with per-site degradation drawn from a normal distribution."""
    rng = np.random.default_rng(seed)
    betas = rng.normal(beta_mean, beta_std, n_sites)
    out = []
    for idx in range(n_sites):
        out.append(
            Scenario(
                site_id=f"site-{idx:03d}",
                seed=seed + 1000 + idx,
                n_days=n_days,
                interval=interval,
                beta=float(betas[idx]),
                cloud_fraction=0.35,
                **overrides,
            ).validate()
        )
    return out


def write_csv(matrix: PowerMatrix, path, interval: int) -> None:
    """Emit the matrix as a timestamped power CSV (deterministic bytes)."""
    m, n = matrix.m, matrix.n
    start = matrix.day_index[0] if matrix.day_index else date(2015, 1, 1)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("timestamp,power_kw\n")
        for i in range(n):
            day = start + timedelta(days=i)
            for t in range(m):
                sec = t * interval
                stamp = f"{day.isoformat()}T{sec // 3600:02d}:{(sec % 3600) // 60:02d}:{sec % 60:02d}"
                if matrix.mask[t, i]:
                    fh.write(f"{stamp},{matrix.data[t, i]:.6f}\n")
                else:
                    fh.write(f"{stamp},NaN\n")
