"""Raw power series parsing, regularization, and matrix embedding.

The pipeline is parse -> regularize -> embed -> scrub. Timestamps are local
civil time with a fixed UTC offset throughout (no daylight-saving shifts), so
day boundaries fall on local standard midnight and columns exactly 365 apart
represent the same solar date. Resampling is bin-mean only: power is never
invented where none was measured, and missingness travels in the mask.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta
from pathlib import Path

import numpy as np

from .errors import (
    AmbiguousSchemaError,
    IntervalInvalidError,
    NoParseableRowsError,
    SpanTooShortError,
    UnreadableSourceError,
)
from .model import night_rows, robust_scale

SECONDS_PER_DAY = 86400

# Degradation fitting needs two full years of columns.
MIN_EMBED_DAYS = 730

MISSING_TOKENS = {"", "nan", "null", "none", "na"}


@dataclass
class ColumnSpec:
    """CSV schema hints; None means auto-detect."""

    time_column: str | None = None
    power_column: str | None = None
    delimiter: str = ","


@dataclass
class RawSeries:
    """Parsed records in time order. Missing power is NaN."""

    times: np.ndarray  # datetime64[s], strictly increasing
    power: np.ndarray  # kW, NaN where missing; negatives kept (flagged later)
    site_id: str = ""
    dropped_rows: int = 0

    def __len__(self) -> int:
        return self.times.size


@dataclass
class RegularSeries:
    start_date: date
    interval: int  # seconds, divides 86400
    values: np.ndarray  # kW or NaN, length = whole days * samples_per_day
    timezone_offset: int = 0  # fixed minutes from UTC
    site_id: str = ""

    @property
    def samples_per_day(self) -> int:
        return SECONDS_PER_DAY // self.interval

    @property
    def n_days(self) -> int:
        return self.values.size // self.samples_per_day


@dataclass
class PowerMatrix:
    """Time-of-day x day embedding with an observation mask.

    Masked-out entries carry value 0 and are never read by any loss.
    """

    data: np.ndarray  # m x n, kW
    mask: np.ndarray  # m x n bool, True = observed & usable
    delta_t: float  # hours per sample
    day_index: list = field(default_factory=list)  # calendar dates, length n
    site_id: str = ""

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        self.mask = np.asarray(self.mask, dtype=bool)
        if self.data.shape != self.mask.shape:
            raise ValueError("data and mask shapes differ")
        self.data = np.where(self.mask, self.data, 0.0)

    @property
    def m(self) -> int:
        return self.data.shape[0]

    @property
    def n(self) -> int:
        return self.data.shape[1]

    def copy(self) -> "PowerMatrix":
        return PowerMatrix(
            self.data.copy(), self.mask.copy(), self.delta_t,
            list(self.day_index), self.site_id,
        )


@dataclass
class ScrubConfig:
    stuck_run_max_hours: float = 2.0
    min_day_coverage: float = 0.6


@dataclass
class ScrubReport:
    negative_entries: int = 0
    stuck_entries: int = 0
    low_coverage_days: int = 0
    low_coverage_entries: int = 0

    @property
    def total_masked(self) -> int:
        return self.negative_entries + self.stuck_entries + self.low_coverage_entries


def _open_text(source):
    if isinstance(source, (str, Path)):
        try:
            return open(source, "r", encoding="utf-8", newline=""), str(
                Path(source).stem
            )
        except OSError as exc:
            raise UnreadableSourceError(str(exc)) from exc
    if isinstance(source, bytes):
        try:
            return io.StringIO(source.decode("utf-8")), ""
        except UnicodeDecodeError as exc:
            raise UnreadableSourceError("source is not UTF-8") from exc
    if hasattr(source, "read"):
        data = source.read()
        if isinstance(data, bytes):
            try:
                data = data.decode("utf-8")
            except UnicodeDecodeError as exc:
                raise UnreadableSourceError("source is not UTF-8") from exc
        return io.StringIO(data), ""
    raise UnreadableSourceError(f"cannot read from {type(source).__name__}")


def _parse_timestamp(text: str) -> datetime | None:
    text = text.strip()
    if not text:
        return None
    try:
        ts = datetime.fromisoformat(text)
    except ValueError:
        return None
    if ts.tzinfo is not None:
        ts = ts.replace(tzinfo=None)
    return ts


def _parse_power(text: str) -> float | None:
    """Float value, NaN for missing tokens, None when malformed."""
    stripped = text.strip()
    if stripped.lower() in MISSING_TOKENS:
        return float("nan")
    try:
        return float(stripped)
    except ValueError:
        return None


def _detect_columns(header: list[str], rows: list[list[str]], spec: ColumnSpec):
    cols = {name.strip(): idx for idx, name in enumerate(header)}

    if spec.time_column is not None:
        if spec.time_column not in cols:
            raise AmbiguousSchemaError(f"no column named {spec.time_column!r}")
        t_idx = cols[spec.time_column]
    else:
        candidates = []
        for name, idx in cols.items():
            sample = [r[idx] for r in rows[:50] if len(r) > idx]
            parsed = [v for v in sample if _parse_timestamp(v) is not None]
            if sample and len(parsed) >= max(1, len(sample) // 2):
                candidates.append(idx)
        if not candidates:
            raise NoParseableRowsError("no timestamp column found")
        t_idx = candidates[0]

    if spec.power_column is not None:
        if spec.power_column not in cols:
            raise AmbiguousSchemaError(f"no column named {spec.power_column!r}")
        p_idx = cols[spec.power_column]
    else:
        candidates = []
        for name, idx in cols.items():
            if idx == t_idx:
                continue
            sample = [r[idx] for r in rows[:50] if len(r) > idx]
            numeric = [v for v in sample if _parse_power(v) is not None]
            if sample and len(numeric) >= max(1, len(sample) // 2):
                candidates.append(idx)
        if not candidates:
            raise NoParseableRowsError("no power column found")
        if len(candidates) > 1:
            names = [h for h, i in cols.items() if i in candidates]
            raise AmbiguousSchemaError(
                f"multiple candidate power columns {names}; set power_column"
            )
        p_idx = candidates[0]
    return t_idx, p_idx


def parse_power_csv(source, schema: ColumnSpec | None = None) -> RawSeries:
    """Parse a delimited text stream into a RawSeries.

    Rows with unparseable timestamps or non-missing, non-numeric power are
    dropped and counted. Duplicate timestamps keep the first record.
    """
    spec = schema or ColumnSpec()
    handle, site_id = _open_text(source)
    try:
        reader = csv.reader(handle, delimiter=spec.delimiter)
        try:
            table = [row for row in reader if row]
        except csv.Error as exc:
            raise UnreadableSourceError(str(exc)) from exc
    finally:
        handle.close()

    if len(table) < 2:
        raise NoParseableRowsError("no data rows")
    header, rows = table[0], table[1:]
    t_idx, p_idx = _detect_columns(header, rows, spec)

    times, power = [], []
    dropped = 0
    for row in rows:
        if len(row) <= max(t_idx, p_idx):
            dropped += 1
            continue
        ts = _parse_timestamp(row[t_idx])
        val = _parse_power(row[p_idx])
        if ts is None or val is None:
            dropped += 1
            continue
        times.append(ts)
        power.append(val)

    if not times:
        raise NoParseableRowsError("no parseable rows")

    order = np.argsort(np.array(times, dtype="datetime64[s]"), kind="stable")
    t_sorted = np.array(times, dtype="datetime64[s]")[order]
    p_sorted = np.array(power, dtype=float)[order]
    keep = np.ones(t_sorted.size, dtype=bool)
    keep[1:] = t_sorted[1:] != t_sorted[:-1]
    dropped += int((~keep).sum())

    return RawSeries(
        times=t_sorted[keep], power=p_sorted[keep],
        site_id=site_id, dropped_rows=dropped,
    )


def regularize(raw: RawSeries, interval: int = 300, offset: int = 0) -> RegularSeries:
    """Resample onto a fixed grid by bin mean, padded to whole days.

    Bins with no finite samples are missing. `offset` is the fixed UTC offset
    in minutes, carried as metadata; timestamps are already local civil time.
    """
    if interval <= 0 or SECONDS_PER_DAY % interval != 0:
        raise IntervalInvalidError(f"interval {interval} must divide 86400")
    if len(raw) == 0:
        raise SpanTooShortError("empty series")

    t0 = raw.times[0].astype("datetime64[D]")
    seconds = (raw.times - t0.astype("datetime64[s]")).astype("int64")
    span = int(seconds[-1] - seconds[0])
    if span + interval < SECONDS_PER_DAY:
        raise SpanTooShortError("series covers less than one day")

    n_days = int(seconds[-1] // SECONDS_PER_DAY) + 1
    m = SECONDS_PER_DAY // interval
    n_bins = n_days * m

    bin_idx = seconds // interval
    finite = np.isfinite(raw.power)
    sums = np.bincount(bin_idx[finite], weights=raw.power[finite], minlength=n_bins)
    counts = np.bincount(bin_idx[finite], minlength=n_bins)

    values = np.full(n_bins, np.nan)
    nonzero = counts > 0
    values[nonzero] = sums[nonzero] / counts[nonzero]

    start = t0.astype(object)
    return RegularSeries(
        start_date=start, interval=interval, values=values,
        timezone_offset=offset, site_id=raw.site_id,
    )


def embed_matrix(series: RegularSeries, min_days: int = MIN_EMBED_DAYS) -> PowerMatrix:
    """Arrange the regular series as an m x n matrix, one column per day.

    Missing and negative entries are masked out and zeroed.
    """
    m = series.samples_per_day
    n = series.n_days
    if n < min_days:
        raise SpanTooShortError(f"{n} days < required {min_days}")

    data = series.values.reshape(n, m).T.copy()
    mask = np.isfinite(data) & (data >= 0.0)
    data = np.where(mask, data, 0.0)
    days = [series.start_date + timedelta(days=i) for i in range(n)]
    return PowerMatrix(
        data=data, mask=mask, delta_t=series.interval / 3600.0,
        day_index=days, site_id=series.site_id,
    )


def _mask_stuck_runs(values, usable, daytime, max_run):
    """Return bool array marking daytime runs of identical positive values
    longer than max_run samples."""
    out = np.zeros(values.size, dtype=bool)
    run_start = 0
    for idx in range(1, values.size + 1):
        end_of_run = (
            idx == values.size
            or values[idx] != values[run_start]
            or not usable[idx]
            or not usable[run_start]
        )
        if end_of_run:
            length = idx - run_start
            if (
                length > max_run
                and usable[run_start]
                and values[run_start] > 0
                and daytime[run_start:idx].any()
            ):
                out[run_start:idx] = True
            run_start = idx
    return out


def scrub(matrix: PowerMatrix, rules: ScrubConfig | None = None):
    """Mask bad entries per the scrub rules; report counts per rule.

    Rules: negative readings, daytime runs of a constant positive value
    longer than the stuck threshold, and days whose daytime observed
    fraction falls below the coverage threshold.
    """
    rules = rules or ScrubConfig()
    out = matrix.copy()
    report = ScrubReport()

    # embed already zeroes negatives; direct-built matrices may carry them
    neg = out.mask & (out.data < 0)
    report.negative_entries = int(neg.sum())
    out.mask &= ~neg

    scale = robust_scale(out.data, out.mask)
    night = night_rows(out.data, out.mask, scale)
    day_rows = ~night

    max_run = max(1, int(round(rules.stuck_run_max_hours / matrix.delta_t)))
    flat = out.data.T.ravel()  # day-major so runs never span day boundaries
    usable = out.mask.T.ravel()
    daytime = np.tile(day_rows, out.n)
    stuck = _mask_stuck_runs(flat, usable, daytime, max_run)
    stuck_mat = stuck.reshape(out.n, out.m).T
    report.stuck_entries = int((stuck_mat & out.mask).sum())
    out.mask &= ~stuck_mat

    if day_rows.any():
        coverage = out.mask[day_rows].mean(axis=0)
        low = coverage < rules.min_day_coverage
        report.low_coverage_days = int(low.sum())
        report.low_coverage_entries = int(out.mask[:, low].sum())
        out.mask[:, low] = False

    out.data = np.where(out.mask, out.data, 0.0)
    return out, report
