"""Ingestion of power time series and reshaping into the day-by-column matrix."""

import csv
import io
import math
from dataclasses import dataclass, field, replace
from datetime import datetime

import numpy as np

from .errors import IngestionError, SizeError

SECONDS_PER_DAY = 86400
_MISSING_TOKENS = {"", "nan", "na", "null", "none"}


@dataclass(frozen=True)
class PowerSeries:
    """Uniformly spaced power samples.

    ``timestamps`` are ``datetime64[s]`` naive local clock times and
    ``values`` holds NaN where a sample is missing.
    """

    timestamps: np.ndarray
    values: np.ndarray
    sample_period: int

    def __post_init__(self):
        if self.timestamps.shape != self.values.shape:
            raise SizeError("timestamps and values must have the same length")
        if self.sample_period <= 0 or SECONDS_PER_DAY % self.sample_period:
            raise IngestionError(
                f"sample period {self.sample_period}s does not divide a day evenly"
            )
        if self.timestamps.size > 1:
            steps = np.diff(self.timestamps.astype("int64"))
            if np.any(steps != self.sample_period):
                raise IngestionError("timestamps are not uniformly spaced")

    def __len__(self):
        return self.values.size

    @property
    def samples_per_day(self):
        return SECONDS_PER_DAY // self.sample_period

    @classmethod
    def from_values(cls, values, sample_period, start="2020-01-01T00:00:00"):
        values = np.asarray(values, dtype=float)
        t0 = np.datetime64(start, "s")
        ts = t0 + np.arange(values.size) * np.timedelta64(int(sample_period), "s")
        return cls(ts, values, int(sample_period))


@dataclass(frozen=True)
class PowerMatrix:
    """Daily-segmented power data: rows are intra-day samples, columns are days.

    Missing entries hold 0 in ``data`` and ``False`` in ``observed``.
    """

    data: np.ndarray
    observed: np.ndarray
    night_rows: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    sample_period: int | None = None
    start: np.datetime64 | None = None

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        obs = np.asarray(self.observed, dtype=bool)
        if data.ndim != 2 or data.shape != obs.shape:
            raise SizeError("data and observed mask must be matching 2-D arrays")
        if not np.all(np.isfinite(data[obs])):
            raise IngestionError("observed entries must be finite")
        data = np.where(obs, data, 0.0)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "observed", obs)
        object.__setattr__(self, "night_rows", np.asarray(self.night_rows, dtype=int))

    @property
    def m(self):
        return self.data.shape[0]

    @property
    def n(self):
        return self.data.shape[1]

    @property
    def day_rows(self):
        """Row indices not in the night set."""
        return np.setdiff1d(np.arange(self.m), self.night_rows)

    @classmethod
    def from_array(cls, data, observed=None, **kwargs):
        """Build from a 2-D array; NaN entries are treated as missing."""
        data = np.asarray(data, dtype=float)
        if observed is None:
            observed = np.isfinite(data)
        else:
            observed = np.asarray(observed, dtype=bool) & np.isfinite(data)
        return cls(np.nan_to_num(data, nan=0.0), observed, **kwargs)

    def with_night_rows(self, epsilon=None):
        return replace(self, night_rows=night_mask(self, epsilon))

    def timestamps(self):
        """Clock time of every matrix entry, column-major (``m*n`` long)."""
        if self.sample_period is None or self.start is None:
            raise IngestionError("matrix carries no time axis")
        steps = np.arange(self.m * self.n) * np.timedelta64(self.sample_period, "s")
        return self.start + steps


def _parse_time(text):
    text = text.strip()
    try:
        return np.datetime64(int(float(text)), "s")
    except ValueError:
        pass
    if text.endswith("Z"):
        text = text[:-1]
    dt = datetime.fromisoformat(text)
    # naive local clock time is all the day segmentation needs
    return np.datetime64(dt.replace(tzinfo=None), "s")


def _parse_value(text):
    if text.strip().lower() in _MISSING_TOKENS:
        return math.nan
    return float(text)


def _resolve_column(header, col, what):
    if isinstance(col, int):
        if not 0 <= col < len(header):
            raise IngestionError(f"{what} column index {col} out of range")
        return col
    if col is None:
        return 0 if what == "timestamp" else 1
    if col in header:
        return header.index(col)
    if col.isdigit():
        return _resolve_column(header, int(col), what)
    raise IngestionError(f"{what} column {col!r} not found in header {header}")


def ingest_csv(source, ts_col=None, power_col=None, drop_duplicates=False, sample_period=None):
    """Read a two-column-or-wider CSV into a :class:`PowerSeries`.

    Parameters
    ----------
    source : path, bytes, or file-like
        UTF-8 text with a header row.
    ts_col, power_col : str or int, optional
        Column names or 0-based indices. Default to the first two columns.
    drop_duplicates : bool
        If true, rows whose timestamp does not advance past the previous
        accepted row (e.g. a repeated DST hour) are dropped. Otherwise such
        rows raise :class:`IngestionError`.
    sample_period : int, optional
        Native spacing in seconds. Inferred as the smallest step between
        consecutive rows when omitted.

    Gaps are filled with NaN so the spacing is uniform.
    """
    if isinstance(source, (bytes, bytearray)):
        fh = io.StringIO(source.decode("utf-8"))
    elif isinstance(source, str):
        fh = open(source, newline="", encoding="utf-8")
    elif hasattr(source, "read"):
        raw = source.read()
        fh = io.StringIO(raw.decode("utf-8") if isinstance(raw, bytes) else raw)
    else:
        fh = open(source, newline="", encoding="utf-8")

    with fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise IngestionError("empty input: no header row") from None
        ti = _resolve_column(header, ts_col, "timestamp")
        pi = _resolve_column(header, power_col, "power")

        times, vals = [], []
        for rownum, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                t = _parse_time(row[ti])
                v = _parse_value(row[pi])
            except (ValueError, IndexError) as exc:
                raise IngestionError(f"row {rownum}: cannot parse {row!r} ({exc})") from None
            if times and t <= times[-1]:
                if drop_duplicates:
                    continue
                if t == times[-1]:
                    raise IngestionError(f"row {rownum}: duplicated timestamp {t}")
                raise IngestionError(f"row {rownum}: timestamp {t} goes backwards")
            times.append(t)
            vals.append(v)

    if not times:
        raise IngestionError("no data rows")
    ts = np.array(times, dtype="datetime64[s]")
    values = np.array(vals, dtype=float)
    if ts.size == 1:
        return PowerSeries(ts, values, int(sample_period or SECONDS_PER_DAY))

    secs = ts.astype("int64")
    steps = np.diff(secs)
    period = int(sample_period) if sample_period else int(steps.min())
    if period <= 0:
        raise IngestionError(f"sample period must be positive, got {period}")
    bad = np.nonzero(steps % period)[0]
    if bad.size:
        raise IngestionError(
            f"irregular spacing at timestamp {ts[bad[0] + 1]}: "
            f"step {steps[bad[0]]}s is not a multiple of {period}s"
        )
    if SECONDS_PER_DAY % period:
        raise IngestionError(
            f"sample period {period}s (first at timestamp {ts[np.argmin(steps) + 1]}) "
            "does not divide a day evenly"
        )
    idx = (secs - secs[0]) // period
    full = np.full(idx[-1] + 1, np.nan)
    full[idx] = values
    grid = ts[0] + np.arange(full.size) * np.timedelta64(period, "s")
    return PowerSeries(grid, full, period)


def to_matrix(series):
    """Arrange a series with one day per column (column-major order).

    Partial first and last days are padded with missing entries so that
    column ``j`` always starts at midnight.
    """
    if len(series) == 0:
        raise SizeError("empty series")
    period = series.sample_period
    m = SECONDS_PER_DAY // period
    t0 = series.timestamps[0]
    midnight = t0.astype("datetime64[D]").astype("datetime64[s]")
    offset = int((t0 - midnight).astype("int64"))
    if offset % period:
        raise IngestionError(
            f"first timestamp {t0} is not aligned to a {period}s grid from midnight"
        )
    lead = offset // period
    total = lead + len(series)
    n = math.ceil(total / m)
    flat = np.full(m * n, np.nan)
    flat[lead:total] = series.values
    data = flat.reshape((m, n), order="F")
    return PowerMatrix.from_array(data, sample_period=period, start=midnight)


def flatten(matrix):
    """Column-major flattening: index ``j*m + i`` holds entry ``(i, j)``."""
    if isinstance(matrix, PowerMatrix):
        matrix = matrix.data
    return np.asarray(matrix).ravel(order="F")


def default_epsilon(matrix):
    """Night threshold: rows averaging at most 0.5% of peak power count as night."""
    obs = matrix.data[matrix.observed]
    peak = float(obs.max()) if obs.size else 0.0
    return 0.005 * max(peak, 0.0) * matrix.n


def night_mask(matrix, epsilon=None):
    """Indices of rows whose observed row-sum is at most ``epsilon``."""
    if epsilon is None:
        epsilon = default_epsilon(matrix)
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    sums = np.where(matrix.observed, matrix.data, 0.0).sum(axis=1)
    return np.nonzero(sums <= epsilon)[0]
