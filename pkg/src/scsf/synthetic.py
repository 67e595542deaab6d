"""Synthetic clear-sky power matrices and the day-corruption procedure.

The generator is a self-contained stand-in for a physical irradiance
modeling chain: a cosine-power daily bell whose width and height follow the
seasons, an optional winter shading dip, and a geometric year-over-year
degradation factor.
"""

from dataclasses import asdict, dataclass, replace

import numpy as np

from .errors import ConfigError
from .timeseries import PowerMatrix

SUMMER_SOLSTICE_DOY = 172
PROFILE_EXPONENT = 1.5


@dataclass(frozen=True)
class SyntheticSpec:
    days: int = 365
    samples_per_day: int = 288
    peak_power: float = 5.0
    latitude_proxy: float = 0.25
    shade_depth: float = 0.0
    shade_center: float = 0.6
    shade_width: float = 0.03
    degradation_rate: float = 0.0
    seed: int = 0
    start_doy: int = 0

    def __post_init__(self):
        if self.days < 1 or self.samples_per_day < 1:
            raise ConfigError("days and samples_per_day must be positive")
        if not 0.0 <= self.latitude_proxy <= 0.5:
            raise ConfigError("latitude_proxy must lie in [0, 0.5]")
        if not 0.0 <= self.shade_depth <= 1.0:
            raise ConfigError("shade_depth must lie in [0, 1]")
        if not 0.0 <= self.degradation_rate < 1.0:
            raise ConfigError("degradation_rate must lie in [0, 1)")
        if self.peak_power <= 0:
            raise ConfigError("peak_power must be positive")

    def to_dict(self):
        return asdict(self)

    @property
    def sample_period(self):
        return 86400 // self.samples_per_day if 86400 % self.samples_per_day == 0 else None


def _season(spec):
    doy = np.arange(spec.days) + spec.start_doy
    # +1 at the summer solstice, -1 at the winter solstice
    return np.cos(2.0 * np.pi * (doy - SUMMER_SOLSTICE_DOY) / 365.0)


def daylight_widths(spec):
    """Full daylight width of each day, in samples."""
    return 0.5 * spec.samples_per_day * (1.0 + spec.latitude_proxy * _season(spec))


def never_lit_rows(spec):
    """Rows that lie outside every day's daylight window."""
    m = spec.samples_per_day
    half = 0.5 * daylight_widths(spec).max()
    offset = np.abs(np.arange(m) - 0.5 * m)
    return np.nonzero(offset >= half)[0]


def clear_sky_truth(spec):
    """Ground-truth clear-sky matrix (``samples_per_day x days``)."""
    m = spec.samples_per_day
    season = _season(spec)
    width = daylight_widths(spec)
    amp = spec.peak_power * (1.0 + 0.2 * spec.latitude_proxy * season)
    amp /= 1.0 + 0.2 * spec.latitude_proxy
    amp = amp * (1.0 - spec.degradation_rate) ** (np.arange(spec.days) / 365.0)

    offset = np.arange(m)[:, None] - 0.5 * m
    arg = np.pi * offset / width[None, :]
    lit = np.abs(offset) < 0.5 * width[None, :]
    bell = np.where(lit, np.clip(np.cos(arg), 0.0, None), 0.0) ** PROFILE_EXPONENT
    out = amp[None, :] * bell
    if spec.shade_depth > 0:
        frac = np.arange(m)[:, None] / m
        winter = 0.5 * (1.0 - season)[None, :]
        dip = np.exp(-0.5 * ((frac - spec.shade_center) / spec.shade_width) ** 2)
        out = out * (1.0 - spec.shade_depth * winter * dip)
    return out


def generate(spec):
    """Return ``(PowerMatrix, truth)`` for a synthetic spec.

    The matrix is fully observed and has its night rows populated with the
    generator's never-lit rows.
    """
    truth = clear_sky_truth(spec)
    matrix = PowerMatrix(
        truth.copy(),
        np.ones_like(truth, dtype=bool),
        night_rows=never_lit_rows(spec),
        sample_period=spec.sample_period,
        start=np.datetime64("2020-01-01T00:00:00", "s")
        + np.timedelta64(spec.start_doy, "D"),
    )
    return matrix, truth


def corrupt(matrix, day_fraction=0.3, factor_range=(0.0, 1.1), seed=0, per_day=False):
    """Scale a random subset of days by random factors.

    ``round(n * day_fraction)`` days (round-half-even) are drawn without
    replacement. Every value on a chosen day is multiplied by an independent
    uniform draw from ``factor_range``; with ``per_day=True`` a single draw
    is shared by the whole day instead.

    Returns ``(PowerMatrix, corrupted_day_indices)``.
    """
    if not 0.0 <= day_fraction <= 1.0:
        raise ConfigError("day_fraction must lie in [0, 1]")
    lo, hi = factor_range
    if hi < lo:
        raise ConfigError("factor_range must be (low, high) with low <= high")
    data = matrix.data if isinstance(matrix, PowerMatrix) else np.asarray(matrix, float)
    m, n = data.shape
    rng = np.random.default_rng(seed)
    count = int(round(n * day_fraction))
    days = np.sort(rng.choice(n, size=count, replace=False))
    out = data.copy()
    if per_day:
        factors = rng.uniform(lo, hi, size=(1, count))
    else:
        factors = rng.uniform(lo, hi, size=(m, count))
    out[:, days] *= factors
    if isinstance(matrix, PowerMatrix):
        return replace(matrix, data=out), days
    return PowerMatrix.from_array(out), days
