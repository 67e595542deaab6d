"""Per-day fit weights that concentrate the fit on approximately clear days."""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DegenerateInputError
from .timeseries import night_mask


@dataclass(frozen=True)
class WeightParams:
    """Knobs of the clear-day heuristic.

    energy_ramp : (lo, hi)
        A day needs ``lo`` of its local reference energy to get any weight
        and ``hi`` to get full weight.
    smooth_ramp : (lo, hi)
        Roughness as a multiple of the local reference roughness. At or below
        ``lo`` the smoothness score is 1, at or above ``hi`` it is 0.
    """

    window: int = 10
    energy_quantile: float = 0.9
    energy_ramp: tuple = (0.8, 0.95)
    smooth_quantile: float = 0.1
    smooth_ramp: tuple = (1.5, 2.5)

    def __post_init__(self):
        if self.window < 1:
            raise ConfigError("weight window must be at least one day")
        lo, hi = self.energy_ramp
        if not 0 <= lo < hi:
            raise ConfigError(f"energy ramp must satisfy 0 <= lo < hi, got {self.energy_ramp}")
        lo, hi = self.smooth_ramp
        if not 0 < lo < hi:
            raise ConfigError(f"smooth ramp must satisfy 0 < lo < hi, got {self.smooth_ramp}")
        for q in (self.energy_quantile, self.smooth_quantile):
            if not 0 < q < 1:
                raise ConfigError("weight quantiles must lie in (0, 1)")


@dataclass(frozen=True)
class DayWeights:
    values: np.ndarray
    energy: np.ndarray
    energy_score: np.ndarray
    roughness: np.ndarray
    smooth_score: np.ndarray
    params: WeightParams = field(default_factory=WeightParams)

    def __len__(self):
        return self.values.size


def daily_energy(matrix):
    """Observed column sums, rescaled to a full day for partially observed days."""
    obs = matrix.observed
    counts = obs.sum(axis=0)
    sums = np.where(obs, matrix.data, 0.0).sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        e = np.where(counts > 0, sums * matrix.m / np.maximum(counts, 1), 0.0)
    return e


def daily_roughness(matrix, energy=None, rows=None):
    """Energy-normalized norm of the intra-day second difference.

    Only second-difference stencils that lie on daytime rows and are fully
    observed contribute; the norm is rescaled for the stencils lost to
    missing data.
    """
    if energy is None:
        energy = daily_energy(matrix)
    if rows is None:
        rows = np.setdiff1d(np.arange(matrix.m), night_mask(matrix))
    data = matrix.data[rows]
    obs = matrix.observed[rows]
    n = matrix.n
    if rows.size < 3:
        return np.zeros(n)
    contiguous = (rows[2:] - rows[:-2]) == 2
    d2 = data[:-2] - 2.0 * data[1:-1] + data[2:]
    ok = obs[:-2] & obs[1:-1] & obs[2:] & contiguous[:, None]
    possible = max(int(contiguous.sum()), 1)
    valid = ok.sum(axis=0)
    sq = np.where(ok, d2, 0.0) ** 2
    nrm = np.sqrt(sq.sum(axis=0) * possible / np.maximum(valid, 1))
    peak = float(matrix.data[matrix.observed].max()) if matrix.observed.any() else 0.0
    eps_small = 1e-8 * peak if peak > 0 else 1e-300
    return nrm / np.maximum(energy, eps_small)


def _local_quantile(values, valid, window, q):
    n = values.size
    out = np.zeros(n)
    for j in range(n):
        lo, hi = max(0, j - window), min(n, j + window + 1)
        sel = values[lo:hi][valid[lo:hi]]
        out[j] = np.quantile(sel, q) if sel.size else 0.0
    return out


def _ramp(x, lo, hi):
    return np.clip((x - lo) / (hi - lo), 0.0, 1.0)


def compute_weights(matrix, params=None, rows=None, **kwargs):
    """Weights in ``[0, 1]`` favouring high-energy, smooth days.

    For each day the energy is compared with a local high quantile of the
    surrounding days' energies, and the roughness with a local low quantile
    of the surrounding roughness values. Each comparison is mapped through a
    linear ramp to ``[0, 1]`` and the weight is the product of the two.

    ``kwargs`` override fields of :class:`WeightParams`.
    """
    if params is None:
        params = WeightParams(**kwargs)
    elif kwargs:
        params = WeightParams(**{**params.__dict__, **kwargs})
    n = matrix.n
    if n < 3:
        raise ConfigError(f"need at least 3 days to compute weights, got {n}")

    seen = matrix.observed.any(axis=0)
    energy = daily_energy(matrix)
    ref_e = _local_quantile(energy, seen, params.window, params.energy_quantile)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(ref_e > 0, energy / np.where(ref_e > 0, ref_e, 1.0), 0.0)
    a = _ramp(ratio, *params.energy_ramp)

    rough = daily_roughness(matrix, energy, rows)
    usable = seen & (energy > 0)
    ref_s = _local_quantile(rough, usable, params.window, params.smooth_quantile)
    lo, hi = params.smooth_ramp
    with np.errstate(invalid="ignore", divide="ignore"):
        rel = np.where(ref_s > 0, rough / np.where(ref_s > 0, ref_s, 1.0), lo)
    b = 1.0 - _ramp(rel, lo, hi)

    w = np.where(seen, a * b, 0.0)
    return DayWeights(w, energy, a, rough, b, params)


def robust_weights(matrix, params=None, rows=None, min_days=5, threshold=0.1):
    """:func:`compute_weights` with a single fallback for too few clear days.

    If fewer than ``min_days`` days get weight above ``threshold``, the
    energy floor is relaxed to 0.6 once; if that still fails a
    :class:`DegenerateInputError` is raised.
    """
    params = params or WeightParams()
    w = compute_weights(matrix, params, rows)
    if np.count_nonzero(w.values > threshold) >= min(min_days, matrix.n):
        return w
    lo, hi = params.energy_ramp
    relaxed = WeightParams(**{**params.__dict__, "energy_ramp": (min(lo, 0.6), hi)})
    w = compute_weights(matrix, relaxed, rows)
    if np.count_nonzero(w.values > threshold) >= min(min_days, matrix.n):
        return w
    raise DegenerateInputError(
        f"fewer than {min_days} days look clear enough to fit (weight > {threshold})"
    )
