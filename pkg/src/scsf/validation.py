"""Hold-out validation: day split, residual sets, empirical CDFs and the KS test."""

from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, SizeError
from .kernels import ks_sup_sorted
from .model import clear_sky
from .solver import fit
from .timeseries import night_mask
from .weights import WeightParams, robust_weights


@dataclass(frozen=True)
class ResidualSet:
    """Residuals ``measured - clear_sky`` on observed daytime entries.

    ``label`` is ``"train"`` or ``"test"``; ``day_indices`` lists the
    contributing days.
    """

    values: np.ndarray
    label: str
    day_indices: np.ndarray

    def __len__(self):
        return self.values.size


def split_days(n, frac=0.1, seed=0):
    """Random train/test split of ``range(n)``.

    The test set has ``round(n * frac)`` days, rounding half to even
    (``n=365, frac=0.1`` gives 36). Both sets are returned sorted.
    """
    if not 0.0 < frac < 1.0:
        raise ConfigError(f"test fraction must lie in (0, 1), got {frac}")
    if n * frac < 1:
        raise ConfigError(f"n * frac = {n * frac} leaves no test days")
    size = int(round(n * frac))
    rng = np.random.default_rng(seed)
    test = np.sort(rng.choice(n, size=size, replace=False))
    train = np.setdiff1d(np.arange(n), test)
    return train, test


def residual_set(matrix, estimate, days, label, rows=None):
    """Collect residuals for ``days`` over observed, non-night entries."""
    days = np.asarray(days, dtype=int)
    if rows is None:
        rows = matrix.day_rows
    sub_obs = matrix.observed[np.ix_(rows, days)]
    resid = (matrix.data - estimate)[np.ix_(rows, days)]
    # column-major so the values follow time order
    vals = resid.T[sub_obs.T]
    return ResidualSet(np.ascontiguousarray(vals), label, days)


def holdout_fit(matrix, config, test_days, weights=None, return_report=False):
    """Fit with ``test_days`` masked out and return ``(model, train, test)``.

    Held-out columns are marked missing and given weight 0, so their
    coefficients in ``R`` are filled in by the smoothness and periodicity
    terms. Residuals are then taken against the original data on the
    fitted model's daytime rows. With ``return_report=True`` the
    :class:`~scsf.solver.FitReport` is appended to the tuple.
    """
    test_days = np.unique(np.asarray(test_days, dtype=int))
    if test_days.size and (test_days.min() < 0 or test_days.max() >= matrix.n):
        raise SizeError("test day index out of range")
    train_days = np.setdiff1d(np.arange(matrix.n), test_days)

    obs = matrix.observed.copy()
    obs[:, test_days] = False
    masked = replace(matrix, observed=obs)
    masked = replace(masked, night_rows=night_mask(masked, config.epsilon))
    if weights is None:
        weights = robust_weights(
            masked,
            WeightParams(window=config.weight_window, energy_ramp=config.energy_ramp),
            rows=masked.day_rows,
        )
    w = np.array(getattr(weights, "values", weights), dtype=float)
    w[test_days] = 0.0
    model, report = fit(masked, config, weights=w)

    est = clear_sky(model)
    rows = np.setdiff1d(np.arange(matrix.m), model.night_rows)
    train = residual_set(matrix, est, train_days, "train", rows)
    test = residual_set(matrix, est, test_days, "test", rows)
    if return_report:
        return model, train, test, report
    return model, train, test


@dataclass(frozen=True)
class EmpiricalCDF:
    """Right-continuous step function: ``F(x) = #{samples <= x} / N``."""

    values: np.ndarray  # sorted samples
    fractions: np.ndarray  # (i + 1) / N

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.searchsorted(self.values, x, side="right") / self.values.size

    def steps(self):
        """Unique sample values and the CDF level reached at each."""
        uniq, last = np.unique(self.values[::-1], return_index=True)
        idx = self.values.size - 1 - last
        return uniq, self.fractions[idx]


def empirical_cdf(samples):
    v = np.sort(np.asarray(samples, dtype=float).ravel())
    if v.size == 0:
        raise SizeError("empirical CDF of an empty sample")
    if np.isnan(v).any():
        raise ValueError("samples contain NaN")
    return EmpiricalCDF(v, np.arange(1, v.size + 1) / v.size)


def ks_statistic(a, b):
    """Two-sample Kolmogorov-Smirnov statistic ``sup |F_a - F_b|``.

    The supremum is attained at a sample point (as a right or left limit),
    and both limits are checked there, so the value is exact.
    """
    a = np.sort(np.asarray(getattr(a, "values", a), dtype=float).ravel())
    b = np.sort(np.asarray(getattr(b, "values", b), dtype=float).ravel())
    if a.size == 0 or b.size == 0:
        raise SizeError("KS statistic needs two nonempty samples")
    return float(ks_sup_sorted(a, b))


def ks_threshold(alpha, n1, n2):
    """Large-sample rejection threshold ``c(alpha) sqrt((n1 + n2) / (n1 n2))``.

    ``c(alpha) = sqrt(-ln(alpha / 2) / 2)`` is the usual asymptotic
    constant for the two-sample test (Smirnov's limit distribution).
    """
    if not 0.0 < alpha < 1.0:
        raise ConfigError(f"alpha must lie in (0, 1), got {alpha}")
    if n1 < 1 or n2 < 1:
        raise SizeError("sample sizes must be at least 1")
    c = np.sqrt(-np.log(alpha / 2.0) / 2.0)
    return float(c * np.sqrt((n1 + n2) / (n1 * n2)))
