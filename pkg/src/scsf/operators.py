"""Difference operators and the tilted-l1 (quantile) penalty."""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError, SizeError


def _check_len(n, need, name):
    if n < need:
        raise SizeError(f"{name} needs a length of at least {need}, got {n}")


def diff1(x, axis=0):
    """First difference ``y[k] = x[k+1] - x[k]``."""
    x = np.asarray(x, dtype=float)
    _check_len(x.shape[axis], 2, "diff1")
    return np.diff(x, n=1, axis=axis)


def diff2(x, axis=0):
    """Second difference ``y[k] = x[k] - 2 x[k+1] + x[k+2]``."""
    x = np.asarray(x, dtype=float)
    _check_len(x.shape[axis], 3, "diff2")
    return np.diff(x, n=2, axis=axis)


def diff1_lagged(x, lag=365, axis=0):
    """Lagged first difference ``y[k] = x[k+lag] - x[k]``."""
    x = np.asarray(x, dtype=float)
    if lag < 1:
        raise ConfigError(f"lag must be a positive integer, got {lag}")
    n = x.shape[axis]
    if n <= lag:
        raise SizeError(f"diff1_lagged with lag={lag} needs length > {lag}, got {n}")
    hi = np.take(x, np.arange(lag, n), axis=axis)
    lo = np.take(x, np.arange(0, n - lag), axis=axis)
    return hi - lo


@dataclass(frozen=True)
class DiffOperator:
    """Matrix-free difference operator with an explicit adjoint.

    ``kind`` is one of ``"first"``, ``"second"`` or ``"first_lagged"``.
    The operator acts along axis 0 of its input.
    """

    kind: str
    input_len: int
    lag: int = 365

    def __post_init__(self):
        if self.kind not in ("first", "second", "first_lagged"):
            raise ConfigError(f"unknown difference kind {self.kind!r}")
        if self.kind != "first_lagged":
            object.__setattr__(self, "lag", 1 if self.kind == "first" else 2)
        if self.input_len <= self.lag:
            raise SizeError(
                f"{self.kind} difference needs length > {self.lag}, got {self.input_len}"
            )

    @property
    def output_len(self):
        return self.input_len - self.lag

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[0] != self.input_len:
            raise SizeError(f"expected length {self.input_len}, got {x.shape[0]}")
        if self.kind == "first":
            return diff1(x)
        if self.kind == "second":
            return diff2(x)
        return diff1_lagged(x, self.lag)

    def adjoint(self, y):
        y = np.asarray(y, dtype=float)
        if y.shape[0] != self.output_len:
            raise SizeError(f"expected length {self.output_len}, got {y.shape[0]}")
        out = np.zeros((self.input_len,) + y.shape[1:])
        if self.kind == "second":
            k = self.output_len
            out[:k] += y
            out[1 : k + 1] -= 2.0 * y
            out[2 : k + 2] += y
        else:
            out[self.lag :] += y
            out[: self.output_len] -= y
        return out

    def matrix(self):
        """Sparse CSR representation (``output_len x input_len``)."""
        n, k = self.input_len, self.output_len
        if self.kind == "second":
            diags, offsets = [1.0, -2.0, 1.0], [0, 1, 2]
        else:
            diags, offsets = [-1.0, 1.0], [0, self.lag]
        return sp.diags(diags, offsets, shape=(k, n), format="csr")


def _check_tau(tau):
    if not 0.0 < tau < 1.0:
        raise ConfigError(f"tau must lie in (0, 1), got {tau}")


def tilted_l1(x, tau):
    """Tilted-l1 (pinball) penalty summed over all entries.

    ``phi(x) = tau * max(x, 0) + (1 - tau) * max(-x, 0)``, which equals
    ``0.5 |x| + (tau - 0.5) x``.
    """
    _check_tau(tau)
    x = np.asarray(x, dtype=float)
    return float(np.sum(tau * np.maximum(x, 0.0) + (1.0 - tau) * np.maximum(-x, 0.0)))


def prox_tilted_l1(v, tau, step):
    """Elementwise proximal map of ``step * phi_tau``."""
    _check_tau(tau)
    if step <= 0:
        raise ConfigError(f"step must be positive, got {step}")
    v = np.asarray(v, dtype=float)
    hi = step * tau
    lo = step * (1.0 - tau)
    return np.where(v > hi, v - hi, np.where(v < -lo, v + lo, 0.0))

