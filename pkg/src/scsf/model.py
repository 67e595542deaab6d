"""Low-rank clear-sky model: configuration, state, initialization and objective."""

import json
from dataclasses import asdict, dataclass, field, fields, replace
from importlib import resources

import numpy as np

from .errors import ConfigError, SizeError
from .operators import tilted_l1
from .timeseries import PowerMatrix, flatten

FORMAT_TAG = "SCSF1"


def load_defaults():
    """Built-in defaults shipped in ``defaults.json``."""
    text = resources.files("scsf").joinpath("defaults.json").read_text()
    return json.loads(text)


_DEFAULTS = load_defaults()


@dataclass(frozen=True)
class FitConfig:
    """Hyperparameters of the fit.

    ``mu_l`` and ``mu_r`` left as ``None`` are resolved from the data:
    ``mu_l = mu_l_scale * sigma_1 / m`` and ``mu_r = mu_r_scale * sigma_1 / n``
    where ``sigma_1`` is the top singular value of the data matrix.
    ``epsilon`` left as ``None`` uses :func:`scsf.timeseries.default_epsilon`.
    """

    k: int = _DEFAULTS["k"]
    tau: float = _DEFAULTS["tau"]
    mu_l: float | None = None
    mu_r: float | None = None
    mu_l_scale: float = _DEFAULTS["mu_l_scale"]
    mu_r_scale: float = _DEFAULTS["mu_r_scale"]
    epsilon: float | None = None
    max_iter: int = _DEFAULTS["max_iter"]
    rel_tol: float = _DEFAULTS["rel_tol"]
    subproblem_tol: float = _DEFAULTS["subproblem_tol"]
    subproblem_max_iter: int = _DEFAULTS["subproblem_max_iter"]
    lag: int = _DEFAULTS["lag"]
    weight_window: int = 10
    energy_ramp: tuple = (0.8, 0.95)

    def __post_init__(self):
        if not isinstance(self.k, (int, np.integer)) or self.k < 1:
            raise ConfigError(f"k must be a positive integer, got {self.k!r}")
        if not 0.0 < self.tau < 1.0:
            raise ConfigError(f"tau must lie in (0, 1), got {self.tau}")
        for name in ("mu_l", "mu_r"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ConfigError(f"{name} must be positive, got {v}")
        if not self.mu_l_scale > 0 or not self.mu_r_scale > 0:
            raise ConfigError("regularization scales must be positive")
        if self.epsilon is not None and self.epsilon < 0:
            raise ConfigError(f"epsilon must be nonnegative, got {self.epsilon}")
        if self.max_iter < 1:
            raise ConfigError("max_iter must be at least 1")
        if not self.rel_tol > 0:
            raise ConfigError(f"rel_tol must be positive, got {self.rel_tol}")
        if not self.subproblem_tol > 0 or self.subproblem_max_iter < 1:
            raise ConfigError("subproblem tolerance and iteration cap must be positive")
        if self.lag < 1:
            raise ConfigError("lag must be a positive integer")
        object.__setattr__(self, "energy_ramp", tuple(self.energy_ramp))

    def resolve(self, data):
        """Return a copy with ``mu_l`` and ``mu_r`` filled in from ``data``."""
        if self.mu_l is not None and self.mu_r is not None:
            return self
        data = np.asarray(data, dtype=float)
        m, n = data.shape
        sigma1 = float(np.linalg.norm(data, 2))
        if sigma1 <= 0:
            sigma1 = 1.0
        return replace(
            self,
            mu_l=self.mu_l if self.mu_l is not None else self.mu_l_scale * sigma1 / m,
            mu_r=self.mu_r if self.mu_r is not None else self.mu_r_scale * sigma1 / n,
        )

    def to_dict(self):
        d = asdict(self)
        d["energy_ramp"] = list(self.energy_ramp)
        return d

    @classmethod
    def from_dict(cls, d):
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass(frozen=True)
class LowRankModel:
    """Fitted factors ``L`` (m x k) and ``R`` (k x n) with optional offset ``beta``.

    ``beta`` is the year-over-year drop of the first row of ``R``:
    ``R[0, j + lag] = R[0, j] - beta``.
    """

    L: np.ndarray
    R: np.ndarray
    beta: float | None = None
    night_rows: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    config: dict = field(default_factory=dict)

    def __post_init__(self):
        L = np.asarray(self.L, dtype=float)
        R = np.asarray(self.R, dtype=float)
        if L.ndim != 2 or R.ndim != 2 or L.shape[1] != R.shape[0]:
            raise SizeError(f"incompatible factor shapes {L.shape} and {R.shape}")
        object.__setattr__(self, "L", L)
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "night_rows", np.asarray(self.night_rows, dtype=int))

    @property
    def k(self):
        return self.L.shape[1]

    @property
    def m(self):
        return self.L.shape[0]

    @property
    def n(self):
        return self.R.shape[1]

    @property
    def degradation_rate(self):
        """Fractional annual loss ``beta / median(R[0, :lag])``, or ``None``."""
        if self.beta is None:
            return None
        lag = int(self.config.get("lag", 365))
        ref = float(np.median(self.R[0, :lag]))
        return self.beta / ref if ref != 0 else float("nan")

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(dumps(self))

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return loads(fh.read())


def _fmt_row(values):
    return " ".join(repr(float(v)) for v in values)


def dumps(model):
    """Serialize to the flat text format with an ``SCSF1`` header."""
    lines = [
        FORMAT_TAG,
        f"m {model.m}",
        f"n {model.n}",
        f"k {model.k}",
        f"beta {'none' if model.beta is None else repr(float(model.beta))}",
        "night_rows " + " ".join([str(len(model.night_rows))] + [str(i) for i in model.night_rows]),
        "config " + json.dumps(model.config, sort_keys=True),
        "L",
    ]
    lines += [_fmt_row(row) for row in model.L]
    lines.append("R")
    lines += [_fmt_row(row) for row in model.R]
    return "\n".join(lines) + "\n"


def loads(text):
    lines = text.splitlines()
    if not lines or lines[0].strip() != FORMAT_TAG:
        raise ConfigError(f"not a {FORMAT_TAG} model file")
    head = {}
    pos = 1
    while lines[pos] != "L":
        key, _, rest = lines[pos].partition(" ")
        head[key] = rest
        pos += 1
    m, n, k = int(head["m"]), int(head["n"]), int(head["k"])
    L = np.array([[float(v) for v in lines[pos + 1 + i].split()] for i in range(m)]).reshape(m, k)
    pos += 1 + m
    if lines[pos] != "R":
        raise ConfigError("malformed model file: missing R block")
    R = np.array([[float(v) for v in lines[pos + 1 + i].split()] for i in range(k)]).reshape(k, n)
    beta = None if head["beta"] == "none" else float(head["beta"])
    nr = [int(v) for v in head["night_rows"].split()]
    night = np.array(nr[1 : 1 + nr[0]], dtype=int)
    config = json.loads(head["config"])
    return LowRankModel(L, R, beta, night, config)


def svd_init(matrix, k):
    """Rank-``k`` truncated SVD split as ``L0 = U_k``, ``R0 = S_k V_k^T``.

    Missing entries count as zero. Each singular pair is sign-flipped so the
    left vector has a nonnegative sum (ties broken by making the entry of
    largest magnitude positive), which makes the result deterministic.
    """
    data = matrix.data if isinstance(matrix, PowerMatrix) else np.asarray(matrix, float)
    m, n = data.shape
    if not 1 <= k <= min(m, n):
        raise ConfigError(f"rank k={k} must lie in [1, min(m, n)={min(m, n)}]")
    U, s, Vt = np.linalg.svd(data, full_matrices=False)
    U, s, Vt = U[:, :k].copy(), s[:k], Vt[:k].copy()
    for i in range(k):
        total = U[:, i].sum()
        if abs(total) <= 1e-12 * np.abs(U[:, i]).sum():
            flip = U[np.argmax(np.abs(U[:, i])), i] < 0
        else:
            flip = total < 0
        if flip:
            U[:, i] *= -1.0
            Vt[i] *= -1.0
    return U, s[:, None] * Vt


def fit_weights_matrix(matrix, weights):
    """Per-entry weights: the day weight on observed entries, 0 on missing ones."""
    w = np.asarray(getattr(weights, "values", weights), dtype=float)
    if w.shape != (matrix.n,):
        raise SizeError(f"expected {matrix.n} day weights, got shape {w.shape}")
    return np.where(matrix.observed, w[None, :], 0.0)


def objective(matrix, L, R, beta, weights, config):
    """Total objective and its four parts ``(f1, f2, f3, f4)``.

    ``f1`` is the tilted-l1 loss of the observed, day-weighted residuals;
    ``f2`` and ``f3`` are unsquared Frobenius norms of second differences of
    ``L`` (down columns) and ``R`` (along rows); ``f4`` is the unsquared norm
    of the lagged first difference of ``R`` without its first row, present
    only when there are more than ``lag`` days.
    """
    L = np.asarray(L, dtype=float)
    R = np.asarray(R, dtype=float)
    if L.shape[0] != matrix.m or R.shape[1] != matrix.n or L.shape[1] != R.shape[0]:
        raise SizeError(
            f"factor shapes {L.shape}, {R.shape} do not match data {matrix.data.shape}"
        )
    if config.mu_l is None or config.mu_r is None:
        config = config.resolve(matrix.data)
    W = fit_weights_matrix(matrix, weights)
    resid = (matrix.data - L @ R) * W
    f1 = tilted_l1(resid, config.tau)
    f2 = config.mu_l * np.linalg.norm(np.diff(L, 2, axis=0)) if L.shape[0] > 2 else 0.0
    f3 = config.mu_r * np.linalg.norm(np.diff(R, 2, axis=1)) if R.shape[1] > 2 else 0.0
    lag = config.lag
    if R.shape[1] > lag and R.shape[0] > 1:
        f4 = config.mu_r * np.linalg.norm(R[1:, lag:] - R[1:, :-lag])
    else:
        f4 = 0.0
    parts = (float(f1), float(f2), float(f3), float(f4))
    return sum(parts), parts


def clear_sky(model):
    """Clear-sky matrix ``L @ R`` with negative round-off clamped to zero."""
    return np.maximum(model.L @ model.R, 0.0)


def clear_sky_series(model):
    return flatten(clear_sky(model))
