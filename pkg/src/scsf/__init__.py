"""Statistical clear-sky fitting of PV power data by constrained low-rank factorization."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigError,
    DegenerateInputError,
    IngestionError,
    NumericError,
    ScsfError,
    SizeError,
)
from .model import FitConfig, LowRankModel, clear_sky, clear_sky_series, objective, svd_init  # noqa: E402
from .solver import FitReport, fit, solve_l_step, solve_r_step  # noqa: E402
from .synthetic import SyntheticSpec, corrupt, generate  # noqa: E402
from .timeseries import PowerMatrix, PowerSeries, ingest_csv, night_mask, to_matrix  # noqa: E402
from .validation import (  # noqa: E402
    ResidualSet,
    empirical_cdf,
    holdout_fit,
    ks_statistic,
    ks_threshold,
    split_days,
)
from .weights import DayWeights, compute_weights  # noqa: E402

__all__ = [
    "ConfigError", "DegenerateInputError", "IngestionError", "NumericError", "ScsfError",
    "SizeError", "FitConfig", "LowRankModel", "clear_sky", "clear_sky_series", "objective",
    "svd_init", "FitReport", "fit", "solve_l_step", "solve_r_step", "SyntheticSpec",
    "corrupt", "generate", "PowerMatrix", "PowerSeries", "ingest_csv", "night_mask",
    "to_matrix", "ResidualSet", "empirical_cdf", "holdout_fit", "ks_statistic",
    "ks_threshold", "split_days", "DayWeights", "compute_weights",
]
