"""Command-line interface: ``scsf fit | validate | synth | weights``.

Every run writes ``manifest.json`` into its output directory with the
command, the fully materialized configuration, input checksums, the seed,
the artifacts written and the wall-clock duration.

Exit codes: 0 success, 1 validation failure, 2 usage or input error,
3 numeric failure.
"""

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
import time
from dataclasses import replace

import numpy as np

from . import __version__
from .errors import ConfigError, DegenerateInputError, IngestionError, NumericError, SizeError
from .model import FitConfig, clear_sky, load_defaults, svd_init
from .solver import fit
from .synthetic import SyntheticSpec, corrupt, generate
from .timeseries import PowerMatrix, flatten, ingest_csv, night_mask, to_matrix
from .validation import empirical_cdf, holdout_fit, ks_statistic, ks_threshold, split_days
from .weights import WeightParams, robust_weights

log = logging.getLogger("scsf")

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_NUMERIC = 3

_CONFIG_FLAGS = {
    "k": "k",
    "tau": "tau",
    "mu_l": "mu_l",
    "mu_r": "mu_r",
    "epsilon": "epsilon",
    "max_iter": "max_iter",
    "rel_tol": "rel_tol",
    "weight_window": "weight_window",
}


def _fmt(x):
    """Round-trip decimal text for a float; empty for NaN (missing)."""
    x = float(x)
    return "" if np.isnan(x) else repr(x)


def _iso(ts):
    return str(np.datetime64(ts, "s"))


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


class _Run:
    """Tracks artifacts and writes the manifest at the end of a command."""

    def __init__(self, command, out_dir):
        self.command = command
        self.out_dir = out_dir
        self.artifacts = []
        self.inputs = {}
        self.config = {}
        self.seed = None
        self.t0 = time.perf_counter()
        os.makedirs(out_dir, exist_ok=True)

    def path(self, name):
        p = os.path.join(self.out_dir, name)
        self.artifacts.append(name)
        return p

    def add_input(self, path):
        self.inputs[os.path.abspath(path)] = _sha256(path)

    def finish(self, status):
        manifest = {
            "command": self.command,
            "version": __version__,
            "config": self.config,
            "inputs": self.inputs,
            "seed": self.seed,
            "artifacts": self.artifacts,
            "status": status,
            "seconds": time.perf_counter() - self.t0,
        }
        with open(os.path.join(self.out_dir, "manifest.json"), "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")


# -- config assembly -------------------------------------------------------------


def build_config(args):
    """Flags override the ``--config`` JSON file, which overrides built-in defaults."""
    values = {}
    if getattr(args, "config", None):
        try:
            with open(args.config, encoding="utf-8") as fh:
                values.update(json.load(fh))
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {args.config}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {args.config} is not valid JSON: {exc}") from None
    for flag, key in _CONFIG_FLAGS.items():
        v = getattr(args, flag, None)
        if v is not None:
            values[key] = v
    lo, hi = getattr(args, "energy_ramp_lo", None), getattr(args, "energy_ramp_hi", None)
    if lo is not None or hi is not None:
        base = values.get("energy_ramp", FitConfig().energy_ramp)
        values["energy_ramp"] = (base[0] if lo is None else lo, base[1] if hi is None else hi)
    try:
        return FitConfig.from_dict(values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def _load_matrix(args, run):
    if not os.path.exists(args.input):
        raise IngestionError(f"input file not found: {args.input}")
    run.add_input(args.input)
    series = ingest_csv(args.input, args.ts_col, args.power_col,
                        drop_duplicates=args.drop_duplicates,
                        sample_period=args.sample_period)
    return to_matrix(series)


# -- writers ---------------------------------------------------------------------


def _write_rows(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _write_grid(path, grid):
    with open(path, "w", encoding="utf-8") as fh:
        for row in np.asarray(grid):
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _write_series(path, matrix, values, name="power"):
    ts = matrix.timestamps()
    vals = flatten(values)
    _write_rows(path, ["timestamp", name], ((_iso(t), _fmt(v)) for t, v in zip(ts, vals)))


def _masked(matrix):
    return np.where(matrix.observed, matrix.data, np.nan)


# -- commands --------------------------------------------------------------------


def cmd_fit(args):
    config = build_config(args)
    run = _Run("fit", args.out_dir)
    matrix = _load_matrix(args, run)
    run.config = config.to_dict()
    model, report = fit(matrix, config)
    run.config = report.config.to_dict()

    est = clear_sky(model)
    measured = flatten(_masked(matrix))
    cs = flatten(est)
    _write_rows(
        run.path("clear_sky.csv"),
        ["timestamp", "measured", "clear_sky", "residual"],
        (
            (_iso(t), _fmt(p), _fmt(c), _fmt(p - c))
            for t, p, c in zip(matrix.timestamps(), measured, cs)
        ),
    )
    model.save(run.path("model.scsf"))
    with open(run.path("report.txt"), "w", encoding="utf-8") as fh:
        fh.write(report.summary() + "\n")
    with open(run.path("report.json"), "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2)
        fh.write("\n")
    _write_grid(run.path("heatmap_measured.csv"), _masked(matrix))
    _write_grid(run.path("heatmap_clear_sky.csv"), est)

    # singular vectors of the raw data, as used for the starting point
    fitted = replace(matrix, night_rows=model.night_rows)
    L0, R0 = svd_init(fitted, model.k)
    _write_grid(run.path("svd_left.csv"), L0)
    _write_grid(run.path("svd_right.csv"), R0)

    if model.beta is not None:
        with open(run.path("degradation.json"), "w", encoding="utf-8") as fh:
            json.dump({"beta": model.beta, "annual_rate": model.degradation_rate}, fh, indent=2)
            fh.write("\n")
    print(report.summary())
    run.finish("converged" if report.converged else "not converged")
    return EXIT_OK


def cmd_validate(args):
    config = build_config(args)
    if not 0.0 < args.test_frac < 1.0:
        raise ConfigError(f"--test-frac must lie in (0, 1), got {args.test_frac}")
    if not 0.0 < args.alpha < 1.0:
        raise ConfigError(f"--alpha must lie in (0, 1), got {args.alpha}")
    run = _Run("validate", args.out_dir)
    run.seed = args.seed
    matrix = _load_matrix(args, run)
    run.config = config.to_dict()
    _, test_days = split_days(matrix.n, args.test_frac, args.seed)
    model, train, test, report = holdout_fit(matrix, config, test_days, return_report=True)
    run.config = report.config.to_dict()
    if len(train) == 0 or len(test) == 0:
        raise DegenerateInputError("no observed daytime residuals in one of the sets")

    for res in (train, test):
        cdf = empirical_cdf(res.values)
        xs, fs = cdf.steps()
        _write_rows(run.path(f"cdf_{res.label}.csv"), ["value", "cumulative_fraction"],
                    ((_fmt(x), _fmt(f)) for x, f in zip(xs, fs)))

    stat = ks_statistic(train.values, test.values)
    n1, n2 = len(train), len(test)
    thr = ks_threshold(args.alpha, n1, n2)
    passed = stat < thr
    lines = [
        f"ks_statistic {_fmt(stat)}",
        f"n_train {n1}",
        f"n_test {n2}",
        f"test_days {' '.join(str(d) for d in test_days)}",
        f"threshold_alpha_0.05 {_fmt(ks_threshold(0.05, n1, n2))}",
        f"threshold_alpha_1e-10 {_fmt(ks_threshold(1e-10, n1, n2))}",
        f"alpha {_fmt(args.alpha)}",
        f"threshold {_fmt(thr)}",
        f"result {'pass' if passed else 'fail'}",
    ]
    with open(run.path("summary.txt"), "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    print("\n".join(lines))
    run.finish("pass" if passed else "fail")
    return EXIT_OK if passed else EXIT_FAIL


def cmd_synth(args):
    spec = SyntheticSpec(
        days=args.days,
        samples_per_day=args.samples_per_day,
        peak_power=args.peak_power,
        latitude_proxy=args.latitude_proxy,
        shade_depth=args.shade_depth,
        degradation_rate=args.degradation,
        seed=args.seed,
    )
    if spec.sample_period is None:
        raise ConfigError("--samples-per-day must divide 86400")
    if not 0.0 <= args.corrupt_frac <= 1.0:
        raise ConfigError("--corrupt-frac must lie in [0, 1]")
    run = _Run("synth", args.out_dir)
    run.seed = args.seed
    clean, truth = generate(spec)
    dirty, days = corrupt(clean, args.corrupt_frac, (args.factor_lo, args.factor_hi),
                          seed=args.seed, per_day=args.per_day)
    _write_series(run.path("clean.csv"), clean, clean.data)
    _write_series(run.path("corrupted.csv"), dirty, dirty.data)
    _write_series(run.path("truth.csv"), clean, truth)
    sidecar = {
        "spec": spec.to_dict(),
        "corrupt_frac": args.corrupt_frac,
        "factor_range": [args.factor_lo, args.factor_hi],
        "per_day": args.per_day,
        "corrupted_days": [int(d) for d in days],
    }
    with open(run.path("synth_spec.json"), "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=2)
        fh.write("\n")
    run.config = sidecar
    run.finish("ok")
    return EXIT_OK


def cmd_weights(args):
    config = build_config(args)
    run = _Run("weights", args.out_dir)
    matrix = _load_matrix(args, run)
    run.config = config.to_dict()
    matrix = replace(matrix, night_rows=night_mask(matrix, config.epsilon))
    w = robust_weights(
        matrix,
        WeightParams(window=config.weight_window, energy_ramp=config.energy_ramp),
        rows=matrix.day_rows,
    )
    dates = matrix.start + np.arange(matrix.n) * np.timedelta64(1, "D") if matrix.start else None
    rows = []
    for j in range(matrix.n):
        day = str(dates[j].astype("datetime64[D]")) if dates is not None else str(j)
        rows.append((j, day, _fmt(w.energy[j]), _fmt(w.energy_score[j]),
                     _fmt(w.roughness[j]), _fmt(w.smooth_score[j]), _fmt(w.values[j])))
    _write_rows(run.path("weights.csv"),
                ["day", "date", "energy", "energy_score", "roughness", "smooth_score", "weight"],
                rows)
    print(f"{np.count_nonzero(w.values > 0.1)} of {matrix.n} days have weight above 0.1")
    run.finish("ok")
    return EXIT_OK


# -- argument parsing --------------------------------------------------------------


def _shared(p, need_input=True):
    p.add_argument("--input", required=need_input, help="CSV with a header row")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--ts-col", default=None, help="timestamp column name or index")
    p.add_argument("--power-col", default=None, help="power column name or index")
    p.add_argument("--drop-duplicates", action="store_true",
                   help="drop rows whose timestamp does not advance (e.g. DST repeats)")
    p.add_argument("--sample-period", type=int, default=None,
                   help="native spacing in seconds (inferred from the data by default)")
    p.add_argument("--config", default=None, help="JSON file of fit settings")
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--tau", type=float, default=None)
    p.add_argument("--mu-l", type=float, default=None)
    p.add_argument("--mu-r", type=float, default=None)
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--max-iter", type=int, default=None)
    p.add_argument("--rel-tol", type=float, default=None)
    p.add_argument("--weight-window", type=int, default=None)
    p.add_argument("--energy-ramp-lo", type=float, default=None)
    p.add_argument("--energy-ramp-hi", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)


def build_parser():
    parser = argparse.ArgumentParser(prog="scsf", description="Statistical clear-sky fitting")
    parser.add_argument("--version", action="version", version=f"scsf {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit the clear-sky model to a power series")
    _shared(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("validate", help="hold-out test with a two-sample KS statistic")
    _shared(p)
    p.add_argument("--test-frac", type=float, default=0.1)
    p.add_argument("--alpha", type=float, default=1e-10)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("weights", help="compute per-day fit weights only")
    _shared(p)
    p.set_defaults(func=cmd_weights)

    p = sub.add_parser("synth", help="generate a synthetic clear-sky data set")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--days", type=int, default=365)
    p.add_argument("--samples-per-day", type=int, default=288)
    p.add_argument("--peak-power", type=float, default=5.0)
    p.add_argument("--latitude-proxy", type=float, default=0.25)
    p.add_argument("--shade-depth", type=float, default=0.0)
    p.add_argument("--degradation", type=float, default=0.0)
    p.add_argument("--corrupt-frac", type=float, default=0.3)
    p.add_argument("--factor-lo", type=float, default=0.0)
    p.add_argument("--factor-hi", type=float, default=1.1)
    p.add_argument("--per-day", action="store_true", help="one factor per corrupted day")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, IngestionError, SizeError, FileNotFoundError) as exc:
        print(f"scsf {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericError, DegenerateInputError, FloatingPointError) as exc:
        print(f"scsf {args.command}: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
