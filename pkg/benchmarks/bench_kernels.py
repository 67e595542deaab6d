"""Time the numba kernels against their numpy fallbacks.

    python benchmarks/bench_kernels.py [--m 288] [--n 365] [--repeat 50] [--fit]

Kernel timings are taken in one process, since both variants are always
importable. With ``--fit`` a small end-to-end fit is also timed in two
subprocesses, one with ``SCSF_DISABLE_NUMBA=1``.
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from scsf import kernels

FIT_SNIPPET = """
import time
from scsf.model import FitConfig
from scsf.solver import fit
from scsf.synthetic import SyntheticSpec, corrupt, generate
m, _ = generate(SyntheticSpec(days={days}, samples_per_day={m}))
m, _ = corrupt(m, seed=1)
fit(m, FitConfig(k=4, max_iter=2))  # warm-up, compiles kernels
t = time.perf_counter()
_, rep = fit(m, FitConfig(k=4))
print(time.perf_counter() - t, rep.iterations)
"""


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def kernel_cases(m, n, seed=0):
    rng = np.random.default_rng(seed)
    pred = rng.normal(1, 1, (m, n))
    u = rng.normal(0, 0.3, (m, n))
    c = np.abs(rng.normal(1, 1, (m, n)))
    data = np.abs(rng.normal(1, 1, (m, n)))
    wts = rng.uniform(0, 1, (m, n))
    a = np.sort(rng.normal(size=m * n))
    b = np.sort(rng.normal(size=m * n // 10))

    def block(impl):
        return lambda: impl(pred, u.copy(), c.copy(), data, wts, 0.9, 1.0, 1.6)

    return {
        "fit_block_update": (block(kernels.fit_block_update_nb),
                             block(kernels.fit_block_update_np)),
        "weighted_tilted_l1": (lambda: kernels.weighted_tilted_l1_nb(pred - data, wts, 0.9),
                               lambda: kernels.weighted_tilted_l1_np(pred - data, wts, 0.9)),
        "ks_sup_sorted": (lambda: kernels.ks_sup_sorted_nb(a, b),
                          lambda: kernels.ks_sup_sorted_np(a, b)),
    }


def time_fit(disable, m, days):
    env = dict(os.environ, SCSF_DISABLE_NUMBA="1" if disable else "0")
    code = FIT_SNIPPET.format(m=m, days=days)
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True,
                         text=True, check=True).stdout.split()
    return float(out[0]), int(out[1])


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--m", type=int, default=288)
    p.add_argument("--n", type=int, default=365)
    p.add_argument("--repeat", type=int, default=50)
    p.add_argument("--fit", action="store_true", help="also time an end-to-end fit")
    args = p.parse_args(argv)

    if not kernels.USE_NUMBA:
        print("note: numba is disabled in this process; *_nb kernels run as plain python")
    print(f"kernels on a {args.m} x {args.n} block, best of {args.repeat}")
    print(f"{'kernel':<22}{'numba (ms)':>12}{'numpy (ms)':>12}{'speedup':>10}")
    for name, (nb, npy) in kernel_cases(args.m, args.n).items():
        nb()  # compile
        t_nb = best_of(nb, args.repeat)
        t_np = best_of(npy, args.repeat)
        print(f"{name:<22}{1e3 * t_nb:>12.3f}{1e3 * t_np:>12.3f}{t_np / t_nb:>10.2f}")

    if args.fit:
        m, days = 24, 365
        t_nb, it_nb = time_fit(False, m, days)
        t_np, it_np = time_fit(True, m, days)
        print(f"\nfit m={m} n={days} k=4")
        print(f"  numba: {t_nb:.2f} s ({it_nb} iterations)")
        print(f"  numpy: {t_np:.2f} s ({it_np} iterations)")


if __name__ == "__main__":
    main()
