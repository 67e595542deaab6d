import numpy as np
import pytest

from scsf.model import FitConfig
from scsf.solver import fit
from scsf.synthetic import SyntheticSpec, corrupt, generate

# acceptance verdicts, printed in the terminal summary so they survive
# pytest's output capture
ACCEPTANCE = {}


def record(criterion, ok, detail):
    ACCEPTANCE.setdefault(criterion, []).append((bool(ok), detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in sorted(ACCEPTANCE):
        for ok, detail in ACCEPTANCE[criterion]:
            terminalreporter.write_line(
                f"criterion {criterion}: {'PASS' if ok else 'FAIL'}  {detail}"
            )


def _corrupted_instance(m, n, seed=1):
    clean, truth = generate(SyntheticSpec(days=n, samples_per_day=m))
    noisy, days = corrupt(clean, 0.3, (0.0, 1.1), seed=seed)
    return noisy, truth, days


@pytest.fixture(scope="session")
def small_fit():
    """Fitted corrupted synthetic year at 24 samples per day."""
    import time

    matrix, truth, days = _corrupted_instance(24, 365)
    t0 = time.perf_counter()
    model, report = fit(matrix, FitConfig())
    return {
        "matrix": matrix,
        "truth": truth,
        "days": days,
        "model": model,
        "report": report,
        "seconds": time.perf_counter() - t0,
    }


@pytest.fixture(scope="session")
def large_fit():
    """Fitted corrupted synthetic year at 5-minute resolution."""
    import time

    matrix, truth, days = _corrupted_instance(288, 365)
    t0 = time.perf_counter()
    model, report = fit(matrix, FitConfig())
    return {
        "matrix": matrix,
        "truth": truth,
        "days": days,
        "model": model,
        "report": report,
        "seconds": time.perf_counter() - t0,
    }


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
