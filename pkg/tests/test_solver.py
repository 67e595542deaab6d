import numpy as np
import pytest

from oracles import l_step_problem, r_step_problem, subgradient_oracle
from scsf.errors import DegenerateInputError, NumericError
from scsf.model import FitConfig, clear_sky, objective
from scsf.solver import _repair_nonneg, balance_gauge, fit, solve_l_step, solve_r_step
from scsf.synthetic import SyntheticSpec, corrupt, generate
from scsf.timeseries import PowerMatrix


def toy(m, n, seed, night=(0,)):
    rng = np.random.default_rng(seed)
    D = rng.uniform(0, 5, (m, n))
    D[list(night)] = 0.0
    M = PowerMatrix(D, np.ones_like(D, bool), night_rows=np.array(night, dtype=int))
    W = rng.uniform(0, 1, (m, n))
    return M, W, rng


def random_l(rng, m, k, night=(0,)):
    """A feasible L: zero night rows, later columns summing to zero."""
    L = rng.uniform(0.5, 2.0, (m, k))
    L[:, 1:] = rng.normal(size=(m, k - 1))
    L[list(night)] = 0.0
    day = np.setdiff1d(np.arange(m), night)
    L[np.ix_(day, np.arange(1, k))] -= L[np.ix_(day, np.arange(1, k))].mean(axis=0)
    return L


# -- half-steps ------------------------------------------------------------------


def test_l_step_four_by_three_matches_oracle():
    M, W, rng = toy(4, 3, 11)
    cfg = FitConfig(k=1, mu_l=1.0, mu_r=1.0)
    R = rng.uniform(0, 2, (1, 3))
    L0 = rng.normal(size=(4, 1))
    L0[0] = 0
    L = solve_l_step(M, R, W, cfg, L0)
    prob = l_step_problem(M.data, W, R, [0], cfg.tau, cfg.mu_l)
    _, ref = subgradient_oracle(prob, L0.ravel(order="F"))
    val = prob.value(L.ravel(order="F"))
    assert abs(val - ref) <= 1e-4 * ref


def test_l_step_exact_data_is_a_fixed_point():
    i = np.arange(6.0)[:, None]
    L_true = np.hstack([1 + i, i - 2.5])
    L_true[0] = 0.0
    L_true[1:, 1] -= L_true[1:, 1].mean()
    R = np.array([[2.0, 3.0, 2.5, 4.0], [0.1, -0.2, 0.3, 0.0]])
    D = L_true @ R
    M = PowerMatrix(np.maximum(D, 0), np.ones_like(D, bool), night_rows=np.array([0]))
    W = np.ones_like(D)
    cfg = FitConfig(k=2, mu_l=1e-6, mu_r=1e-6)
    L = solve_l_step(M, R, W, cfg, L_true)
    f_start = objective(M, L_true, R, None, np.ones(4), cfg)[0]
    f_end = objective(M, L, R, None, np.ones(4), cfg)[0]
    # ADMM stops at a residual relative to the data scale
    assert f_end <= f_start + 1e-8 * np.abs(D).sum()
    assert objective(M, L, R, None, np.ones(4), cfg)[1][0] <= 1e-5 * np.abs(D).sum()


def test_l_step_enforces_hard_constraints_from_infeasible_start():
    M, W, rng = toy(6, 8, 3, night=(0, 5))
    cfg = FitConfig(k=2, mu_l=0.5, mu_r=0.5)
    R = rng.uniform(0, 2, (2, 8))
    L0 = rng.normal(size=(6, 2)) + 3.0  # column 2 sums far from zero, night rows nonzero
    L = solve_l_step(M, R, W, cfg, L0)
    assert abs(L[:, 1].sum()) <= 1e-8
    assert np.all(L[[0, 5]] == 0.0)
    LR = L @ R
    assert LR.min() >= -1e-6 * LR.max()


def test_r_step_without_second_year_has_no_beta():
    M, W, rng = toy(5, 6, 4)
    cfg = FitConfig(k=2, mu_l=1.0, mu_r=1.0)
    R, beta = solve_r_step(M, random_l(rng, 5, 2), W, cfg, rng.uniform(0, 1, (2, 6)))
    assert beta is None
    assert R.shape == (2, 6)


def test_r_step_beta_coupling_with_short_lag():
    M, W, rng = toy(5, 8, 5)
    cfg = FitConfig(k=2, mu_l=1.0, mu_r=1.0, lag=3)
    L = random_l(rng, 5, 2)
    R0 = rng.uniform(0, 2, (2, 8))
    R, beta = solve_r_step(M, L, W, cfg, R0)
    assert beta is not None and beta >= 0
    assert np.allclose(R[0, 3:], R[0, :-3] - beta, atol=1e-6)
    prob = r_step_problem(M.data, W, L, cfg.tau, cfg.mu_r, 3)
    _, ref = subgradient_oracle(prob, np.concatenate([R0.ravel(order="F"), [0.0]]))
    val = prob.value(np.concatenate([R.ravel(order="F"), [beta]]))
    assert abs(val - ref) <= 1e-4 * ref


def test_half_steps_reject_non_finite():
    M, W, rng = toy(4, 5, 6)
    cfg = FitConfig(k=1, mu_l=1.0, mu_r=1.0)
    R = np.full((1, 5), np.nan)
    with pytest.raises(NumericError):
        solve_l_step(M, R, W, cfg, np.ones((4, 1)))


def test_iteration_cap_is_flagged():
    M, W, rng = toy(6, 8, 7)
    cfg = FitConfig(k=2, mu_l=1.0, mu_r=1.0, subproblem_max_iter=3)
    L, info, _ = solve_l_step(M, rng.uniform(0, 2, (2, 8)), W, cfg, random_l(rng, 6, 2),
                              return_info=True)
    assert not info.converged
    assert info.iterations == 3
    assert np.all(np.isfinite(L))


# -- gauge balancing -------------------------------------------------------------------


def test_balance_gauge_keeps_product_and_lowers_regularizers():
    rng = np.random.default_rng(9)
    L = rng.normal(size=(8, 3)) * [1.0, 50.0, 0.01]
    R = rng.normal(size=(3, 400)) / np.array([1.0, 50.0, 0.01])[:, None]
    cfg = FitConfig(k=3, mu_l=1.0, mu_r=2.0)
    M = PowerMatrix.from_array(np.abs(L @ R))
    L2, R2, beta = balance_gauge(L, R, 0.3, cfg)
    assert np.allclose(L2 @ R2, L @ R)
    before = objective(M, L, R, None, np.ones(400), cfg)[0]
    after = objective(M, L2, R2, None, np.ones(400), cfg)[0]
    assert after <= before
    # beta follows the first row of R
    assert beta == pytest.approx(0.3 * R2[0, 0] / R[0, 0])


# -- outer loop ------------------------------------------------------------------------


def test_fit_rejects_all_zero():
    with pytest.raises(DegenerateInputError):
        fit(PowerMatrix.from_array(np.zeros((24, 10))))


def test_fit_reports_non_convergence():
    matrix, _ = generate(SyntheticSpec(days=40, samples_per_day=24))
    model, report = fit(matrix, FitConfig(k=3, max_iter=1))
    assert not report.converged
    assert report.iterations == 1
    assert len(report.objective_trace) == 1


@pytest.fixture(scope="module")
def short_fit():
    matrix, truth = generate(SyntheticSpec(days=60, samples_per_day=24))
    cfg = FitConfig(k=4)
    return matrix, truth, cfg, fit(matrix, cfg)


def test_fit_is_deterministic(short_fit):
    matrix, _, cfg, (model, report) = short_fit
    model2, report2 = fit(matrix, cfg)
    assert np.array_equal(model.L, model2.L)
    assert np.array_equal(model.R, model2.R)
    assert report.objective_trace == report2.objective_trace


def test_fit_trace_is_monotone(short_fit):
    report = short_fit[3][1]
    tot = report.totals
    assert np.all(tot[1:] <= tot[:-1] + 1e-6 * tot[0])
    assert tot[0] <= report.initial_objective or not np.isfinite(report.initial_objective)


def test_fit_report_contents(short_fit):
    model, report = short_fit[3]
    assert report.beta is None and model.beta is None
    assert report.weights_used is not None and len(report.weights_used) == 60
    assert len(report.subproblem_stats) == 2 * report.iterations
    d = report.to_dict()
    assert d["iterations"] == report.iterations
    assert "converged" in report.summary()


def test_refit_of_estimate_is_near_fixed_point(short_fit):
    matrix, truth, cfg, (model, _) = short_fit
    est = clear_sky(model)
    model2, _ = fit(PowerMatrix.from_array(est), cfg)
    est2 = clear_sky(model2)
    assert np.sqrt(np.mean((est2 - est) ** 2)) < 0.01 * est.max()


def test_unit_weights_put_most_residuals_below_zero(short_fit):
    matrix, _, cfg, _ = short_fit
    noisy, _ = corrupt(matrix, 0.3, seed=3)
    model, _ = fit(noisy, cfg, weights=np.ones(matrix.n))
    rows = np.setdiff1d(np.arange(matrix.m), model.night_rows)
    resid = (noisy.data - model.L @ model.R)[rows]
    assert np.mean(resid <= 1e-6 * noisy.data.max()) >= 0.8


def test_repair_restores_nonnegativity_with_small_steps():
    rng = np.random.default_rng(0)
    m, k, n = 50, 4, 30
    L = np.abs(rng.normal(size=(m, k)))
    L[:, 1:] = rng.normal(size=(m, k - 1)) * 0.1
    L[:3] = 0.0
    R = np.abs(rng.normal(size=(k, n)))
    R[0] += 1.0
    feasible = (L @ R).min(axis=0) >= 0
    R2 = _repair_nonneg(L, R)
    P = L @ R2
    assert P.min() >= -1e-12 * P.max()
    assert np.array_equal(R2[0], R[0])
    assert np.array_equal(R2[:, feasible], R[:, feasible])
    # the step is no larger than the one to any other feasible point we can name
    for j in np.nonzero(~feasible)[0]:
        zero_step = np.linalg.norm(R[1:, j])  # rows 1.. set to zero is feasible here
        assert np.linalg.norm(R2[1:, j] - R[1:, j]) <= zero_step + 1e-9
