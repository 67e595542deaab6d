import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from scsf.errors import ConfigError, SizeError
from scsf.operators import (
    DiffOperator,
    diff1,
    diff1_lagged,
    diff2,
    prox_tilted_l1,
    tilted_l1,
)

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def grid_prox(v, tau, step, lo=-3.0, hi=3.0, h=1e-5):
    """Minimize phi_tau(x) + (x - v)^2 / (2 step) over a uniform grid."""
    x = np.arange(lo, hi + h / 2, h)
    f = tau * np.maximum(x, 0) + (1 - tau) * np.maximum(-x, 0) + (x - v) ** 2 / (2 * step)
    return x[np.argmin(f)]


# -- differences ---------------------------------------------------------------


def test_diff1_examples():
    assert np.array_equal(diff1([1, 2, 4]), [1, 2])
    assert np.array_equal(diff1(np.full(5, 3.0)), np.zeros(4))
    assert np.array_equal(diff1([0, 1, 0, 1]), [1, -1, 1])


def test_diff2_examples():
    assert np.array_equal(diff2([1, 2, 3, 4]), [0, 0])
    assert np.array_equal(diff2([1, 2, 4]), [1])


def test_diff1_lagged_examples():
    x = np.random.default_rng(0).normal(size=20)
    assert np.array_equal(diff1_lagged(x, 1), diff1(x))
    periodic = np.tile(np.random.default_rng(1).normal(size=365), 2)
    assert np.array_equal(diff1_lagged(periodic, 365), np.zeros(365))
    ramp = np.arange(400, dtype=float)
    y = diff1_lagged(ramp, 365)
    assert y.shape == (35,)
    assert np.all(y == 365.0)


@pytest.mark.parametrize(
    "fn, n",
    [(diff1, 1), (diff2, 2), (lambda x: diff1_lagged(x, 5), 5)],
)
def test_short_inputs_raise(fn, n):
    with pytest.raises(SizeError):
        fn(np.zeros(n))


@given(arrays(float, st.integers(3, 40), elements=finite))
def test_diff2_is_diff1_twice(x):
    assert np.allclose(diff2(x), diff1(diff1(x)), atol=1e-9)


@pytest.mark.parametrize("kind, lag", [("first", 1), ("second", 2), ("first_lagged", 3)])
def test_diff_operator_matches_matrix_and_adjoint(kind, lag):
    rng = np.random.default_rng(7)
    n = 11
    op = DiffOperator(kind, n, lag)
    A = op.matrix().toarray()
    assert A.shape == (n - lag, n)
    x = rng.normal(size=(n, 3))
    y = rng.normal(size=(n - lag, 3))
    assert np.allclose(op(x), A @ x)
    assert np.allclose(op.adjoint(y), A.T @ y)
    # <Ax, y> = <x, A^T y>
    assert np.isclose(np.sum(op(x) * y), np.sum(x * op.adjoint(y)))


def test_diff_operator_rejects_unknown_kind():
    with pytest.raises(ConfigError):
        DiffOperator("third", 10)


# -- tilted l1 -----------------------------------------------------------------


def test_tilted_l1_examples():
    assert tilted_l1([0.0], 0.3) == 0.0
    assert tilted_l1([1.0], 0.9) == pytest.approx(0.9)
    assert tilted_l1([-1.0], 0.9) == pytest.approx(0.1)
    assert tilted_l1([1.0, -1.0, 2.0], 0.9) == pytest.approx(2.8)


@pytest.mark.parametrize("tau", [0.0, 1.0, -0.1, 1.5])
def test_tilted_l1_rejects_bad_tau(tau):
    with pytest.raises(ConfigError):
        tilted_l1([1.0], tau)


@given(
    arrays(float, st.integers(1, 30), elements=finite),
    st.floats(0.01, 0.99),
)
def test_tilted_l1_closed_forms_agree(x, tau):
    alt = np.sum(0.5 * np.abs(x) + (tau - 0.5) * x)
    assert tilted_l1(x, tau) == pytest.approx(alt, rel=1e-9, abs=1e-9)
    assert tilted_l1(x, tau) >= 0


@given(
    arrays(float, st.integers(1, 30), elements=finite),
    st.floats(0.01, 0.99),
    st.sampled_from([0.0, 0.5, 2.0]),
)
def test_tilted_l1_positively_homogeneous(x, tau, alpha):
    assert tilted_l1(alpha * x, tau) == pytest.approx(alpha * tilted_l1(x, tau), rel=1e-12, abs=1e-9)


@given(
    arrays(float, 8, elements=finite),
    arrays(float, 8, elements=finite),
    st.floats(0.0, 1.0),
    st.floats(0.05, 0.95),
)
def test_tilted_l1_convex(x, y, t, tau):
    lhs = tilted_l1(t * x + (1 - t) * y, tau)
    rhs = t * tilted_l1(x, tau) + (1 - t) * tilted_l1(y, tau)
    assert lhs <= rhs + 1e-9 * (1 + abs(rhs))


# -- prox ----------------------------------------------------------------------


def test_prox_examples():
    for tau in (0.1, 0.5, 0.9):
        for step in (0.3, 1.0, 4.0):
            assert prox_tilted_l1(0.0, tau, step) == 0.0
    assert prox_tilted_l1(1.0, 0.9, 1.0) == pytest.approx(0.1)
    assert prox_tilted_l1(-1.0, 0.9, 1.0) == pytest.approx(-0.9)


def test_prox_examples_match_grid_oracle():
    assert prox_tilted_l1(1.0, 0.9, 1.0) == pytest.approx(grid_prox(1.0, 0.9, 1.0), abs=1e-4)
    assert prox_tilted_l1(-1.0, 0.9, 1.0) == pytest.approx(grid_prox(-1.0, 0.9, 1.0), abs=1e-4)


def test_prox_matches_grid_oracle_on_random_triples():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(100):
        v = rng.uniform(-2.0, 2.0)
        tau = rng.uniform(0.05, 0.95)
        step = rng.uniform(0.05, 1.0)
        worst = max(worst, abs(prox_tilted_l1(v, tau, step) - grid_prox(v, tau, step)))
    assert worst <= 1e-4


def test_prox_rejects_bad_step():
    with pytest.raises(ConfigError):
        prox_tilted_l1([1.0], 0.5, 0.0)


@settings(max_examples=200)
@given(
    arrays(float, 6, elements=finite),
    arrays(float, 6, elements=finite),
    st.floats(0.01, 0.99),
    st.floats(0.01, 10.0),
)
def test_prox_firmly_nonexpansive(u, v, tau, step):
    pu, pv = prox_tilted_l1(u, tau, step), prox_tilted_l1(v, tau, step)
    # firm nonexpansiveness: ||pu - pv||^2 <= <pu - pv, u - v>
    lhs = np.sum((pu - pv) ** 2)
    assert lhs <= np.dot(pu - pv, u - v) + 1e-9 * (1 + lhs)
    assert np.linalg.norm(pu - pv) <= np.linalg.norm(u - v) + 1e-9

