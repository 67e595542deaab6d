"""Alternating minimization over the two factors.

Each half-step is a convex problem in one factor with the other held fixed:
a weighted tilted-l1 data term, unsquared Frobenius-norm smoothness terms,
``L @ R >= 0`` and linear equality constraints. Equality constraints are
removed by writing the factor as ``vec(F) = T @ x`` for a sparse basis ``T``
of the feasible subspace. What is left is solved with ADMM using one
auxiliary block for the data term (whose prox also enforces nonnegativity)
and one for ``beta >= 0``. The norm terms enter the x-update through a
quadratic majorizer, so the x-update matrix changes only when the penalty
or the majorizer weights are refreshed. ADMM stopped at its iteration cap
meets ``L @ R >= 0`` only approximately; a small per-day projection on the
free rows of ``R`` restores it.
"""

import logging
import time
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.optimize import minimize

from .errors import DegenerateInputError, NumericError
from .kernels import fit_block_update, weighted_tilted_l1
from .model import FitConfig, LowRankModel, fit_weights_matrix, objective, svd_init
from .operators import DiffOperator
from .timeseries import PowerMatrix, night_mask
from .weights import DayWeights, WeightParams, robust_weights

log = logging.getLogger(__name__)

_ALPHA = 1.6  # over-relaxation
_RHO_EVERY = 20
_CHECK_EVERY = 5
_PROX_RIDGE = 1e-9
_ETA_EVERY = 10


@dataclass
class SubproblemStats:
    step: str
    iterations: int
    converged: bool
    primal_residual: float
    dual_residual: float
    objective: float
    accepted: bool = True
    seconds: float = 0.0


@dataclass
class FitReport:
    """What happened during :func:`fit`.

    ``objective_trace`` holds one ``(total, f1, f2, f3, f4)`` tuple per
    outer iteration, evaluated after both half-steps.
    """

    objective_trace: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    beta: float | None = None
    degradation_rate: float | None = None
    initial_objective: float | None = None
    subproblem_stats: list = field(default_factory=list)
    weights_used: DayWeights | None = None
    config: FitConfig | None = None
    seconds: float = 0.0

    @property
    def totals(self):
        return np.array([t[0] for t in self.objective_trace])

    @property
    def final_rel_change(self):
        tot = self.totals
        if tot.size < 2:
            return float("nan")
        return abs(tot[-2] - tot[-1]) / max(abs(tot[-2]), 1e-300)

    def to_dict(self):
        return {
            "iterations": self.iterations,
            "converged": self.converged,
            "beta": self.beta,
            "degradation_rate": self.degradation_rate,
            "initial_objective": self.initial_objective,
            "final_rel_change": self.final_rel_change,
            "seconds": self.seconds,
            "objective_trace": [list(t) for t in self.objective_trace],
            "subproblems": [vars(s) for s in self.subproblem_stats],
            "config": self.config.to_dict() if self.config else None,
        }

    def summary(self):
        lines = [
            f"converged: {self.converged}",
            f"outer iterations: {self.iterations}",
            f"final objective: {self.totals[-1]:.10g}" if self.objective_trace else "",
            f"final relative change: {self.final_rel_change:.3e}",
        ]
        if self.beta is not None:
            lines.append(f"beta: {self.beta:.10g}")
            lines.append(f"annual degradation rate: {self.degradation_rate:.6f}")
        bad = [s for s in self.subproblem_stats if not s.converged]
        lines.append(f"subproblems hitting the iteration cap: {len(bad)}")
        lines.append(f"runtime: {self.seconds:.2f} s")
        return "\n".join(x for x in lines if x)


# -- generic ADMM engine -----------------------------------------------------


@dataclass
class _NormBlock:
    """A term ``mu * ||apply(F)||_F`` with ``gram = B^T B`` on ``vec(F)``."""

    apply: object
    gram: sp.spmatrix
    mu: float


class _Subproblem:
    """One convex half-step in reduced coordinates ``vec(F) = T x``.

    ADMM splits off the prediction ``c = P T x`` (tilted-l1 loss plus
    ``c >= 0``) and, for the R-step, ``e = beta >= 0``. Each norm term
    ``mu ||B x||`` enters the x-update through its quadratic majorizer
    ``mu (||B x||^2 / eta + eta) / 2`` whose weight ``eta`` is refreshed to
    ``||B x||`` every few iterations. A fixed point of the whole scheme is a
    minimizer of the original problem.
    """

    def __init__(self, T, shape, predict, predict_adjoint, pred_gram, blocks,
                 data, wts, tau, nonneg_coord=None):
        self.T = T.tocsr()
        self.Tt = self.T.T.tocsr()
        self.shape = shape
        self.predict = predict
        self.predict_adjoint = predict_adjoint
        self.blocks = blocks
        self.data = data
        self.wts = wts
        self.tau = tau
        self.nonneg_coord = nonneg_coord
        d = T.shape[1]
        self.dim = d

        self._kp = (self.Tt @ pred_gram @ self.T).tocsc()
        base = max(self._kp.diagonal().mean(), 1e-300)
        self._base = base
        self.beta_scale = np.sqrt(base)
        self.a_norm = np.sqrt(base)
        if nonneg_coord is not None:
            self._kp = self._kp + sp.csc_matrix(
                ([base], ([nonneg_coord], [nonneg_coord])), shape=(d, d))
        self._kb = [(self.Tt @ b.gram @ self.T).tocsc() for b in blocks]
        self.ridge = 0.0
        self._eye = sp.identity(d, format="csc")

    def vec(self, F):
        return np.asarray(F).ravel(order="F")

    def unvec(self, v):
        return v.reshape(self.shape, order="F")

    def to_factor(self, x):
        return self.unvec(self.T @ x)

    def coords(self, F):
        """Least-squares coordinates of ``F`` (projects onto the constraints)."""
        TtT = (self.Tt @ self.T).tocsc()
        return spla.splu(TtT).solve(self.Tt @ self.vec(F))

    def loss(self, F):
        pred = self.predict(F)
        total = weighted_tilted_l1(self.data - pred, self.wts, self.tau)
        for b in self.blocks:
            total += b.mu * np.linalg.norm(b.apply(F))
        return float(total)

    def _factor(self, rho, weights):
        K = rho * self._kp
        for kb, q in zip(self._kb, weights):
            K = K + q * kb
        # the proximal ridge follows the data block; a zero fixed factor
        # leaves only the majorizer, which is singular on linear trends
        kmax = max(float(np.abs(K.diagonal()).max()), 1e-300)
        self.ridge = max(_PROX_RIDGE * rho * self._base, 1e-12 * kmax)
        return spla.splu((K + self.ridge * self._eye).tocsc())

    def _etas(self, F, floors):
        return [max(float(np.linalg.norm(b.apply(F))), f) for b, f in zip(self.blocks, floors)]

    def solve(self, x0, tol, max_iter, state=None, abs_scale=1.0):
        """Run ADMM from ``x0``. Returns ``(x, stats dict, state)``."""
        x = np.array(x0, dtype=float)
        F = self.to_factor(x)
        pred = self.predict(F)
        c = np.maximum(pred, 0.0)
        ue = 0.0
        e = 0.0
        beta = self.nonneg_coord
        if beta is not None:
            e = max(self.beta_scale * x[beta], 0.0)
        if state is not None:
            # the data-block dual is a subgradient of the loss at the
            # residual, which changes little between outer iterations
            rho = state["rho"]
            uc = state["y"] / rho if state.get("y") is not None else np.zeros_like(pred)
        else:
            uc = np.zeros_like(pred)
            rho = max(float(self.wts.max()), 1e-12) / (0.01 * abs_scale / 1e-3)

        # a vanishing eta would make the majorizer infinitely stiff
        xs = max(float(np.linalg.norm(x)), 1.0)
        floors = [1e-10 * np.sqrt(max(kb.diagonal().mean(), 1e-300)) * xs for kb in self._kb]
        etas = self._etas(F, floors)
        qw = [b.mu / eta for b, eta in zip(self.blocks, etas)]
        lu = self._factor(rho, qw)

        eta_tol = np.sqrt(tol)
        n_z = pred.size + (1 if beta is not None else 0)
        eps_abs = tol * abs_scale
        converged = False
        r_norm = s_norm = np.inf
        it = 0
        for it in range(1, max_iter + 1):
            rhs = rho * (self.Tt @ self.vec(self.predict_adjoint(c - uc))) + self.ridge * x
            if beta is not None:
                rhs[beta] += rho * self.beta_scale * (e - ue)
            x = lu.solve(rhs)
            F = self.to_factor(x)
            pred = self.predict(F)

            c_old = c
            c = c.copy()
            r2, s2_c, p2, c2 = fit_block_update(pred, uc, c, self.data, self.wts,
                                                self.tau, rho, _ALPHA)
            e_old = e
            if beta is not None:
                ax = self.beta_scale * x[beta]
                v = _ALPHA * ax + (1.0 - _ALPHA) * e_old + ue
                e = max(v, 0.0)
                ue = v - e
                r2 += (ax - e) ** 2
                p2 += ax**2
                c2 += e**2

            if it % _CHECK_EVERY and it != max_iter:
                continue

            dzx = self.Tt @ self.vec(self.predict_adjoint(c - c_old))
            if beta is not None:
                dzx[beta] += self.beta_scale * (e - e_old)
            qx = np.zeros(self.dim)
            for kb, q in zip(self._kb, qw):
                qx += q * (kb @ x)
            r_norm = np.sqrt(r2)
            s_norm = rho * np.linalg.norm(dzx)
            # A^T y nearly cancels against the weak quadratic at the optimum,
            # so the dual residual is measured against |A| |y| instead
            y_norm = rho * self.a_norm * np.sqrt(float(np.sum(uc**2)) + ue**2)
            q_norm = float(np.linalg.norm(qx))
            eps_pri = eps_abs * np.sqrt(n_z) + tol * max(np.sqrt(p2), np.sqrt(c2))
            eps_dual = eps_abs * self.a_norm * rho * np.sqrt(self.dim) + tol * max(y_norm, q_norm)
            new_etas = self._etas(F, floors)
            # the majorizer is exact to second order in eta, so eta only needs
            # about sqrt(tol) relative accuracy
            eta_ok = all(abs(a - b) <= eta_tol * max(a, b) for a, b in zip(new_etas, etas))
            nonneg_ok = float(pred.min()) >= -0.1 * tol * max(float(pred.max()), 0.0)
            if r_norm <= eps_pri and s_norm <= eps_dual and nonneg_ok and eta_ok:
                converged = True
                break
            if not np.isfinite(r_norm) or not np.isfinite(s_norm):
                raise NumericError("ADMM iterates became non-finite")

            refactor = False
            if not eta_ok and it % _ETA_EVERY == 0:
                etas = new_etas
                qw = [b.mu / eta for b, eta in zip(self.blocks, etas)]
                refactor = True
            if it % _RHO_EVERY == 0:
                rp = r_norm / max(np.sqrt(p2), np.sqrt(c2), 1e-300)
                rd = s_norm / max(y_norm, q_norm, 1e-300)
                if rd > 0 and rp > 0:
                    ratio = np.sqrt(rp / rd)
                    if ratio > 5.0 or ratio < 0.2:
                        ratio = min(max(ratio, 0.1), 10.0)
                        rho *= ratio
                        uc /= ratio
                        ue /= ratio
                        refactor = True
            if refactor:
                lu = self._factor(rho, qw)

        state = {"rho": rho, "y": rho * uc}
        stats = {
            "iterations": it,
            "converged": converged,
            "primal_residual": float(r_norm),
            "dual_residual": float(s_norm),
        }
        return x, stats, state


# -- the two half-steps --------------------------------------------------------


def _lstep_basis(m, k, day_rows):
    """``T`` for ``L``: zero night rows, columns 2..k summing to zero."""
    p = len(day_rows)
    rows, cols, vals = [], [], []
    col = 0
    for j in range(k):
        base = j * m
        if j == 0:
            for t, i in enumerate(day_rows):
                rows.append(base + i)
                cols.append(col + t)
                vals.append(1.0)
            col += p
        else:
            # basis vectors e_t - e_{t+1} span the zero-sum subspace
            for t in range(p - 1):
                rows += [base + day_rows[t], base + day_rows[t + 1]]
                cols += [col + t, col + t]
                vals += [1.0, -1.0]
            col += max(p - 1, 0)
    return sp.csr_matrix((vals, (rows, cols)), shape=(m * k, col))


def _rstep_basis(k, n, lag):
    """``T`` for ``R`` (and ``beta`` as the last coordinate when ``n > lag``)."""
    rows, cols, vals = [], [], []
    coupled = n > lag
    if coupled:
        # R[0, j] = y[j mod lag] - beta * (j // lag)
        n_y = lag
        beta_col = n_y + (k - 1) * n
        for j in range(n):
            rows.append(j * k)
            cols.append(j % lag)
            vals.append(1.0)
            if j >= lag:
                rows.append(j * k)
                cols.append(beta_col)
                vals.append(-float(j // lag))
        d = beta_col + 1
    else:
        n_y = n
        for j in range(n):
            rows.append(j * k)
            cols.append(j)
            vals.append(1.0)
        d = n_y + (k - 1) * n
        beta_col = None
    for j in range(n):
        for r in range(1, k):
            rows.append(j * k + r)
            cols.append(n_y + j * (k - 1) + (r - 1))
            vals.append(1.0)
    return sp.csr_matrix((vals, (rows, cols)), shape=(k * n, d)), beta_col


def _l_subproblem(D, W, R, night, config):
    m, n = D.shape
    k = R.shape[0]
    day_rows = np.setdiff1d(np.arange(m), night)
    T = _lstep_basis(m, k, day_rows)
    blocks = []
    if m > 2:
        op = DiffOperator("second", m)
        DtD = (op.matrix().T @ op.matrix()).tocsr()
        blocks.append(_NormBlock(
            apply=lambda F: np.diff(F, 2, axis=0),
            gram=sp.kron(sp.identity(k), DtD, format="csr"),
            mu=config.mu_l,
        ))
    pred_gram = sp.kron(sp.csr_matrix(R @ R.T), sp.identity(m), format="csr")
    return _Subproblem(
        T, (m, k),
        predict=lambda F: F @ R,
        predict_adjoint=lambda C: C @ R.T,
        pred_gram=pred_gram,
        blocks=blocks, data=D, wts=W, tau=config.tau,
    )


def _r_subproblem(D, W, L, config):
    m, n = D.shape
    k = L.shape[1]
    lag = config.lag
    T, beta_col = _rstep_basis(k, n, lag)
    blocks = []
    if n > 2:
        op = DiffOperator("second", n)
        DtD = (op.matrix().T @ op.matrix()).tocsr()
        blocks.append(_NormBlock(
            apply=lambda F: np.diff(F, 2, axis=1),
            gram=sp.kron(DtD, sp.identity(k), format="csr"),
            mu=config.mu_r,
        ))
    if n > lag and k > 1:
        op = DiffOperator("first_lagged", n, lag)
        DtD = (op.matrix().T @ op.matrix()).tocsr()
        sel = sp.diags([0.0] + [1.0] * (k - 1))

        blocks.append(_NormBlock(
            apply=lambda F: F[1:, lag:] - F[1:, :-lag],
            gram=sp.kron(DtD, sel, format="csr"),
            mu=config.mu_r,
        ))
    pred_gram = sp.kron(sp.identity(n), sp.csr_matrix(L.T @ L), format="csr")
    return _Subproblem(
        T, (k, n),
        predict=lambda F: L @ F,
        predict_adjoint=lambda C: L.T @ C,
        pred_gram=pred_gram,
        blocks=blocks, data=D, wts=W, tau=config.tau,
        nonneg_coord=beta_col,
    ), beta_col


def _check_finite(*arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise NumericError("non-finite values in subproblem input")


def solve_l_step(matrix, R, weights, config, L_start, state=None, return_info=False):
    """Minimize ``f1 + f2`` over ``L`` with ``R`` fixed, subject to the constraints.

    ``weights`` may be a :class:`DayWeights`, a length-``n`` vector, or an
    ``m x n`` per-entry weight array (already masked).
    """
    D, W = _prep(matrix, weights)
    R = np.asarray(R, dtype=float)
    _check_finite(D, R, L_start)
    config = config.resolve(D) if config.mu_l is None or config.mu_r is None else config
    night = matrix.night_rows if isinstance(matrix, PowerMatrix) else np.zeros(0, int)
    t0 = time.perf_counter()
    prob = _l_subproblem(D, W, R, night, config)
    x0 = prob.coords(L_start)
    x, stats, state = prob.solve(
        x0, config.subproblem_tol, config.subproblem_max_iter, state,
        abs_scale=_abs_scale(D),
    )
    L = prob.to_factor(x)
    info = SubproblemStats("L", objective=prob.loss(L), seconds=time.perf_counter() - t0, **stats)
    if return_info:
        return L, info, state
    return L


def solve_r_step(matrix, L, weights, config, R_start, beta_start=None, state=None,
                 return_info=False):
    """Minimize ``f1 + f3 + f4`` over ``(R, beta)`` with ``L`` fixed.

    Returns ``(R, beta)``; ``beta`` is ``None`` when there are no more than
    ``config.lag`` days.
    """
    D, W = _prep(matrix, weights)
    L = np.asarray(L, dtype=float)
    _check_finite(D, L, R_start)
    config = config.resolve(D) if config.mu_l is None or config.mu_r is None else config
    t0 = time.perf_counter()
    prob, beta_col = _r_subproblem(D, W, L, config)
    x0 = prob.coords(R_start)
    if beta_col is not None:
        x0[beta_col] = max(beta_start or 0.0, 0.0)
    x, stats, state = prob.solve(
        x0, config.subproblem_tol, config.subproblem_max_iter, state,
        abs_scale=_abs_scale(D),
    )
    beta = None
    if beta_col is not None:
        # the ADMM iterate only satisfies beta >= 0 to tolerance; project
        x[beta_col] = max(x[beta_col], 0.0)
        beta = float(x[beta_col])
    R = _repair_nonneg(L, prob.to_factor(x))
    info = SubproblemStats("R", objective=prob.loss(R), seconds=time.perf_counter() - t0, **stats)
    if return_info:
        return R, beta, info, state
    return R, beta


def _repair_nonneg(L, R, tol=1e-9):
    """Move days where ``L @ R`` dips below zero back onto ``L @ R >= 0``.

    ADMM stopped at its iteration cap satisfies the cone only up to its
    primal residual. For each offending day, rows ``1..k-1`` of ``R`` take
    the smallest step that restores feasibility. Row 0 is left alone, so the
    year-over-year coupling and ``beta`` are untouched.
    """
    k = R.shape[0]
    if k < 2:
        return R
    P = L @ R
    top = float(P.max())
    if top <= 0.0:
        return R
    bad = np.nonzero(P.min(axis=0) < -tol * top)[0]
    if bad.size == 0:
        return R
    lit = np.any(L != 0.0, axis=1)
    A = L[lit, 1:]
    R = R.copy()
    for j in bad:
        base = L[lit, 0] * R[0, j]
        s0 = R[1:, j].copy()
        res = minimize(
            lambda s: 0.5 * np.sum((s - s0) ** 2), s0, jac=lambda s: s - s0,
            method="SLSQP",
            constraints=[{"type": "ineq", "fun": lambda s: base + A @ s, "jac": lambda s: A}],
            options={"ftol": 1e-14, "maxiter": 200},
        )
        # rows 1.. may not reach a feasible point; keep the step only if it helps
        if (base + A @ res.x).min() > (base + A @ s0).min():
            R[1:, j] = res.x
    return R


def _abs_scale(D):
    return max(float(np.abs(D).max()), 1e-12) * 1e-3


def _prep(matrix, weights):
    if isinstance(matrix, PowerMatrix):
        D = np.maximum(matrix.data, 0.0)
        w = getattr(weights, "values", weights)
        w = np.asarray(w, dtype=float)
        W = w if w.ndim == 2 else fit_weights_matrix(matrix, w)
    else:
        D = np.asarray(matrix, dtype=float)
        W = np.asarray(weights, dtype=float)
        if W.ndim == 1:
            W = np.broadcast_to(W[None, :], D.shape).copy()
    return D, np.ascontiguousarray(W, dtype=float)


# -- gauge balancing -----------------------------------------------------------


def _gauge_scales(L, R, config, bound=30.0):
    """Column scales ``a`` for :func:`balance_gauge`, or ``None`` if no gain."""
    k = L.shape[1]
    lag = config.lag
    A = np.sum(np.diff(L, 2, axis=0) ** 2, axis=0) if L.shape[0] > 2 else np.zeros(k)
    B = np.sum(np.diff(R, 2, axis=1) ** 2, axis=1) if R.shape[1] > 2 else np.zeros(k)
    C = np.zeros(k)
    if R.shape[1] > lag:
        C[1:] = np.sum((R[1:, lag:] - R[1:, :-lag]) ** 2, axis=1)
    mu_l, mu_r = config.mu_l, config.mu_r

    def cost(t):
        up, dn = np.exp(2.0 * t), np.exp(-2.0 * t)
        f2 = np.sqrt(up @ A)
        f3 = np.sqrt(dn @ B)
        f4 = np.sqrt(dn @ C)
        val = mu_l * f2 + mu_r * (f3 + f4)
        g = np.zeros(k)
        if f2 > 0:
            g += mu_l * up * A / f2
        if f3 > 0:
            g -= mu_r * dn * B / f3
        if f4 > 0:
            g -= mu_r * dn * C / f4
        return val, g

    t0 = np.zeros(k)
    base, _ = cost(t0)
    if not base > 0:
        return None
    res = minimize(cost, t0, jac=True, method="L-BFGS-B", bounds=[(-bound, bound)] * k)
    if not np.isfinite(res.fun) or res.fun >= base:
        return None
    return np.exp(res.x)


def _rescale(L, R, beta, a):
    if a is None:
        return L, R, beta
    beta = None if beta is None else beta / a[0]
    return L * a[None, :], R / a[:, None], beta


def balance_gauge(L, R, beta, config, bound=30.0):
    """Rescale ``(L, R)`` to ``(L diag(a), diag(1/a) R)`` minimizing the smoothness terms.

    The product ``L @ R``, hence the data term, and every constraint are
    unchanged (``beta`` scales with the first row of ``R``), so this step can
    only lower the objective. The scales solve a small smooth convex problem
    in ``log a``. Returns ``(L, R, beta)``.
    """
    return _rescale(L, R, beta, _gauge_scales(L, R, config, bound))


# -- outer loop ----------------------------------------------------------------


def fit(matrix, config=None, weights=None, verbose=False):
    """Fit the constrained low-rank clear-sky model by alternating minimization.

    Parameters
    ----------
    matrix : PowerMatrix
        Daily-segmented data. Negative entries are clamped to zero. Night
        rows are recomputed from ``config.epsilon``.
    config : FitConfig, optional
    weights : DayWeights or array, optional
        Day weights. Computed with :func:`scsf.weights.robust_weights` when
        omitted.

    Returns
    -------
    model : LowRankModel
    report : FitReport
    """
    t_start = time.perf_counter()
    config = config or FitConfig()
    if not isinstance(matrix, PowerMatrix):
        matrix = PowerMatrix.from_array(matrix)
    D = np.maximum(matrix.data, 0.0)
    if not np.all(np.isfinite(D)):
        raise NumericError("non-finite values in data")
    if not np.any(D[matrix.observed] > 0):
        raise DegenerateInputError("data matrix is identically zero")
    matrix = replace(matrix, data=D)
    matrix = replace(matrix, night_rows=night_mask(matrix, config.epsilon))
    if matrix.night_rows.size == matrix.m:
        raise DegenerateInputError("every row is classified as night")
    config = config.resolve(D)

    if weights is None:
        weights = robust_weights(
            matrix,
            WeightParams(window=config.weight_window, energy_ramp=config.energy_ramp),
            rows=matrix.day_rows,
        )
    elif not isinstance(weights, DayWeights):
        w = np.clip(np.asarray(weights, dtype=float), 0.0, 1.0)
        weights = DayWeights(w, np.full_like(w, np.nan), np.full_like(w, np.nan),
                             np.full_like(w, np.nan), np.full_like(w, np.nan))
    W = fit_weights_matrix(matrix, weights)

    L, R = svd_init(matrix, config.k)
    beta = None
    report = FitReport(weights_used=weights, config=config)
    report.initial_objective = objective(matrix, L, R, beta, weights, config)[0]

    l_state = r_state = None
    current = None
    for it in range(1, config.max_iter + 1):
        if current is not None:
            L, R, beta = balance_gauge(L, R, beta, config)
        L_new, info, l_state = solve_l_step(matrix, R, W, config, L, l_state, return_info=True)
        # keep the pair feasible even if the R-step below is rejected
        R_fix = _repair_nonneg(L_new, R)
        cand = objective(matrix, L_new, R_fix, beta, weights, config)[0]
        # the SVD start is infeasible, so the first pass always moves
        if current is None or cand <= current:
            L, R, current_l = L_new, R_fix, cand
        else:
            info.accepted = False
            current_l = current
        report.subproblem_stats.append(info)

        L, R, beta = balance_gauge(L, R, beta, config)
        R_new, beta_new, info, r_state = solve_r_step(
            matrix, L, W, config, R, beta, r_state, return_info=True
        )
        cand = objective(matrix, L, R_new, beta_new, weights, config)[0]
        if current is None or cand <= current_l:
            R, beta = R_new, beta_new
        else:
            info.accepted = False
        report.subproblem_stats.append(info)

        total, parts = objective(matrix, L, R, beta, weights, config)
        report.objective_trace.append((total,) + parts)
        report.iterations = it
        if verbose:
            log.info("iteration %d: objective %.8g", it, total)
        if current is not None:
            change = abs(current - total) / max(abs(current), 1e-300)
            current = total
            if change < config.rel_tol:
                report.converged = True
                break
        else:
            current = total

    model = LowRankModel(L, R, beta, matrix.night_rows.copy(), config.to_dict())
    report.beta = beta
    report.degradation_rate = model.degradation_rate
    report.seconds = time.perf_counter() - t_start
    return model, report
