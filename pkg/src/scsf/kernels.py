"""Hot elementwise kernels.

Each kernel has a numba version (``*_nb``) and a numpy version (``*_np``)
with identical semantics. The public name is bound to one of them at
import time according to :data:`scsf._accel.USE_NUMBA`.
"""

import numpy as np

from ._accel import USE_NUMBA, njit

__all__ = [
    "fit_block_update",
    "weighted_tilted_l1",
    "ks_sup_sorted",
    "USE_NUMBA",
]


# -- fused ADMM update for the data-fit block --------------------------------
#
# The data-fit block is g(c) = sum_ij w_ij * phi_tau(d_ij - c_ij) + I(c >= 0).
# Given the current prediction p = A x (over-relaxed with the previous c) and
# the scaled dual u, the update is
#     c <- prox_{g / rho}(p + u),   u <- u + p - c
# and the kernel also returns the squared norms needed for the stopping test.


@njit
def fit_block_update_nb(pred, u, c, data, wts, tau, rho, alpha):
    m, n = pred.shape
    r2 = 0.0
    s2 = 0.0
    p2 = 0.0
    c2 = 0.0
    for j in range(n):
        for i in range(m):
            p = pred[i, j]
            c_old = c[i, j]
            p_hat = alpha * p + (1.0 - alpha) * c_old
            v = p_hat + u[i, j]
            t = wts[i, j] / rho
            r0 = data[i, j] - v
            if r0 > t * tau:
                r = r0 - t * tau
            elif r0 < -t * (1.0 - tau):
                r = r0 + t * (1.0 - tau)
            else:
                r = 0.0
            cn = data[i, j] - r
            if cn < 0.0:
                cn = 0.0
            u[i, j] = v - cn
            c[i, j] = cn
            d = p - cn
            r2 += d * d
            d = cn - c_old
            s2 += d * d
            p2 += p * p
            c2 += cn * cn
    return r2, s2, p2, c2


def fit_block_update_np(pred, u, c, data, wts, tau, rho, alpha):
    c_old = c.copy()
    v = alpha * pred + (1.0 - alpha) * c_old + u
    t = wts / rho
    r0 = data - v
    r = np.where(
        r0 > t * tau,
        r0 - t * tau,
        np.where(r0 < -t * (1.0 - tau), r0 + t * (1.0 - tau), 0.0),
    )
    cn = np.maximum(data - r, 0.0)
    u[...] = v - cn
    c[...] = cn
    return (
        float(np.sum((pred - cn) ** 2)),
        float(np.sum((cn - c_old) ** 2)),
        float(np.sum(pred**2)),
        float(np.sum(cn**2)),
    )


# -- weighted tilted-l1 sum --------------------------------------------------


@njit
def weighted_tilted_l1_nb(resid, wts, tau):
    m, n = resid.shape
    total = 0.0
    for j in range(n):
        for i in range(m):
            x = resid[i, j]
            if x > 0.0:
                total += wts[i, j] * tau * x
            else:
                total -= wts[i, j] * (1.0 - tau) * x
    return total


def weighted_tilted_l1_np(resid, wts, tau):
    pos = np.maximum(resid, 0.0)
    neg = np.maximum(-resid, 0.0)
    return float(np.sum(wts * (tau * pos + (1.0 - tau) * neg)))


# -- two-sample sup distance between ECDFs -----------------------------------


@njit
def ks_sup_sorted_nb(a, b):
    na = a.shape[0]
    nb = b.shape[0]
    i = 0
    j = 0
    best = 0.0
    while i < na or j < nb:
        if j >= nb or (i < na and a[i] <= b[j]):
            x = a[i]
        else:
            x = b[j]
        # step past every sample equal to x: ECDFs are right-continuous
        while i < na and a[i] <= x:
            i += 1
        while j < nb and b[j] <= x:
            j += 1
        d = abs(i / na - j / nb)
        if d > best:
            best = d
    return best


def ks_sup_sorted_np(a, b):
    pts = np.concatenate([a, b])
    fa = np.searchsorted(a, pts, side="right") / a.size
    fb = np.searchsorted(b, pts, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


if USE_NUMBA:
    fit_block_update = fit_block_update_nb
    weighted_tilted_l1 = weighted_tilted_l1_nb
    ks_sup_sorted = ks_sup_sorted_nb
else:
    fit_block_update = fit_block_update_np
    weighted_tilted_l1 = weighted_tilted_l1_np
    ks_sup_sorted = ks_sup_sorted_np
