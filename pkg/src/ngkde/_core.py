# Compiled kernel sums shared by pointwise, grid and leave-one-out evaluation.
#
# Every density value is a sequential sum over the sample in index order, so a
# node's value does not depend on how nodes are split across threads or on
# whether it is computed alone or as part of a grid.

from __future__ import annotations

import math
import warnings

import numba as nb
import numpy as np

# numba falls back to another threading layer when the installed TBB is too old
warnings.filterwarnings("ignore", message="The TBB threading layer")

_LOG_2PI = math.log(2.0 * math.pi)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
# exp() of anything below this is exactly 0.0 in double precision
_EXP_UNDERFLOW = -746.0

# shape-map codes
SHAPE_GAMMA1 = 0
SHAPE_GAMMA2 = 1
SHAPE_THETA1 = 2
SHAPE_THETA2 = 3


@nb.njit(cache=True)
def _gamma_shape(code, x2, b):
    r = x2 / (b * b)
    if code == SHAPE_GAMMA1:
        return r + 1.0
    if x2 >= 2.0 * b * b:
        return r
    return 0.25 * r * r + 1.0


@nb.njit(cache=True)
def _ng_alpha(code, x2, b2):
    r = x2 / b2
    if code == SHAPE_THETA1:
        return r + 2.0
    if x2 >= 3.0 * b2:
        return r
    return r * r / 9.0 + 2.0


@nb.njit(cache=True)
def _gamma_logpdf(shape, scale, log_scale, lgam, t, log_t):
    if t == 0.0:
        if shape == 1.0:
            return -log_scale
        if shape > 1.0:
            return -np.inf
        return np.inf
    return (shape - 1.0) * log_t - t / scale - lgam - shape * log_scale


@nb.njit(cache=True)
def gaussian_rows(nodes, data, h, out):
    """out[a, i] = phi((nodes[a] - data[i]) / h)."""
    for a in range(nodes.shape[0]):
        for i in range(data.shape[0]):
            u = (nodes[a] - data[i]) / h
            out[a, i] = _INV_SQRT_2PI * math.exp(-0.5 * u * u)


@nb.njit(cache=True)
def gamma_rows(code, nodes, data, log_data, b, out):
    """out[a, i] = gamma kernel parameterised by nodes[a], evaluated at data[i]."""
    scale = b * b
    log_scale = math.log(scale)
    for a in range(nodes.shape[0]):
        shape = _gamma_shape(code, nodes[a], b)
        lgam = math.lgamma(shape)
        for i in range(data.shape[0]):
            out[a, i] = math.exp(_gamma_logpdf(shape, scale, log_scale, lgam, data[i], log_data[i]))


def _separable_sum_impl(A, G, factor, out):
    na = A.shape[0]
    nb_ = G.shape[0]
    n = A.shape[1]
    for a in nb.prange(na):
        for b in range(nb_):
            s = 0.0
            for i in range(n):
                s += A[a, i] * G[b, i]
            out[a, b] = s * factor


def _ng_points_impl(code, p1, p2, X1, X2, logX2, b1, b2, out):
    n = X1.shape[0]
    beta = 1.0 / b2
    log_beta = math.log(beta)
    for p in nb.prange(p1.shape[0]):
        mu = p1[p]
        x2 = p2[p]
        lam = 1.0 / ((abs(mu) * b1 + b1 * b1) * (x2 + b2))
        alpha = _ng_alpha(code, x2, b2)
        const = 0.5 * (math.log(lam) - _LOG_2PI) + alpha * log_beta - math.lgamma(alpha)
        s = 0.0
        for i in range(n):
            d = X1[i] - mu
            arg = const + (alpha - 0.5) * logX2[i] - 0.5 * lam * X2[i] * d * d - beta * X2[i]
            if arg > _EXP_UNDERFLOW:
                s += math.exp(arg)
        out[p] = s / n


def _ng_loo_impl(code, X1, X2, logX2, b1, b2, out):
    n = X1.shape[0]
    beta = 1.0 / b2
    log_beta = math.log(beta)
    for p in nb.prange(n):
        mu = X1[p]
        x2 = X2[p]
        lam = 1.0 / ((abs(mu) * b1 + b1 * b1) * (x2 + b2))
        alpha = _ng_alpha(code, x2, b2)
        const = 0.5 * (math.log(lam) - _LOG_2PI) + alpha * log_beta - math.lgamma(alpha)
        s = 0.0
        for i in range(n):
            if i == p:
                continue
            d = X1[i] - mu
            arg = const + (alpha - 0.5) * logX2[i] - 0.5 * lam * X2[i] * d * d - beta * X2[i]
            if arg > _EXP_UNDERFLOW:
                s += math.exp(arg)
        out[p] = s / (n - 1)


def _separable_loo_impl(A, G, factor, out):
    # A, G are n x n with rows indexed by the evaluation point
    n = A.shape[0]
    for p in nb.prange(n):
        s = 0.0
        for i in range(n):
            if i == p:
                continue
            s += A[p, i] * G[p, i]
        out[p] = s * factor


separable_sum = nb.njit(cache=True)(_separable_sum_impl)
separable_sum_par = nb.njit(cache=True, parallel=True)(_separable_sum_impl)
ng_points = nb.njit(cache=True)(_ng_points_impl)
ng_points_par = nb.njit(cache=True, parallel=True)(_ng_points_impl)
ng_loo = nb.njit(cache=True)(_ng_loo_impl)
separable_loo = nb.njit(cache=True)(_separable_loo_impl)
