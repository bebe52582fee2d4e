"""Univariate and bivariate kernels used by the estimators.

Gamma and normal-gamma densities are evaluated in log space through
``gammaln`` so that shapes of order 1e6 (x2 / b**2 with tiny bandwidths)
never overflow.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

__all__ = [
    "NgTheta",
    "GammaKernelParams",
    "gaussian_kernel",
    "gaussian_constants",
    "gamma1_shape",
    "gamma2_shape",
    "ng_alpha_shape",
    "gamma_pdf_log",
    "gamma_kernel1",
    "gamma_kernel2",
    "ng_logpdf",
    "ng_pdf",
    "make_theta1",
    "make_theta2",
]

_LOG_2PI = math.log(2.0 * math.pi)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class NgTheta:
    """Parameters (mu, lambda, alpha, beta) of a normal-gamma density."""

    mu: float
    lam: float
    alpha: float
    beta: float

    def __post_init__(self):
        if not math.isfinite(self.mu):
            raise ValueError("mu must be finite")
        for name in ("lam", "alpha", "beta"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be positive and finite, got {v}")


@dataclass(frozen=True)
class GammaKernelParams:
    """Shape/scale pair of an associated gamma kernel (shape >= 1)."""

    shape: float
    scale: float

    def __post_init__(self):
        if not self.shape >= 1.0:
            raise ValueError(f"gamma kernel shape must be >= 1, got {self.shape}")
        if not self.scale > 0:
            raise ValueError(f"gamma kernel scale must be positive, got {self.scale}")


def _check_nonneg(x2, name="x2"):
    if np.any(np.asarray(x2) < 0):
        raise ValueError(f"{name} must be nonnegative")


def _check_pos(v, name):
    if not v > 0:
        raise ValueError(f"{name} must be positive, got {v}")


def gaussian_kernel(t):
    """Standard normal density phi(t)."""
    t = np.asarray(t, dtype=float)
    out = _INV_SQRT_2PI * np.exp(-0.5 * t * t)
    return out if out.ndim else float(out)


def gaussian_constants() -> tuple[float, float]:
    """Return ``(k2, k3)``: second moment and integral of the square of phi."""
    return 1.0, 1.0 / (2.0 * math.sqrt(math.pi))


def gamma1_shape(x2, b: float):
    """Shape x2/b**2 + 1 of the first-class gamma kernel."""
    _check_nonneg(x2)
    _check_pos(b, "b")
    x2 = np.asarray(x2, dtype=float)
    out = x2 / (b * b) + 1.0
    return out if out.ndim else float(out)


def gamma2_shape(x2, b: float):
    """Modified shape rho_{b^2}(x2) of the second-class gamma kernel.

    Equal to x2/b**2 above the knot 2*b**2 and to (x2/b**2)**2 / 4 + 1 below it.
    """
    _check_nonneg(x2)
    _check_pos(b, "b")
    x2 = np.asarray(x2, dtype=float)
    r = x2 / (b * b)
    out = np.where(x2 >= 2.0 * b * b, r, 0.25 * r * r + 1.0)
    return out if out.ndim else float(out)


def ng_alpha_shape(x2, b2: float):
    """Gamma shape alpha_{b2}(x2) of the second normal-gamma kernel.

    Equal to x2/b2 above the knot 3*b2 and to (x2/b2)**2 / 9 + 2 below it.
    """
    _check_nonneg(x2)
    _check_pos(b2, "b2")
    x2 = np.asarray(x2, dtype=float)
    r = x2 / b2
    out = np.where(x2 >= 3.0 * b2, r, r * r / 9.0 + 2.0)
    return out if out.ndim else float(out)


def gamma_pdf_log(shape, scale, t):
    """Log density of gamma(shape, scale) at ``t``.

    At ``t = 0`` the value is ``-inf`` for shape > 1, ``-log(scale)`` for
    shape == 1 and ``+inf`` for shape < 1.
    """
    shape = np.asarray(shape, dtype=float)
    scale = np.asarray(scale, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(shape <= 0) or np.any(scale <= 0):
        raise ValueError("shape and scale must be positive")
    _check_nonneg(t, "t")
    shape, scale, t = np.broadcast_arrays(shape, scale, t)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = (shape - 1.0) * np.log(t) - t / scale - gammaln(shape) - shape * np.log(scale)
    at0 = t == 0
    if np.any(at0):
        out = np.array(out, copy=True)
        out[at0 & (shape == 1.0)] = -np.log(scale[at0 & (shape == 1.0)])
        out[at0 & (shape > 1.0)] = -np.inf
        out[at0 & (shape < 1.0)] = np.inf
    return out if out.ndim else float(out)


def gamma_kernel1(x2, b: float, t):
    """First-class gamma kernel K_{x2/b^2+1, b^2}(t)."""
    out = np.exp(gamma_pdf_log(gamma1_shape(x2, b), b * b, t))
    return out if np.ndim(out) else float(out)


def gamma_kernel2(x2, b: float, t):
    """Second-class gamma kernel K_{rho_{b^2}(x2), b^2}(t)."""
    out = np.exp(gamma_pdf_log(gamma2_shape(x2, b), b * b, t))
    return out if np.ndim(out) else float(out)


def ng_logpdf(theta: NgTheta, t1, t2):
    """Log of the normal-gamma density; ``-inf`` on the t2 = 0 edge."""
    t1 = np.asarray(t1, dtype=float)
    t2 = np.asarray(t2, dtype=float)
    _check_nonneg(t2, "t2")
    a, lam, beta, mu = theta.alpha, theta.lam, theta.beta, theta.mu
    with np.errstate(divide="ignore", invalid="ignore"):
        log_t2 = np.log(t2)
        d = t1 - mu
        out = (
            0.5 * (math.log(lam) - _LOG_2PI)
            + (a - 0.5) * log_t2
            - 0.5 * lam * t2 * d * d
            - beta * t2
            + a * math.log(beta)
            - gammaln(a)
        )
    # at t2 = 0 the density is 0 for alpha > 1/2; for alpha <= 1/2 it is
    # unbounded and we return 0 as well so the primitive stays total
    at0 = t2 == 0
    if a <= 0.5 and np.any(at0):
        warnings.warn(
            f"normal-gamma density is unbounded at t2=0 for alpha={a}; returning 0",
            RuntimeWarning,
            stacklevel=2,
        )
    out = np.where(at0, -np.inf, out)
    return out if out.ndim else float(out)


def ng_pdf(theta: NgTheta, t1, t2):
    """Normal-gamma density N(t1 | mu, 1/(lam t2)) * Ga(t2 | alpha, rate=beta)."""
    out = np.exp(ng_logpdf(theta, t1, t2))
    return out if np.ndim(out) else float(out)


def _ng_common(x, b1, b2):
    x1, x2 = float(x[0]), float(x[1])
    if x2 < 0:
        raise ValueError("x2 must be nonnegative")
    _check_pos(b1, "b1")
    _check_pos(b2, "b2")
    lam = 1.0 / ((abs(x1) * b1 + b1 * b1) * (x2 + b2))
    return x1, x2, lam


def make_theta1(x, b1: float, b2: float) -> NgTheta:
    """Normal-gamma parameters for the estimator with alpha = x2/b2 + 2."""
    x1, x2, lam = _ng_common(x, b1, b2)
    return NgTheta(mu=x1, lam=lam, alpha=x2 / b2 + 2.0, beta=1.0 / b2)


def make_theta2(x, b1: float, b2: float) -> NgTheta:
    """As :func:`make_theta1` but with the piecewise shape alpha_{b2}(x2)."""
    x1, x2, lam = _ng_common(x, b1, b2)
    return NgTheta(mu=x1, lam=lam, alpha=ng_alpha_shape(x2, b2), beta=1.0 / b2)
