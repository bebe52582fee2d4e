import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from ngkde.kernels import (
    GammaKernelParams,
    NgTheta,
    gamma1_shape,
    gamma2_shape,
    gamma_kernel1,
    gamma_kernel2,
    gamma_pdf_log,
    gaussian_constants,
    gaussian_kernel,
    make_theta1,
    make_theta2,
    ng_alpha_shape,
    ng_logpdf,
    ng_pdf,
)

# 50-digit mpmath evaluations of the closed forms, frozen
PHI_1 = 0.24197072451914334979783019293556065482867197073744
GAMMA_5_QUARTER_AT_1 = 0.78146725925265835919863557432495966770824821561496
NG_0131_AT_01 = 0.07338133158686994994715721451577730900390388956652
K3 = 0.2820947917738781434740397257803862929220253146645


def test_gaussian_kernel_values():
    assert gaussian_kernel(0.0) == pytest.approx(0.3989422804014327, rel=1e-15)
    assert gaussian_kernel(1.0) == pytest.approx(PHI_1, rel=1e-15)
    assert gaussian_kernel(1.3) == gaussian_kernel(-1.3)


@given(st.floats(-40, 40))
def test_gaussian_kernel_even_and_nonnegative(t):
    assert gaussian_kernel(t) == gaussian_kernel(-t)
    assert gaussian_kernel(t) >= 0


def test_gaussian_constants():
    k2, k3 = gaussian_constants()
    assert k2 == 1.0
    assert k3 == pytest.approx(K3, abs=1e-15)
    t = np.linspace(-10, 10, 200001)
    assert np.trapezoid(gaussian_kernel(t) ** 2, t) == pytest.approx(k3, abs=1e-10)
    assert integrate.quad(lambda u: u * u * gaussian_kernel(u), -np.inf, np.inf)[0] == pytest.approx(k2, abs=1e-12)


@pytest.mark.parametrize("x2,b,expected", [(0, 0.5, 1.0), (1, 0.5, 5.0), (2, 1, 3.0)])
def test_gamma1_shape(x2, b, expected):
    assert gamma1_shape(x2, b) == expected


@pytest.mark.parametrize("b", [0.05, 0.3, 1.0, 2.5])
def test_gamma2_shape_branches(b):
    assert gamma2_shape(0.0, b) == 1.0
    assert gamma2_shape(2 * b * b, b) == 2.0
    below = 0.25 * (np.nextafter(2 * b * b, 0) / (b * b)) ** 2 + 1
    assert below == pytest.approx(2.0, abs=1e-14)
    assert gamma2_shape(5.0, 1.0) == 5.0


@pytest.mark.parametrize("b2", [0.01, 0.1, 1.0])
def test_ng_alpha_shape_branches(b2):
    assert ng_alpha_shape(0.0, b2) == 2.0
    assert ng_alpha_shape(3 * b2, b2) == pytest.approx(3.0, rel=1e-15)
    assert ng_alpha_shape(1.5 * b2, b2) == pytest.approx(2.25, rel=1e-15)


@pytest.mark.parametrize("fn", [gamma1_shape, gamma2_shape, ng_alpha_shape])
def test_shape_maps_reject_negative(fn):
    with pytest.raises(ValueError):
        fn(-0.1, 1.0)


@pytest.mark.parametrize("b", [0.05, 0.3, 1.0])
def test_shape_maps_nondecreasing(b):
    x = np.linspace(0, 10 * b * b + 5 * b, 20001)
    assert np.all(np.diff(gamma2_shape(x, b)) >= 0)
    assert np.all(np.diff(ng_alpha_shape(x, b)) >= 0)
    assert np.all(ng_alpha_shape(x[x < 3 * b], b) >= 2)


def test_gamma_pdf_log_at_origin():
    assert gamma_pdf_log(1.0, 0.25, 0.0) == pytest.approx(math.log(4.0), rel=1e-15)
    assert gamma_pdf_log(2.0, 0.25, 0.0) == -np.inf
    with pytest.raises(ValueError):
        gamma_pdf_log(2.0, 0.25, -1.0)


def test_gamma_pdf_log_against_oracles():
    assert math.exp(gamma_pdf_log(5.0, 0.25, 1.0)) == pytest.approx(GAMMA_5_QUARTER_AT_1, rel=1e-13)
    t = np.linspace(0.01, 30, 50)
    assert np.allclose(gamma_pdf_log(3.7, 1.3, t), stats.gamma.logpdf(t, 3.7, scale=1.3), rtol=1e-12)
    total = integrate.quad(lambda u: math.exp(gamma_pdf_log(5.0, 0.25, u)), 0, np.inf)[0]
    assert total == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("shape", [1e3, 1e5, 1e6])
def test_gamma_pdf_log_large_shape_is_finite(shape):
    mp = pytest.importorskip("mpmath")
    mp.mp.dps = 40
    t, scale = shape * 1e-3, 1e-3
    exact = (shape - 1) * mp.log(t) - t / scale - mp.loggamma(shape) - shape * mp.log(scale)
    val = gamma_pdf_log(shape, scale, t)
    assert math.isfinite(val)
    # terms of size ~shape cancel, so roundoff is ~shape * eps in absolute terms
    assert val == pytest.approx(float(exact), abs=shape * 1e-14)


@pytest.mark.parametrize("x2", [0.0, 0.1, 1.0, 5.0])
@pytest.mark.parametrize("b", [0.05, 0.3, 1.0])
@pytest.mark.parametrize("kernel", [gamma_kernel1, gamma_kernel2])
def test_gamma_kernel_normalisation(kernel, x2, b):
    mean = x2 + b * b + 10 * b * math.sqrt(x2 + b * b) + 50 * b * b
    total = integrate.quad(lambda t: kernel(x2, b, t), 0, mean, limit=200, epsabs=1e-10)[0]
    total += integrate.quad(lambda t: kernel(x2, b, t), mean, np.inf, epsabs=1e-12)[0]
    assert total == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("x2", [0.0, 0.1, 1.0, 5.0])
@pytest.mark.parametrize("b", [0.05, 0.3, 1.0])
def test_gamma_kernel1_mean(x2, b):
    shape, scale = gamma1_shape(x2, b), b * b
    assert shape * scale == pytest.approx(x2 + b * b, rel=1e-14)
    mean = integrate.quad(lambda t: t * gamma_kernel1(x2, b, t), 0, np.inf, limit=200)[0]
    assert mean == pytest.approx(x2 + b * b, abs=1e-6)


def test_kernel_params_validation():
    with pytest.raises(ValueError):
        GammaKernelParams(0.5, 1.0)
    with pytest.raises(ValueError):
        GammaKernelParams(2.0, 0.0)
    with pytest.raises(ValueError):
        NgTheta(0.0, -1.0, 2.0, 1.0)
    with pytest.raises(ValueError):
        NgTheta(float("nan"), 1.0, 2.0, 1.0)


def test_ng_pdf_closed_form_and_factorisation():
    theta = NgTheta(0.0, 1.0, 3.0, 1.0)
    assert ng_pdf(theta, 0.0, 1.0) == pytest.approx(NG_0131_AT_01, rel=1e-13)
    lhs = ng_pdf(theta, 0.5, 2.0)
    rhs = stats.norm.pdf(0.5, 0.0, math.sqrt(1 / 2.0)) * math.exp(gamma_pdf_log(3.0, 1.0, 2.0))
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_ng_pdf_edge_and_domain():
    theta = NgTheta(0.0, 1.0, 3.0, 1.0)
    assert ng_pdf(theta, 0.3, 0.0) == 0.0
    with pytest.raises(ValueError):
        ng_pdf(theta, 0.0, -1.0)
    low = NgTheta(0.0, 1.0, 0.4, 1.0)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        assert ng_logpdf(low, 0.0, 0.0) == -np.inf
    assert any(issubclass(w.category, RuntimeWarning) for w in caught)


def _ng_mass(theta):
    # t2 range holding all but ~1e-12 of the gamma factor
    hi = stats.gamma.ppf(1 - 1e-13, theta.alpha, scale=1 / theta.beta)
    lo = stats.gamma.ppf(1e-13, theta.alpha, scale=1 / theta.beta)

    def inner(t2):
        sd = 1 / math.sqrt(theta.lam * t2)
        return integrate.quad(lambda t1: ng_pdf(theta, t1, t2), theta.mu - 12 * sd, theta.mu + 12 * sd, epsabs=1e-12)[0]

    return integrate.quad(inner, lo, hi, limit=200, epsabs=1e-10)[0]


@pytest.mark.parametrize("make", [make_theta1, make_theta2])
@pytest.mark.parametrize("x", [(0.0, 0.0), (1.0, 2.0), (-3.0, 0.05)])
@pytest.mark.parametrize("b1,b2", [(0.1, 0.1), (0.01, 0.3)])
def test_ng_pdf_normalisation(make, x, b1, b2):
    assert _ng_mass(make(x, b1, b2)) == pytest.approx(1.0, abs=1e-6)


def test_make_theta1_examples():
    th = make_theta1((1.0, 2.0), 0.1, 0.1)
    assert (th.mu, th.alpha, th.beta) == (1.0, pytest.approx(22.0), pytest.approx(10.0))
    assert th.lam == pytest.approx(1 / (0.11 * 2.1), rel=1e-14)
    th = make_theta1((0.0, 0.0), 0.1, 0.1)
    assert th.lam == pytest.approx(1000.0, rel=1e-13)
    assert th.alpha == 2.0


@given(st.floats(-50, 50), st.floats(0, 50), st.floats(1e-3, 2), st.floats(1e-3, 2))
def test_theta1_alpha_minus_beta_x2(x1, x2, b1, b2):
    th = make_theta1((x1, x2), b1, b2)
    assert th.alpha - th.beta * x2 == pytest.approx(2.0, rel=1e-12, abs=1e-9)


def test_make_theta2_examples():
    b2 = 0.1
    assert make_theta2((1.0, 3 * b2), 0.1, b2).alpha == pytest.approx(3.0, rel=1e-15)
    th = make_theta2((0.0, 0.0), 0.1, 0.1)
    assert th == make_theta1((0.0, 0.0), 0.1, 0.1)
    th = make_theta2((-2.0, 0.15), 0.1, 0.1)
    assert th.alpha == pytest.approx(2.25, rel=1e-14)
    assert th.lam == pytest.approx(1 / ((2 * 0.1 + 0.01) * 0.25), rel=1e-14)


@settings(max_examples=100)
@given(st.floats(1e-3, 5), st.floats(0, 1e3), st.floats(-20, 20), st.floats(0, 50))
def test_kernels_finite_and_nonnegative(b, x2, t1, t2):
    for v in (gamma_kernel1(x2, b, t2), gamma_kernel2(x2, b, t2), ng_pdf(make_theta2((t1, x2), b, b), 0.0, t2)):
        assert math.isfinite(v) and v >= 0
