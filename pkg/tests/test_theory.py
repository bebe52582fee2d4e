import json
import math

import numpy as np
import pytest
from scipy import optimize, stats

from ngkde.errors import NumericalError
from ngkde.estimators import BandwidthVec, EstimatorKind, Grid2D
from ngkde.kernels import gaussian_constants
from ngkde.targets import MarginComponent, TargetSpec, builtin_target
from ngkde.theory import (
    NG_LIMIT_CONSTANT,
    NG_LIMIT_CONSTANT_EXACT,
    AmiseReport,
    amise_report,
    bias_functional,
    bias_leading,
    partials,
    variance_integral,
    variance_leading,
)
from oracles import symbolic_partials

THEORY_KINDS = [EstimatorKind.F1, EstimatorKind.F2, EstimatorKind.F3, EstimatorKind.F4]
NORMAL_GAMMA = TargetSpec(
    "normal-gamma",
    (MarginComponent("Normal", location=0.0, scale=1.0),),
    (MarginComponent("Gamma", shape=3.0, scale=1.0),),
    (-8.0, 8.0, 0.0, 20.0),
)
GAUSS_PRODUCT = TargetSpec(
    "gauss-product",
    (MarginComponent("Normal", location=0.5, scale=1.2),),
    (MarginComponent("TruncatedNormalAtZero", location=3.0, scale=0.8),),
    (-8.0, 8.0, 0.0, 8.0),
)


def _normal_gamma_exact(x1, x2):
    phi = stats.norm.pdf(x1)
    g = x2 * x2 * math.exp(-x2) / 2
    g1 = (2 * x2 - x2 * x2) * math.exp(-x2) / 2
    g2 = (2 - 4 * x2 + x2 * x2) * math.exp(-x2) / 2
    return dict(f=phi * g, f1=-x1 * phi * g, f2=phi * g1, f11=(x1 * x1 - 1) * phi * g, f22=phi * g2, f12=-x1 * phi * g1)


def test_partials_at_mode_line():
    p = partials(NORMAL_GAMMA, (0.0, 2.0))
    assert abs(p.f1) < 1e-6
    assert p.f11 == pytest.approx(-stats.norm.pdf(0) * stats.gamma.pdf(2.0, 3), rel=1e-6)


def test_mixed_partial_symmetric():
    # f12 from the library against d/dx2 of the library's f1
    x, h = (0.7, 1.5), 1e-3
    p = partials(NORMAL_GAMMA, x)
    f21 = (partials(NORMAL_GAMMA, (x[0], x[1] + h)).f1 - partials(NORMAL_GAMMA, (x[0], x[1] - h)).f1) / (2 * h)
    assert p.f12 == pytest.approx(f21, abs=1e-6)


def test_partials_match_analytic_gaussian_product():
    fs = symbolic_partials(GAUSS_PRODUCT)
    rng = np.random.default_rng(0)
    pts = np.column_stack([rng.uniform(-3, 4, 20), rng.uniform(1.0, 5.0, 20)])
    for x in pts:
        p = partials(GAUSS_PRODUCT, x)
        got = [p.f, p.f1, p.f2, p.f11, p.f22, p.f12]
        for g, fn in zip(got, fs):
            exact = float(fn(*x))
            assert g == pytest.approx(exact, rel=1e-5, abs=1e-5 * abs(float(fs[0](*x))))


@pytest.mark.parametrize("x", [(0.3, 0.0), (-1.0, 1e-4), (2.0, 3e-3)])
def test_one_sided_partials_near_boundary(x):
    exact = _normal_gamma_exact(*x)
    p = partials(NORMAL_GAMMA, x)
    for name, v in exact.items():
        assert getattr(p, name) == pytest.approx(v, abs=2e-5)


@pytest.mark.parametrize("tid", ["f1", "f2", "f3", "f4"])
def test_partials_builtin_targets(tid):
    t = builtin_target(tid)
    fs = symbolic_partials(t)
    for x in [(1.3, 0.7), (-2.1, 1.9), (0.4, 0.25)]:
        p = partials(t, x)
        scale = max(abs(float(fn(*x))) for fn in fs)
        # wide boxes give steps of ~4e-3, so O(step**2) truncation dominates
        for g, fn in zip([p.f, p.f1, p.f2, p.f11, p.f22, p.f12], fs):
            assert g == pytest.approx(float(fn(*x)), abs=1e-4 * scale)


def test_partials_outside_box():
    with pytest.raises(ValueError):
        partials(NORMAL_GAMMA, (9.0, 1.0))
    with pytest.raises(ValueError):
        partials(NORMAL_GAMMA, (0.0, 25.0))


def test_f1_bias_against_symbolic_derivatives():
    t = builtin_target("f2")
    f, f1, f2, f11, f22, f12 = symbolic_partials(t)
    x, h, b = (1.0, 2.0), 0.1, 0.1
    k2, _ = gaussian_constants()
    exact = 0.5 * k2 * h * h * f11(*x) + b * b * (f2(*x) + 0.5 * x[1] * f22(*x))
    got = bias_leading("f1", t, x, BandwidthVec(h=h, b=b))
    assert got == pytest.approx(float(exact), rel=1e-5)


def test_f3_bias_without_x1_term_at_axis():
    t = builtin_target("f2")
    a = bias_leading("f3", t, (0.0, 1.5), BandwidthVec(b1=0.01, b2=0.02))
    b = bias_leading("f3", t, (0.0, 1.5), BandwidthVec(b1=0.5, b2=0.02))
    assert a == b


def test_bias_jump_at_knots_is_the_dropped_term():
    # the branch below the knot drops the x2*f22 term, so the jump is exactly it
    t = builtin_target("f4")
    b = 0.3
    knot = 2 * b * b
    p = partials(t, (0.5, knot))
    bw = BandwidthVec(h=0.2, b=b)
    above = bias_leading("f2", t, (0.5, knot), bw, p)
    below = bias_leading("f2", t, (0.5, np.nextafter(knot, 0)), bw, p)
    assert above - below == pytest.approx(b**4 * p.f22, rel=1e-9)

    b2 = 0.1
    knot = 3 * b2
    p = partials(t, (0.5, knot))
    bw = BandwidthVec(b1=0.05, b2=b2)
    above = bias_leading("f4", t, (0.5, knot), bw, p)
    below = bias_leading("f4", t, (0.5, np.nextafter(knot, 0)), bw, p)
    assert above - below == pytest.approx(1.5 * b2 * b2 * p.f22, rel=1e-9)


@pytest.mark.parametrize("kind,bw,knot", [("f2", BandwidthVec(h=0.2, b=0.3), 0.18), ("f4", BandwidthVec(b1=0.05, b2=0.1), 0.3)])
def test_variance_continuous_at_knots(kind, bw, knot):
    t = builtin_target("f4")
    for eps in (1e-6, 1e-9, 1e-12):
        lo = variance_leading(kind, t, (0.5, knot * (1 - eps)), bw, 100)
        hi = variance_leading(kind, t, (0.5, knot * (1 + eps)), bw, 100)
        assert abs(hi - lo) <= 1e-8 * abs(hi) + 10 * eps * abs(hi)


def test_f1_boundary_constant_at_zero():
    t = builtin_target("f1")
    h, b, n = 0.3, 0.2, 50
    _, k3 = gaussian_constants()
    f = float(t.pdf(0.4, 0.0))
    got = variance_leading("f1", t, (0.4, 0.0), BandwidthVec(h=h, b=b), n)
    assert got == pytest.approx(0.5 * k3 * f / (n * h * b * b), rel=1e-14)


def test_f3_interior_homogeneity_in_x1():
    t = builtin_target("f2")
    bw = BandwidthVec(b1=0.01, b2=0.01)
    v1 = variance_leading("f3", t, (0.5, 2.0), bw, 10_000) / float(t.pdf(0.5, 2.0))
    v4 = variance_leading("f3", t, (2.0, 2.0), bw, 10_000) / float(t.pdf(2.0, 2.0))
    assert v4 == pytest.approx(v1 / 2, rel=1e-14)


def test_f3_interior_n_scaling():
    t = builtin_target("f2")
    bw = BandwidthVec(b1=0.01, b2=0.01)
    v = variance_leading("f3", t, (1.0, 2.0), bw, 10_000)
    assert v > 0
    assert variance_leading("f3", t, (1.0, 2.0), bw, 40_000) == pytest.approx(v / 4, rel=1e-14)


def test_ng_constants():
    t = builtin_target("f2")
    bw = BandwidthVec(b1=0.01, b2=0.01)
    paper = variance_leading("f3", t, (1.0, 2.0), bw, 100, regime="interior")
    exact = variance_leading("f3", t, (1.0, 2.0), bw, 100, regime="interior", ng_constant="exact")
    assert exact / paper == pytest.approx(NG_LIMIT_CONSTANT_EXACT / NG_LIMIT_CONSTANT, rel=1e-14)
    assert NG_LIMIT_CONSTANT_EXACT / NG_LIMIT_CONSTANT == pytest.approx(math.sqrt(math.e), rel=1e-15)


@pytest.mark.parametrize("kind", ["f3", "f4"])
def test_ng_boundary_factor_tends_to_interior(kind):
    # the exact squared-kernel factor approaches the exact interior constant deep inside
    t = builtin_target("f2")
    bw = BandwidthVec(b1=1e-4, b2=1e-4)
    x = (1.0, 2.0)
    bnd = variance_leading(kind, t, x, bw, 100, regime="boundary")
    inner = variance_leading(kind, t, x, bw, 100, regime="interior", ng_constant="exact")
    assert bnd == pytest.approx(inner, rel=1e-3)


def test_variance_errors():
    t = builtin_target("f2")
    bw = BandwidthVec(h=0.1, b=0.1, b1=0.01, b2=0.01)
    with pytest.raises(ValueError):
        variance_leading("f1", t, (0.0, 0.0), bw, 10, regime="interior")
    with pytest.raises(ValueError):
        variance_leading("f3", t, (0.0, 1.0), bw, 10, regime="interior")
    with pytest.raises(ValueError):
        variance_leading("f5", t, (0.0, 1.0), bw, 10)
    with pytest.raises(ValueError):
        variance_leading("f1", t, (0.0, 1.0), bw, 0)


def _report(kind, B=0.7, V=0.3):
    return AmiseReport(EstimatorKind.parse(kind), "synthetic", B, V)


@pytest.mark.parametrize("kind", THEORY_KINDS)
@pytest.mark.parametrize("n", [100, 200, 12345])
def test_rates(kind, n):
    r = _report(kind)
    factor = 64 if kind in (EstimatorKind.F1, EstimatorKind.F2) else 8
    assert r.s0_opt(factor * n) / r.s0_opt(n) == pytest.approx(0.5, abs=1e-12)
    assert r.amise_opt(64 * n) / r.amise_opt(n) == pytest.approx(1 / 16, abs=1e-12)


@pytest.mark.parametrize("kind", THEORY_KINDS)
def test_amise_minimiser_is_s0(kind):
    r = _report(kind, 1.3, 0.4)
    n = 250
    res = optimize.minimize_scalar(lambda ls: r.amise(math.exp(ls), n), bounds=(-8, 3), method="bounded", options={"xatol": 1e-10})
    assert math.exp(res.x) == pytest.approx(r.s0_opt(n), rel=1e-6)
    assert r.amise(r.s0_opt(n), n) == pytest.approx(r.amise_opt(n), rel=1e-12)


def _symbolic_bias_functional(kind, target, m=800):
    f, f1, f2, f11, f22, f12 = symbolic_partials(target)
    a, b, c, d = target.box
    x1 = a + (np.arange(m) + 0.5) * (b - a) / m
    x2 = c + (np.arange(m) + 0.5) * (d - c) / m
    X1, X2 = np.meshgrid(x1, x2, indexing="ij")
    F2, F11, F22 = f2(X1, X2), f11(X1, X2), f22(X1, X2)
    g = {
        EstimatorKind.F1: 0.5 * F11 + F2 + 0.5 * X2 * F22,
        EstimatorKind.F2: F11 + X2 * F22,
        EstimatorKind.F3: 0.5 * np.abs(X1) * F11 + 2 * F2 + 0.5 * X2 * F22,
        EstimatorKind.F4: np.abs(X1) * F11 + X2 * F22,
    }[kind]
    return float(np.sum(g * g) * (b - a) * (d - c) / m**2)


@pytest.mark.parametrize("kind", THEORY_KINDS)
@pytest.mark.parametrize("tid", ["f2", "f4"])
def test_bias_functional_against_symbolic(kind, tid):
    t = builtin_target(tid)
    got = amise_report(kind, t).bias_functional
    assert got == pytest.approx(_symbolic_bias_functional(kind, t), rel=5e-3)


@pytest.mark.parametrize("kind", THEORY_KINDS)
@pytest.mark.parametrize("tid", ["f1", "f2", "f3", "f4"])
def test_quadrature_doubling_converges(kind, tid):
    t = builtin_target(tid)
    coarse = bias_functional(kind, t, Grid2D.from_box(t.box, 200, 200))
    fine = bias_functional(kind, t, Grid2D.from_box(t.box, 400, 400))
    assert fine == pytest.approx(coarse, rel=5e-3)
    assert variance_integral(kind, t, 400) == pytest.approx(variance_integral(kind, t, 200), rel=5e-3)


def test_variance_integral_closed_form():
    # integral of x2**-1/2 over Ga(3,1) is Gamma(2.5)/Gamma(3), the x1 margin integrates to its box mass
    t = NORMAL_GAMMA
    expected = math.gamma(2.5) / math.gamma(3.0) * (stats.norm.cdf(8) - stats.norm.cdf(-8)) * stats.gamma.cdf(20, 2.5)
    assert variance_integral("f1", t, 400) == pytest.approx(expected, rel=1e-6)


def test_non_convergent_quadrature_reports_trace():
    t = builtin_target("f4")
    with pytest.raises(NumericalError) as info:
        amise_report("f4", t, tol=1e-14, max_level=1)
    assert len(info.value.trace) == 2


def test_amise_report_json_and_ordering_on_f4():
    t = builtin_target("f4")
    reports = {k: amise_report(k, t) for k in THEORY_KINDS}
    doc = json.loads(reports[EstimatorKind.F1].to_json())
    assert doc["estimator"] == "f1" and doc["n_ref"] == 200
    assert all(r.bias_functional > 0 and r.variance_functional > 0 for r in reports.values())
    # normal-gamma estimators carry the faster n**-2/3 rate at equal n with smaller constants here
    assert reports[EstimatorKind.F4].amise_opt(200) < reports[EstimatorKind.F3].amise_opt(200)


def test_integrated_variance_consistency():
    # quadrature of the pointwise leading variance recovers the integrated constant
    t = builtin_target("f2")
    b, n, m = 1e-3, 1000, 200
    bw = BandwidthVec(b1=b, b2=b)
    a, bb, c, d = t.box
    u = (np.arange(m) + 0.5) * math.sqrt(d) / m
    du = math.sqrt(d) / m
    total = 0.0
    for sign, hi in ((1.0, bb), (-1.0, -a)):
        v = (np.arange(m) + 0.5) * math.sqrt(hi) / m
        dv = math.sqrt(hi) / m
        for vi in v:
            for ui in u:
                total += variance_leading("f3", t, (sign * vi * vi, ui * ui), bw, n) * 4 * vi * ui * dv * du
    expected = NG_LIMIT_CONSTANT * variance_integral("f3", t, 400) / (n * b)
    assert total == pytest.approx(expected, rel=0.02)
