"""Leading-order bias, variance and AMISE of the estimators for a known target.

Everything is evaluated numerically from the target density: partial
derivatives by finite differences, integrals by midpoint quadrature.  The
``x2**-1/2`` and ``|x1|**-1/2`` weights of the variance functionals are
integrated after the substitution ``x = u**2``, which turns them into smooth
integrands.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import NumericalError
from .estimators import BandwidthVec, EstimatorKind, Grid2D
from .kernels import gaussian_constants, gamma2_shape, ng_alpha_shape
from .targets import TargetSpec

__all__ = [
    "Partials2",
    "AmiseReport",
    "partials",
    "partials_grid",
    "bias_leading",
    "variance_leading",
    "amise_report",
    "bias_functional",
    "variance_integral",
    "NG_LIMIT_CONSTANT",
    "NG_LIMIT_CONSTANT_EXACT",
    "REGIME_CROSSOVER",
]

# Large-shape limit of the normal-gamma variance factor as printed with the
# estimator's theory; the exact limit of the same gamma-function ratio is
# 1/(4 pi).
NG_LIMIT_CONSTANT = 1.0 / (4.0 * math.pi * math.sqrt(math.e))
NG_LIMIT_CONSTANT_EXACT = 1.0 / (4.0 * math.pi)

GAMMA_LIMIT_CONSTANT = 1.0 / (2.0 * math.sqrt(math.pi))

# boundary-regime formulas are used while x2/b**2 (x2/b2, |x1|/b1) <= this
REGIME_CROSSOVER = 20.0

_LOG2 = math.log(2.0)
_BIAS_KINDS = (EstimatorKind.F1, EstimatorKind.F2, EstimatorKind.F3, EstimatorKind.F4)


@dataclass(frozen=True)
class Partials2:
    """Density and its first and second partial derivatives at a point."""

    f: float
    f1: float
    f2: float
    f11: float
    f22: float
    f12: float


def _default_steps(target: TargetSpec):
    a, b, c, d = target.box
    return 1e-4 * (b - a), 1e-4 * (d - c)


def _steps(target, step):
    if step is None:
        return _default_steps(target)
    if np.ndim(step) == 0:
        if not step > 0:
            raise ValueError("step must be positive")
        return float(step), float(step)
    s1, s2 = step
    if not (s1 > 0 and s2 > 0):
        raise ValueError("steps must be positive")
    return float(s1), float(s2)


def _partials_arrays(target: TargetSpec, x1, x2, h1, h2):
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    pdf = target.pdf
    f0 = pdf(x1, x2)
    fp, fm = pdf(x1 + h1, x2), pdf(x1 - h1, x2)
    f1 = (fp - fm) / (2 * h1)
    f11 = (fp - 2 * f0 + fm) / (h1 * h1)

    one_sided = x2 < 2 * h2
    # central stencils only where they stay inside x2 >= 0
    x2c = np.where(one_sided, x2 + 2 * h2, x2)
    up, dn = pdf(x1, x2c + h2), pdf(x1, x2c - h2)
    f2 = (up - dn) / (2 * h2)
    f22 = (up - 2 * f0 + dn) / (h2 * h2)
    g_up = (pdf(x1 + h1, x2c + h2) - pdf(x1 - h1, x2c + h2)) / (2 * h1)
    g_dn = (pdf(x1 + h1, x2c - h2) - pdf(x1 - h1, x2c - h2)) / (2 * h1)
    f12 = (g_up - g_dn) / (2 * h2)

    if np.any(one_sided):
        q1, q2, q3 = pdf(x1, x2 + h2), pdf(x1, x2 + 2 * h2), pdf(x1, x2 + 3 * h2)
        f2_os = (-3 * f0 + 4 * q1 - q2) / (2 * h2)
        f22_os = (2 * f0 - 5 * q1 + 4 * q2 - q3) / (h2 * h2)

        def gx(xx2):
            return (pdf(x1 + h1, xx2) - pdf(x1 - h1, xx2)) / (2 * h1)

        f12_os = (-3 * gx(x2) + 4 * gx(x2 + h2) - gx(x2 + 2 * h2)) / (2 * h2)
        f2 = np.where(one_sided, f2_os, f2)
        f22 = np.where(one_sided, f22_os, f22)
        f12 = np.where(one_sided, f12_os, f12)
    return f0, f1, f2, f11, f22, f12


def partials(target: TargetSpec, x, step=None) -> Partials2:
    """Finite-difference partials of the target density at ``x``.

    ``step`` is a scalar (both axes) or a pair; the default is 1e-4 times the
    box extent per axis.  Points with ``x2 < 2*step`` use one-sided
    second-order stencils in ``x2``.
    """
    h1, h2 = _steps(target, step)
    x1, x2 = float(x[0]), float(x[1])
    a, b, c, d = target.box
    if not (a + 2 * h1 <= x1 <= b - 2 * h1 and c <= x2 <= d - 3 * h2):
        raise ValueError(f"point {x} is outside the target box {target.box} (with stencil margin)")
    vals = _partials_arrays(target, np.array([x1]), np.array([x2]), h1, h2)
    return Partials2(*(float(v[0]) for v in vals))


def partials_grid(target: TargetSpec, grid: Grid2D, step=None):
    """Partials on every node of ``grid`` as a :class:`Partials2` of arrays."""
    h1, h2 = _steps(target, step)
    m1, m2 = grid.mesh()
    return Partials2(*_partials_arrays(target, m1, m2, h1, h2))


def _get_partials(target, x, p):
    return partials(target, x) if p is None else p


def bias_leading(kind, target: TargetSpec, x, bw: BandwidthVec, p: Partials2 | None = None) -> float:
    """Leading bias term of the estimator at ``x``.

    Precomputed partials may be passed as ``p`` to skip the finite
    differences.
    """
    kind = EstimatorKind.parse(kind)
    if kind not in _BIAS_KINDS:
        raise ValueError("leading-term theory is available for f1..f4 only")
    p = _get_partials(target, x, p)
    x1, x2 = float(x[0]), float(x[1])
    k2, _ = gaussian_constants()
    if kind is EstimatorKind.F1:
        h, b = bw.pair(kind)
        return 0.5 * k2 * h * h * p.f11 + b * b * (p.f2 + 0.5 * x2 * p.f22)
    if kind is EstimatorKind.F2:
        h, b = bw.pair(kind)
        if x2 >= 2 * b * b:
            return 0.5 * k2 * h * h * p.f11 + 0.5 * b * b * x2 * p.f22
        return 0.5 * k2 * h * h * p.f11 + b * b * (gamma2_shape(x2, b) - x2 / (b * b)) * p.f2
    b1, b2 = bw.pair(kind)
    if kind is EstimatorKind.F3:
        return b1 * 0.5 * abs(x1) * p.f11 + b2 * (2 * p.f2 + 0.5 * x2 * p.f22)
    if x2 >= 3 * b2:
        return 0.5 * (b1 * abs(x1) * p.f11 + b2 * x2 * p.f22)
    return 0.5 * b1 * abs(x1) * p.f11 + b2 * (ng_alpha_shape(x2, b2) - x2 / b2) * p.f2


def _gamma_square_factor(shape):
    """Gamma(2r-1) / (2**(2r-1) Gamma(r)**2): integral of a squared gamma kernel times b**2."""
    return math.exp(math.lgamma(2 * shape - 1) - (2 * shape - 1) * _LOG2 - 2 * math.lgamma(shape))


def _ng_square_factor(alpha):
    """Gamma(2a-1/2) / (sqrt(pi) 2**(2a+1/2) Gamma(a)**2)."""
    return math.exp(
        math.lgamma(2 * alpha - 0.5) - 0.5 * math.log(math.pi) - (2 * alpha + 0.5) * _LOG2 - 2 * math.lgamma(alpha)
    )


def _ng_limit(ng_constant):
    if ng_constant == "paper":
        return NG_LIMIT_CONSTANT
    if ng_constant == "exact":
        return NG_LIMIT_CONSTANT_EXACT
    raise ValueError("ng_constant must be 'paper' or 'exact'")


def variance_leading(
    kind,
    target: TargetSpec,
    x,
    bw: BandwidthVec,
    n: int,
    regime: str = "auto",
    crossover: float = REGIME_CROSSOVER,
    ng_constant: str = "paper",
) -> float:
    """Leading variance term of the estimator at ``x``.

    ``regime`` is ``"auto"`` (interior formula once the point is more than
    ``crossover`` smoothing units from the boundary, per coordinate),
    ``"interior"`` or ``"boundary"``.  Boundary regimes evaluate the
    squared-kernel factor at the current ratio ``kappa``.
    """
    kind = EstimatorKind.parse(kind)
    if kind not in _BIAS_KINDS:
        raise ValueError("leading-term theory is available for f1..f4 only")
    if regime not in ("auto", "interior", "boundary"):
        raise ValueError(f"unknown regime {regime!r}")
    if n < 1:
        raise ValueError("n must be >= 1")
    x1, x2 = float(x[0]), float(x[1])
    if x2 < 0:
        raise ValueError("x2 must be nonnegative")
    f = float(target.pdf(x1, x2))
    _, k3 = gaussian_constants()

    if kind in (EstimatorKind.F1, EstimatorKind.F2):
        h, b = bw.pair(kind)
        kappa = x2 / (b * b)
        interior = kappa > crossover if regime == "auto" else regime == "interior"
        if interior:
            if x2 == 0:
                raise ValueError("interior variance formula is singular at x2 = 0")
            return GAMMA_LIMIT_CONSTANT * k3 * f / (n * h * b * math.sqrt(x2))
        shape = kappa + 1.0 if kind is EstimatorKind.F1 else gamma2_shape(x2, b)
        return _gamma_square_factor(shape) * k3 * f / (n * h * b * b)

    b1, b2 = bw.pair(kind)
    k1, kk2 = abs(x1) / b1, x2 / b2
    if regime == "auto":
        int1, int2 = k1 > crossover, kk2 > crossover
    else:
        int1 = int2 = regime == "interior"
    if regime == "interior" and (x1 == 0 or x2 == 0):
        raise ValueError("interior variance formula is singular at x1 = 0 or x2 = 0")
    limit = _ng_limit(ng_constant)
    alpha = kk2 + 2.0 if kind is EstimatorKind.F3 else ng_alpha_shape(x2, b2)
    if int1 and int2:
        c = limit / math.sqrt(b1 * b2 * abs(x1) * x2)
    elif not int1 and not int2:
        c = _ng_square_factor(alpha) / (math.sqrt((k1 + 1) * (kk2 + 1)) * b1 * b2)
    elif int1:
        c = _ng_square_factor(alpha) / (math.sqrt(kk2 + 1) * math.sqrt(b1 * abs(x1)) * b2)
    else:
        c = limit / (math.sqrt(k1 + 1) * b1 * math.sqrt(b2 * x2))
    return c * f / n


# ---------------------------------------------------------------------------
# integrated functionals


def _bias_integrand(kind, p: Partials2, x1, x2):
    k2, _ = gaussian_constants()
    if kind is EstimatorKind.F1:
        return 0.5 * k2 * p.f11 + p.f2 + 0.5 * x2 * p.f22
    if kind is EstimatorKind.F2:
        return k2 * p.f11 + x2 * p.f22
    if kind is EstimatorKind.F3:
        return 0.5 * np.abs(x1) * p.f11 + 2 * p.f2 + 0.5 * x2 * p.f22
    return np.abs(x1) * p.f11 + x2 * p.f22


def bias_functional(kind, target: TargetSpec, grid: Grid2D) -> float:
    """Midpoint integral of the squared bias integrand over ``grid``."""
    kind = EstimatorKind.parse(kind)
    p = partials_grid(target, grid)
    m1, m2 = grid.mesh()
    g = _bias_integrand(kind, p, m1, m2)
    return float(np.sum(g * g) * grid.cell_area)


def _sqrt_segments(lo, hi):
    """Pieces (sign, u_lo, u_hi) covering [lo, hi] under x = sign * u**2."""
    segs = []
    if hi > 0:
        segs.append((1.0, math.sqrt(max(lo, 0.0)), math.sqrt(hi)))
    if lo < 0:
        segs.append((-1.0, math.sqrt(max(-hi, 0.0)), math.sqrt(-lo)))
    return segs


def _midpoints(lo, hi, m):
    step = (hi - lo) / m
    return lo + (np.arange(m) + 0.5) * step, step


def variance_integral(kind, target: TargetSpec, m: int) -> float:
    """Integral of ``x2**-1/2 f`` (F1/F2) or ``|x1|**-1/2 x2**-1/2 f`` (F3/F4).

    Uses ``m`` midpoint nodes per axis and per substituted segment.
    """
    kind = EstimatorKind.parse(kind)
    a, b, c, d = target.box
    total = 0.0
    for _, u_lo, u_hi in _sqrt_segments(c, d):
        u, du = _midpoints(u_lo, u_hi, m)
        if kind in (EstimatorKind.F1, EstimatorKind.F2):
            x1, dx1 = _midpoints(a, b, m)
            X1, U = np.meshgrid(x1, u, indexing="ij")
            total += float(np.sum(2.0 * target.pdf(X1, U * U)) * dx1 * du)
        else:
            for sign, v_lo, v_hi in _sqrt_segments(a, b):
                v, dv = _midpoints(v_lo, v_hi, m)
                V, U = np.meshgrid(v, u, indexing="ij")
                total += float(np.sum(4.0 * target.pdf(sign * V * V, U * U)) * dv * du)
    return total


def _converged(fn, start, tol, max_level, what):
    trace = []
    m = start
    prev = fn(m)
    trace.append((m, prev))
    for _ in range(max_level):
        m *= 2
        cur = fn(m)
        trace.append((m, cur))
        if prev != 0 and abs(cur - prev) <= tol * abs(cur):
            return cur, trace
        prev = cur
    raise NumericalError(f"{what} quadrature did not converge to {tol:.1%}", trace)


@dataclass
class AmiseReport:
    """Integrated leading-term constants of one estimator for one target.

    ``bias_functional`` is the integral of the squared bias integrand as
    displayed with the optimal-bandwidth formula of the estimator and
    ``variance_functional`` the weighted integral of ``f``.
    """

    kind: EstimatorKind
    target: str
    bias_functional: float
    variance_functional: float
    n_ref: int = 200
    ng_constant: str = "paper"
    quadrature: dict = field(default_factory=dict)

    @property
    def variance_constant(self) -> float:
        """Variance functional times its kernel constant."""
        if self.kind in (EstimatorKind.F1, EstimatorKind.F2):
            _, k3 = gaussian_constants()
            return GAMMA_LIMIT_CONSTANT * k3 * self.variance_functional
        return _ng_limit(self.ng_constant) * self.variance_functional

    @property
    def _bias_weight(self):
        # F2/F4 displays carry a factor 1/2 in the optimal bandwidth and 1/4 in AMISE
        return 2.0 if self.kind in (EstimatorKind.F1, EstimatorKind.F3) else 0.5

    @property
    def _rate(self):
        return 6.0 if self.kind in (EstimatorKind.F1, EstimatorKind.F2) else 3.0

    def s0_opt(self, n) -> float:
        """Optimal tied bandwidth (h = b for F1/F2, b1 = b2 for F3/F4)."""
        ratio = self.variance_constant / (self._bias_weight * self.bias_functional)
        return ratio ** (1.0 / self._rate) * float(n) ** (-1.0 / self._rate)

    def amise_opt(self, n) -> float:
        const = 3.0 / 2.0 ** (2.0 / 3.0) if self._bias_weight == 2.0 else 3.0 / 2.0 ** (4.0 / 3.0)
        return (
            const
            * self.bias_functional ** (1.0 / 3.0)
            * self.variance_constant ** (2.0 / 3.0)
            * float(n) ** (-2.0 / 3.0)
        )

    def amise(self, s, n) -> float:
        """AMISE at the tied bandwidth ``s`` (h = b = s, or b1 = b2 = s)."""
        scale = self._bias_weight / 2.0 if self._bias_weight == 2.0 else 0.25
        if self._rate == 6.0:
            return scale * self.bias_functional * s**4 + self.variance_constant / (n * s * s)
        return scale * self.bias_functional * s**2 + self.variance_constant / (n * s)

    def to_dict(self) -> dict:
        return {
            "estimator": self.kind.value,
            "target": self.target,
            "bias_functional": self.bias_functional,
            "variance_functional": self.variance_functional,
            "variance_constant": self.variance_constant,
            "ng_constant": self.ng_constant,
            "n_ref": self.n_ref,
            "s0_opt": self.s0_opt(self.n_ref),
            "amise_opt": self.amise_opt(self.n_ref),
            "quadrature": self.quadrature,
        }

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=1)
        if path is not None:
            Path(path).write_text(text + "\n")
        return text


def amise_report(
    kind,
    target: TargetSpec,
    grid: Grid2D | None = None,
    n_ref: int = 200,
    tol: float = 5e-3,
    ng_constant: str = "paper",
    max_level: int = 4,
) -> AmiseReport:
    """Evaluate the AMISE constants of ``kind`` for ``target``.

    The bias functional starts on ``grid`` (default 200 x 200 over the target
    box) and the variance functional on 200 nodes per axis; both are refined
    by doubling until successive values agree within ``tol``.
    """
    kind = EstimatorKind.parse(kind)
    if kind not in _BIAS_KINDS:
        raise ValueError("AMISE theory is available for f1..f4 only")
    _ng_limit(ng_constant)
    if grid is None:
        grid = Grid2D.from_box(target.box, 200)
    elif not Grid2D.from_box(target.box, 1).contains(grid):
        raise ValueError("theory grid must lie within the target box")

    def bias_at(m):
        g = Grid2D(grid.x1_lo, grid.x1_hi, grid.x2_lo, grid.x2_hi, grid.nx * m // grid.nx, grid.ny * m // grid.nx)
        return bias_functional(kind, target, g)

    B, btrace = _converged(bias_at, grid.nx, tol, max_level, "bias functional")
    V, vtrace = _converged(lambda m: variance_integral(kind, target, m), 200, tol, max_level, "variance functional")
    if not (B > 0 and V > 0 and math.isfinite(B) and math.isfinite(V)):
        raise NumericalError(f"degenerate functionals B={B}, V={V}", btrace + vtrace)
    return AmiseReport(
        kind,
        target.name,
        B,
        V,
        n_ref=n_ref,
        ng_constant=ng_constant,
        quadrature={"bias_trace": btrace, "variance_trace": vtrace},
    )
