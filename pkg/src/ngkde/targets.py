"""Product-form bivariate target densities and their samplers.

A target is a mixture on the real line for ``x1`` times a mixture on
``[0, inf)`` for ``x2``.  The four simulation targets ``f1`` to ``f4`` are
available through :func:`builtin_target`; custom targets round-trip through
JSON.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import gammainc, gammaln, ndtr

__all__ = [
    "MarginComponent",
    "TargetSpec",
    "builtin_target",
    "BUILTIN_IDS",
    "target_pdf",
    "target_sample",
    "margin_pdf",
    "margin_cdf",
]

REAL_FAMILIES = ("Normal", "Cauchy", "Logistic")
NONNEG_FAMILIES = ("HalfNormal", "Gamma", "Exponential", "TruncatedNormalAtZero")
BUILTIN_IDS = ("f1", "f2", "f3", "f4")

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class MarginComponent:
    """One weighted component of a margin mixture.

    ``scale`` is the standard deviation for Normal, HalfNormal and the
    truncated normal, the scale for Cauchy, Logistic and Gamma.  ``shape`` is
    used by Gamma only and ``rate`` by Exponential only.
    """

    family: str
    weight: float = 1.0
    location: float = 0.0
    scale: float = 1.0
    shape: float = 1.0
    rate: float = 1.0

    def __post_init__(self):
        if self.family not in REAL_FAMILIES + NONNEG_FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if not 0.0 <= self.weight <= 1.0:
            raise ValueError(f"weight must be a probability, got {self.weight}")
        for name in ("scale", "shape", "rate"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        fam = self.family
        if fam in REAL_FAMILIES:
            z = (x - self.location) / self.scale
            if fam == "Normal":
                return _INV_SQRT_2PI * np.exp(-0.5 * z * z) / self.scale
            if fam == "Cauchy":
                return 1.0 / (math.pi * self.scale * (1.0 + z * z))
            # logistic via cosh; cosh overflows to inf far out, giving 0
            with np.errstate(over="ignore"):
                return 1.0 / (4.0 * self.scale * np.cosh(0.5 * z) ** 2)

        pos = x >= 0
        xs = np.where(pos, x, 0.0)
        if fam == "HalfNormal":
            z = xs / self.scale
            out = 2.0 * _INV_SQRT_2PI * np.exp(-0.5 * z * z) / self.scale
        elif fam == "TruncatedNormalAtZero":
            z = (xs - self.location) / self.scale
            mass = ndtr(self.location / self.scale)  # 1 - Phi(-l/s)
            out = _INV_SQRT_2PI * np.exp(-0.5 * z * z) / (self.scale * mass)
        elif fam == "Exponential":
            out = self.rate * np.exp(-self.rate * xs)
        else:
            k, th = self.shape, self.scale
            with np.errstate(divide="ignore"):
                logp = (k - 1.0) * np.log(xs) - xs / th - gammaln(k) - k * math.log(th)
            out = np.exp(logp)
            if k == 1.0:
                out = np.where(xs == 0, 1.0 / th, out)
        return np.where(pos, out, 0.0)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        fam = self.family
        if fam in REAL_FAMILIES:
            z = (x - self.location) / self.scale
            if fam == "Normal":
                return ndtr(z)
            if fam == "Cauchy":
                return 0.5 + np.arctan(z) / math.pi
            return 0.5 * (1.0 + np.tanh(0.5 * z))
        xs = np.maximum(x, 0.0)
        if fam == "HalfNormal":
            out = 2.0 * ndtr(xs / self.scale) - 1.0
        elif fam == "TruncatedNormalAtZero":
            lo = ndtr(-self.location / self.scale)
            out = (ndtr((xs - self.location) / self.scale) - lo) / (1.0 - lo)
        elif fam == "Exponential":
            out = -np.expm1(-self.rate * xs)
        else:
            out = gammainc(self.shape, xs / self.scale)
        return np.where(x >= 0, out, 0.0)

    def sample(self, rng: np.random.Generator, k: int) -> np.ndarray:
        fam = self.family
        if fam == "Normal":
            return rng.normal(self.location, self.scale, size=k)
        if fam == "Cauchy":
            u = rng.random(k)
            return self.location + self.scale * np.tan(math.pi * (u - 0.5))
        if fam == "Logistic":
            return rng.logistic(self.location, self.scale, size=k)
        if fam == "HalfNormal":
            return np.abs(rng.normal(0.0, self.scale, size=k))
        if fam == "Gamma":
            return rng.gamma(self.shape, self.scale, size=k)
        if fam == "Exponential":
            return rng.exponential(1.0 / self.rate, size=k)
        # truncated normal by rejection from the untruncated law
        out = np.empty(k)
        filled = 0
        while filled < k:
            draw = rng.normal(self.location, self.scale, size=max(2 * (k - filled), 16))
            draw = draw[draw >= 0.0][: k - filled]
            out[filled : filled + draw.size] = draw
            filled += draw.size
        return out


def _as_margin(components) -> tuple[MarginComponent, ...]:
    comps = tuple(c if isinstance(c, MarginComponent) else MarginComponent(**c) for c in components)
    if not comps:
        raise ValueError("a margin needs at least one component")
    total = sum(c.weight for c in comps)
    if abs(total - 1.0) > 1e-12:
        raise ValueError(f"margin weights must sum to 1, got {total!r}")
    return comps


def margin_pdf(components, x):
    return sum(c.weight * c.pdf(x) for c in components)


def margin_cdf(components, x):
    return sum(c.weight * c.cdf(x) for c in components)


def _sample_margin(components, rng, n):
    weights = np.array([c.weight for c in components])
    which = np.searchsorted(np.cumsum(weights), rng.random(n), side="right")
    which = np.minimum(which, len(components) - 1)
    out = np.empty(n)
    for j, comp in enumerate(components):
        mask = which == j
        k = int(mask.sum())
        if k:
            out[mask] = comp.sample(rng, k)
    return out


@dataclass(frozen=True)
class TargetSpec:
    """Product density ``pdf(x) = m1(x1) * m2(x2)`` with an integration box.

    ``box`` is ``(x1_lo, x1_hi, x2_lo, x2_hi)`` with ``x2_lo == 0``.
    """

    name: str
    margin_x1: tuple
    margin_x2: tuple
    box: tuple = field(default=(-10.0, 10.0, 0.0, 10.0))

    def __post_init__(self):
        m1 = _as_margin(self.margin_x1)
        m2 = _as_margin(self.margin_x2)
        for c in m1:
            if c.family not in REAL_FAMILIES:
                raise ValueError(f"{c.family} is not allowed on the x1 (real line) margin")
        for c in m2:
            if c.family not in NONNEG_FAMILIES:
                raise ValueError(f"{c.family} is not allowed on the x2 (nonnegative) margin")
        box = tuple(float(v) for v in self.box)
        if len(box) != 4 or not (box[0] < box[1] and box[2] < box[3]) or box[2] < 0:
            raise ValueError(f"invalid integration box {box}")
        object.__setattr__(self, "margin_x1", m1)
        object.__setattr__(self, "margin_x2", m2)
        object.__setattr__(self, "box", box)

    def pdf(self, x1, x2):
        """Vectorised density; raises on negative ``x2``."""
        x2 = np.asarray(x2, dtype=float)
        if np.any(x2 < 0):
            raise ValueError("x2 must be nonnegative")
        return margin_pdf(self.margin_x1, x1) * margin_pdf(self.margin_x2, x2)

    def sample(self, seed: int, n: int) -> np.ndarray:
        """Draw ``n`` observations as an ``(n, 2)`` array."""
        if n < 1:
            raise ValueError("n must be >= 1")
        rng = np.random.default_rng(seed)
        x1 = _sample_margin(self.margin_x1, rng, n)
        x2 = _sample_margin(self.margin_x2, rng, n)
        return np.column_stack([x1, x2])

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "margin_x1": [asdict(c) for c in self.margin_x1],
            "margin_x2": [asdict(c) for c in self.margin_x2],
            "integration_box": list(self.box),
        }

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=2)
        if path is not None:
            Path(path).write_text(text + "\n")
        return text

    @classmethod
    def from_dict(cls, doc: dict) -> "TargetSpec":
        try:
            return cls(
                name=str(doc.get("name", "custom")),
                margin_x1=tuple(doc["margin_x1"]),
                margin_x2=tuple(doc["margin_x2"]),
                box=tuple(doc["integration_box"]),
            )
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed target document: {exc}") from exc

    @classmethod
    def from_json(cls, source) -> "TargetSpec":
        """Load from a path or a JSON string."""
        text = str(source)
        if not text.lstrip().startswith("{"):
            text = Path(source).read_text()
        return cls.from_dict(json.loads(text))


def _builtin(tid):
    N, C = "Normal", "Cauchy"
    if tid == "f1":
        return TargetSpec(
            "f1",
            (MarginComponent(C, 1.0, 0.0, 1.0),),
            (MarginComponent("HalfNormal", 1.0, scale=2.0),),
            (-20.0, 20.0, 0.0, 10.0),
        )
    if tid == "f2":
        return TargetSpec(
            "f2",
            (
                MarginComponent(N, 0.2, -3.0, 1.0),
                MarginComponent(C, 0.6, 0.0, 1.0),
                MarginComponent(N, 0.2, 3.0, 1.0),
            ),
            (MarginComponent("Gamma", 1.0, shape=3.0, scale=1.0),),
            (-10.0, 10.0, 0.0, 15.0),
        )
    if tid == "f3":
        return TargetSpec(
            "f3",
            (
                MarginComponent(N, 0.4, -3.0, 3.0),
                MarginComponent(C, 0.2, 0.0, 1.0),
                MarginComponent(N, 0.4, 3.0, 3.0),
            ),
            (MarginComponent("Exponential", 1.0, rate=1.0),),
            (-12.0, 12.0, 0.0, 10.0),
        )
    if tid == "f4":
        return TargetSpec(
            "f4",
            (
                MarginComponent("Logistic", 0.5, -1.0, 0.5),
                MarginComponent("Logistic", 0.5, 1.5, 0.7),
            ),
            (
                MarginComponent("TruncatedNormalAtZero", 0.6, 0.0, 0.5),
                MarginComponent("TruncatedNormalAtZero", 0.4, 1.3, 0.25),
            ),
            (-8.0, 10.0, 0.0, 3.0),
        )
    raise ValueError(f"unknown target id {tid!r}; expected one of {BUILTIN_IDS}")


def builtin_target(tid: str) -> TargetSpec:
    """Return one of the simulation targets ``f1`` .. ``f4``."""
    return _builtin(tid)


def target_pdf(spec: TargetSpec, x) -> float:
    """Density of ``spec`` at the point ``x = (x1, x2)``."""
    x1, x2 = float(x[0]), float(x[1])
    return float(spec.pdf(x1, x2))


def target_sample(spec: TargetSpec, seed: int, n: int) -> np.ndarray:
    return spec.sample(seed, n)
