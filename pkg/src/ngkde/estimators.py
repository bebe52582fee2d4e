"""The five bivariate density estimators on R x [0, inf).

``F1``/``F2``
    Gaussian kernel in ``x1`` times a first/second-class gamma kernel in
    ``x2`` (bandwidths ``h`` and ``b``, the gamma kernel uses ``b**2``).
``F3``/``F4``
    Normal-gamma kernel whose parameters come from the evaluation point
    (bandwidths ``b1``, ``b2``).
``F5``
    Product of two Gaussian kernels (bandwidths ``h1``, ``h2``); the classical
    baseline that spills mass below ``x2 = 0``.

For F1 to F4 the kernel is parameterised by the evaluation point and
evaluated at the data, as for all associated-kernel estimators.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numba
import numpy as np

from . import _core

__all__ = [
    "EstimatorKind",
    "BandwidthVec",
    "Grid2D",
    "DensitySurface",
    "as_sample",
    "evaluate",
    "evaluate_points",
    "evaluate_grid",
    "evaluate_loo",
    "evaluate_loo_all",
]


class EstimatorKind(str, Enum):
    F1 = "f1"  # Gaussian x first-class gamma
    F2 = "f2"  # Gaussian x second-class gamma
    F3 = "f3"  # normal-gamma, alpha = x2/b2 + 2
    F4 = "f4"  # normal-gamma, piecewise alpha_{b2}
    F5 = "f5"  # Gaussian x Gaussian

    @classmethod
    def parse(cls, value) -> "EstimatorKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown estimator kind {value!r}; expected f1..f5") from None

    @property
    def bandwidth_names(self) -> tuple[str, str]:
        return _NATIVE[self]


_NATIVE = {
    EstimatorKind.F1: ("h", "b"),
    EstimatorKind.F2: ("h", "b"),
    EstimatorKind.F3: ("b1", "b2"),
    EstimatorKind.F4: ("b1", "b2"),
    EstimatorKind.F5: ("h1", "h2"),
}

ALL_KINDS = tuple(EstimatorKind)


@dataclass(frozen=True)
class BandwidthVec:
    """Smoothing parameters; only the entries a kind uses need to be set."""

    h: float | None = None
    b: float | None = None
    b1: float | None = None
    b2: float | None = None
    h1: float | None = None
    h2: float | None = None

    def __post_init__(self):
        for name in ("h", "b", "b1", "b2", "h1", "h2"):
            v = getattr(self, name)
            if v is not None and not (v > 0 and math.isfinite(v)):
                raise ValueError(f"bandwidth {name} must be positive and finite, got {v}")

    def pair(self, kind) -> tuple[float, float]:
        """The two bandwidths of ``kind`` in its native parameterisation."""
        kind = EstimatorKind.parse(kind)
        n1, n2 = _NATIVE[kind]
        v1, v2 = getattr(self, n1), getattr(self, n2)
        if v1 is None or v2 is None:
            raise ValueError(f"estimator {kind.value} needs bandwidths {n1} and {n2}")
        return float(v1), float(v2)

    @classmethod
    def for_kind(cls, kind, first: float, second: float) -> "BandwidthVec":
        n1, n2 = _NATIVE[EstimatorKind.parse(kind)]
        return cls(**{n1: first, n2: second})

    def to_dict(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if v is not None}


@dataclass(frozen=True)
class Grid2D:
    """Rectangular grid of cell midpoints over ``[x1_lo, x1_hi] x [x2_lo, x2_hi]``."""

    x1_lo: float
    x1_hi: float
    x2_lo: float
    x2_hi: float
    nx: int
    ny: int

    def __post_init__(self):
        if not (self.x1_lo < self.x1_hi and self.x2_lo < self.x2_hi):
            raise ValueError("grid box must have positive extent")
        if self.x2_lo < 0:
            raise ValueError("grid box must satisfy x2_lo >= 0")
        if self.nx < 1 or self.ny < 1:
            raise ValueError("grid needs at least one node per axis")

    @classmethod
    def from_box(cls, box, nx: int, ny: int | None = None) -> "Grid2D":
        a, b, c, d = (float(v) for v in box)
        return cls(a, b, c, d, int(nx), int(nx if ny is None else ny))

    @property
    def box(self) -> tuple[float, float, float, float]:
        return (self.x1_lo, self.x1_hi, self.x2_lo, self.x2_hi)

    @property
    def dx1(self) -> float:
        return (self.x1_hi - self.x1_lo) / self.nx

    @property
    def dx2(self) -> float:
        return (self.x2_hi - self.x2_lo) / self.ny

    @property
    def cell_area(self) -> float:
        return self.dx1 * self.dx2

    @property
    def x1(self) -> np.ndarray:
        return self.x1_lo + (np.arange(self.nx) + 0.5) * self.dx1

    @property
    def x2(self) -> np.ndarray:
        return self.x2_lo + (np.arange(self.ny) + 0.5) * self.dx2

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x1, self.x2, indexing="ij")

    def node(self, i: int, j: int) -> tuple[float, float]:
        return float(self.x1[i]), float(self.x2[j])

    def contains(self, other: "Grid2D", tol: float = 1e-12) -> bool:
        return (
            other.x1_lo >= self.x1_lo - tol
            and other.x1_hi <= self.x1_hi + tol
            and other.x2_lo >= self.x2_lo - tol
            and other.x2_hi <= self.x2_hi + tol
        )

    def to_dict(self) -> dict:
        return {"box": list(self.box), "nx": self.nx, "ny": self.ny, "nodes": "midpoint"}


@dataclass
class DensitySurface:
    grid: Grid2D
    values: np.ndarray
    kind: EstimatorKind
    bw: BandwidthVec
    meta: dict = field(default_factory=dict)

    def integral(self) -> float:
        return float(self.values.sum() * self.grid.cell_area)

    def to_csv(self, path) -> None:
        """Write ``x1, x2, density`` rows, x1-major."""
        x1, x2 = self.grid.x1, self.grid.x2
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x1", "x2", "density"])
            for i in range(self.grid.nx):
                for j in range(self.grid.ny):
                    w.writerow([repr(float(x1[i])), repr(float(x2[j])), repr(float(self.values[i, j]))])

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "estimator": self.kind.value,
            "bandwidths": self.bw.to_dict(),
            "grid": self.grid.to_dict(),
            "meta": self.meta,
            "values": self.values.tolist(),
        }

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=1)
        if path is not None:
            Path(path).write_text(text + "\n")
        return text


def as_sample(sample) -> np.ndarray:
    """Validate and return an ``(n, 2)`` float array with nonnegative x2."""
    arr = np.asarray(sample, dtype=float)
    if arr.ndim == 1 and arr.size == 2:
        arr = arr.reshape(1, 2)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError("sample must have shape (n, 2)")
    if arr.shape[0] == 0:
        raise ValueError("sample is empty")
    if not np.all(np.isfinite(arr)):
        raise ValueError("sample contains non-finite values")
    if np.any(arr[:, 1] < 0):
        raise ValueError("sample x2 values must be nonnegative")
    return np.ascontiguousarray(arr)


def _check_points(p1, p2):
    if np.any(p2 < 0):
        raise ValueError("evaluation points must have x2 >= 0")
    if not (np.all(np.isfinite(p1)) and np.all(np.isfinite(p2))):
        raise ValueError("evaluation points must be finite")


def _log_x2(X2):
    with np.errstate(divide="ignore"):
        return np.log(X2)


def _separable_factors(kind, X, bw, n1_nodes, n2_nodes):
    """Kernel rows for the x1 and x2 factors and the overall normaliser."""
    X1 = np.ascontiguousarray(X[:, 0])
    X2 = np.ascontiguousarray(X[:, 1])
    n = X.shape[0]
    A = np.empty((n1_nodes.shape[0], n))
    G = np.empty((n2_nodes.shape[0], n))
    if kind is EstimatorKind.F5:
        h1, h2 = bw.pair(kind)
        _core.gaussian_rows(n1_nodes, X1, h1, A)
        _core.gaussian_rows(n2_nodes, X2, h2, G)
        return A, G, h1 * h2
    h, b = bw.pair(kind)
    code = _core.SHAPE_GAMMA1 if kind is EstimatorKind.F1 else _core.SHAPE_GAMMA2
    _core.gaussian_rows(n1_nodes, X1, h, A)
    _core.gamma_rows(code, n2_nodes, X2, _log_x2(X2), b, G)
    return A, G, h


def _ng_code(kind):
    return _core.SHAPE_THETA1 if kind is EstimatorKind.F3 else _core.SHAPE_THETA2


def evaluate_points(kind, sample, bw: BandwidthVec, points, workers: int = 1) -> np.ndarray:
    """Estimator values at an ``(m, 2)`` array of points."""
    kind = EstimatorKind.parse(kind)
    X = as_sample(sample)
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    p1 = np.ascontiguousarray(pts[:, 0])
    p2 = np.ascontiguousarray(pts[:, 1])
    _check_points(p1, p2)
    n = X.shape[0]
    out = np.empty(pts.shape[0])
    if kind in (EstimatorKind.F3, EstimatorKind.F4):
        b1, b2 = bw.pair(kind)
        X1 = np.ascontiguousarray(X[:, 0])
        X2 = np.ascontiguousarray(X[:, 1])
        fn = _core.ng_points_par if workers > 1 else _core.ng_points
        with _threads(workers):
            fn(_ng_code(kind), p1, p2, X1, X2, _log_x2(X2), b1, b2, out)
        return out
    # separable kinds: one 1x1 block per point keeps the summation identical
    # to the grid path
    for p in range(pts.shape[0]):
        A, G, norm = _separable_factors(kind, X, bw, p1[p : p + 1], p2[p : p + 1])
        cell = np.empty((1, 1))
        _core.separable_sum(A, G, 1.0 / (n * norm), cell)
        out[p] = cell[0, 0]
    return out


def evaluate(kind, sample, bw: BandwidthVec, x) -> float:
    """Estimator value at a single point ``x = (x1, x2)``."""
    return float(evaluate_points(kind, sample, bw, np.asarray(x, dtype=float).reshape(1, 2))[0])


class _threads:
    """Temporarily set the numba thread count."""

    def __init__(self, workers):
        self.workers = max(1, min(int(workers), numba.config.NUMBA_NUM_THREADS))

    def __enter__(self):
        self.prev = numba.get_num_threads()
        numba.set_num_threads(self.workers)

    def __exit__(self, *exc):
        numba.set_num_threads(self.prev)


def _grid_values(kind, X, bw, grid: Grid2D, workers: int = 1) -> np.ndarray:
    x1n, x2n = grid.x1, grid.x2
    n = X.shape[0]
    out = np.empty((grid.nx, grid.ny))
    if kind in (EstimatorKind.F3, EstimatorKind.F4):
        b1, b2 = bw.pair(kind)
        m1, m2 = grid.mesh()
        p1 = np.ascontiguousarray(m1.ravel())
        p2 = np.ascontiguousarray(m2.ravel())
        X1 = np.ascontiguousarray(X[:, 0])
        X2 = np.ascontiguousarray(X[:, 1])
        flat = np.empty(p1.shape[0])
        fn = _core.ng_points_par if workers > 1 else _core.ng_points
        with _threads(workers):
            fn(_ng_code(kind), p1, p2, X1, X2, _log_x2(X2), b1, b2, flat)
        return flat.reshape(grid.nx, grid.ny)
    A, G, norm = _separable_factors(kind, X, bw, x1n, x2n)
    fn = _core.separable_sum_par if workers > 1 else _core.separable_sum
    with _threads(workers):
        fn(A, G, 1.0 / (n * norm), out)
    return out


def evaluate_grid(kind, sample, bw: BandwidthVec, grid: Grid2D, workers: int = 1) -> DensitySurface:
    """Evaluate on every grid node; identical to pointwise :func:`evaluate`."""
    kind = EstimatorKind.parse(kind)
    X = as_sample(sample)
    bw.pair(kind)
    values = _grid_values(kind, X, bw, grid, workers)
    return DensitySurface(grid=grid, values=values, kind=kind, bw=bw, meta={"n": int(X.shape[0])})


def evaluate_loo_all(kind, sample, bw: BandwidthVec) -> np.ndarray:
    """Leave-one-out values ``f_{-i}(X_i)`` for every ``i``."""
    kind = EstimatorKind.parse(kind)
    X = as_sample(sample)
    n = X.shape[0]
    if n < 2:
        raise ValueError("leave-one-out needs at least two observations")
    out = np.empty(n)
    X1 = np.ascontiguousarray(X[:, 0])
    X2 = np.ascontiguousarray(X[:, 1])
    if kind in (EstimatorKind.F3, EstimatorKind.F4):
        b1, b2 = bw.pair(kind)
        _core.ng_loo(_ng_code(kind), X1, X2, _log_x2(X2), b1, b2, out)
        return out
    A, G, norm = _separable_factors(kind, X, bw, X1, X2)
    _core.separable_loo(A, G, 1.0 / ((n - 1) * norm), out)
    return out


def evaluate_loo(kind, sample, bw: BandwidthVec, i: int) -> float:
    """Estimate at ``sample[i]`` from the sample with observation ``i`` removed."""
    X = as_sample(sample)
    n = X.shape[0]
    if n < 2:
        raise ValueError("leave-one-out needs at least two observations")
    if not -n <= i < n:
        raise IndexError(f"index {i} out of range for sample of size {n}")
    i %= n
    rest = np.delete(X, i, axis=0)
    return evaluate(kind, rest, bw, X[i])
