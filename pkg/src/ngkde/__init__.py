"""Bivariate kernel density estimation on R x [0, inf) with associated kernels.

Five estimators are provided: Gaussian times first- or second-class gamma
kernels (``f1``, ``f2``), normal-gamma kernels (``f3``, ``f4``) and the
classical Gaussian product (``f5``).  See :mod:`ngkde.estimators` for the
estimators, :mod:`ngkde.bandwidth` for bandwidth selection,
:mod:`ngkde.theory` for asymptotic bias/variance/AMISE and
:mod:`ngkde.simulation` for the Monte-Carlo harness.
"""

from .bandwidth import (
    ScalarSearchSpec,
    SelectionResult,
    ise,
    lscv_score,
    lscv_select,
    oracle_select,
    split_bandwidths,
    tie_bandwidths,
)
from .data import IngestResult, ingest_csv
from .errors import NumericalError
from .estimators import (
    BandwidthVec,
    DensitySurface,
    EstimatorKind,
    Grid2D,
    evaluate,
    evaluate_grid,
    evaluate_loo,
    evaluate_points,
)
from .simulation import SimConfig, SimReport, run_simulation
from .targets import MarginComponent, TargetSpec, builtin_target, target_pdf, target_sample
from .theory import AmiseReport, Partials2, amise_report, bias_leading, partials, variance_leading

__version__ = "0.1.0"

__all__ = [
    "AmiseReport",
    "BandwidthVec",
    "DensitySurface",
    "EstimatorKind",
    "Grid2D",
    "IngestResult",
    "MarginComponent",
    "NumericalError",
    "Partials2",
    "ScalarSearchSpec",
    "SelectionResult",
    "SimConfig",
    "SimReport",
    "TargetSpec",
    "amise_report",
    "bias_leading",
    "builtin_target",
    "evaluate",
    "evaluate_grid",
    "evaluate_loo",
    "evaluate_points",
    "ingest_csv",
    "ise",
    "lscv_score",
    "lscv_select",
    "oracle_select",
    "partials",
    "run_simulation",
    "split_bandwidths",
    "target_pdf",
    "target_sample",
    "tie_bandwidths",
    "variance_leading",
]
