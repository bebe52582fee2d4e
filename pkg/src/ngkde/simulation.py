"""Seeded Monte-Carlo replication of the oracle-bandwidth simulation study.

Each replication draws a fresh sample from a builtin target, selects every
estimator's bandwidth by minimising the ISE, and records the ISE and the
estimator's native bandwidth pair.  Replication ``r`` is seeded from
``(master_seed, r)`` alone, and results are reduced in replication order, so
the report does not depend on the number of worker processes.
"""

from __future__ import annotations

import json
import multiprocessing as mp
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bandwidth import SEARCH_MODES, ScalarSearchSpec, oracle_select
from .errors import NumericalError
from .estimators import EstimatorKind, Grid2D
from .targets import BUILTIN_IDS, builtin_target

__all__ = ["SimConfig", "SimReport", "KindSummary", "run_simulation", "replication_seed", "SCHEMA_VERSION"]

SCHEMA_VERSION = 1

BW_CONVENTION = {
    "f1": ["h", "b"],
    "f2": ["h", "b"],
    "f3": ["b1", "b2"],
    "f4": ["b1", "b2"],
    "f5": ["h1", "h2"],
}


def replication_seed(master_seed: int, r: int) -> int:
    """Seed of replication ``r``; depends only on ``(master_seed, r)``."""
    return int(np.random.SeedSequence([int(master_seed), int(r)]).generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class SimConfig:
    target_id: str = "f1"
    n: int = 100
    replications: int = 1000
    kinds: tuple = tuple(EstimatorKind)
    grid_nodes: tuple = (101, 101)
    search: ScalarSearchSpec = ScalarSearchSpec()
    master_seed: int = 20240101
    workers: int = 1
    search_mode: str = "tied"
    box: tuple | None = None

    def __post_init__(self):
        if self.target_id not in BUILTIN_IDS:
            raise ValueError(f"unknown target {self.target_id!r}; expected one of {BUILTIN_IDS}")
        if self.n < 2:
            raise ValueError("n must be >= 2")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if not 0 <= int(self.master_seed) < 2**64:
            raise ValueError("master seed must be a 64-bit unsigned integer")
        if self.search_mode not in SEARCH_MODES:
            raise ValueError(f"search mode must be one of {SEARCH_MODES}")
        kinds = tuple(EstimatorKind.parse(k) for k in self.kinds)
        if not kinds or len(set(kinds)) != len(kinds):
            raise ValueError("kinds must be a nonempty set")
        object.__setattr__(self, "kinds", tuple(sorted(kinds, key=lambda k: k.value)))
        nx, ny = (int(v) for v in self.grid_nodes)
        if nx < 2 or ny < 2:
            raise ValueError("grid needs at least 2 nodes per axis")
        object.__setattr__(self, "grid_nodes", (nx, ny))
        if self.box is not None:
            box = tuple(float(v) for v in self.box)
            full = Grid2D.from_box(self.target.box, 1)
            if len(box) != 4 or not full.contains(Grid2D.from_box(box, 1)):
                raise ValueError(f"box {box} must lie within the target box {self.target.box}")
            object.__setattr__(self, "box", box)

    @property
    def target(self):
        return builtin_target(self.target_id)

    @property
    def grid(self) -> Grid2D:
        return Grid2D.from_box(self.box or self.target.box, *self.grid_nodes)

    def to_dict(self, include_workers: bool = True) -> dict:
        doc = {
            "target": self.target_id,
            "n": self.n,
            "replications": self.replications,
            "kinds": [k.value for k in self.kinds],
            "grid": list(self.grid_nodes),
            "box": list(self.box or self.target.box),
            "search": [self.search.lo, self.search.hi, self.search.coarse_points, self.search.refine_iters],
            "search_mode": self.search_mode,
            "master_seed": int(self.master_seed),
        }
        if include_workers:
            doc["workers"] = self.workers
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "SimConfig":
        doc = dict(doc)
        kw = {}
        for key, name in (("target", "target_id"), ("n", "n"), ("replications", "replications")):
            if key in doc:
                kw[name] = doc[key] if key == "target" else int(doc[key])
        if "kinds" in doc:
            kw["kinds"] = tuple(doc["kinds"])
        if "grid" in doc:
            kw["grid_nodes"] = tuple(doc["grid"])
        if "search" in doc:
            lo, hi, pts, its = doc["search"]
            kw["search"] = ScalarSearchSpec(float(lo), float(hi), int(pts), int(its))
        if "search_mode" in doc:
            kw["search_mode"] = doc["search_mode"]
        if "master_seed" in doc:
            kw["master_seed"] = int(doc["master_seed"])
        if "box" in doc:
            kw["box"] = tuple(doc["box"])
        if "workers" in doc:
            kw["workers"] = int(doc["workers"])
        unknown = set(doc) - {"target", "n", "replications", "kinds", "grid", "box", "search", "search_mode", "master_seed", "workers"}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**kw)


@dataclass
class KindSummary:
    kind: EstimatorKind
    mean_ise: float
    sd_ise: float
    mean_bw1: float
    sd_bw1: float
    mean_bw2: float
    sd_bw2: float

    def to_dict(self) -> dict:
        return {
            "estimator": self.kind.value,
            "bandwidths": BW_CONVENTION[self.kind.value],
            "mean_ise": self.mean_ise,
            "sd_ise": self.sd_ise,
            "mean_ise_x1e6": self.mean_ise * 1e6,
            "sd_ise_x1e6": self.sd_ise * 1e6,
            "mean_bw1": self.mean_bw1,
            "sd_bw1": self.sd_bw1,
            "mean_bw2": self.mean_bw2,
            "sd_bw2": self.sd_bw2,
        }


@dataclass
class SimReport:
    config: SimConfig
    summaries: dict
    records: list = field(default_factory=list)

    def mean_ise(self, kind) -> float:
        return self.summaries[EstimatorKind.parse(kind)].mean_ise

    def to_dict(self) -> dict:
        # the worker count is left out so reports compare byte for byte
        return {
            "schema_version": SCHEMA_VERSION,
            "config": self.config.to_dict(include_workers=False),
            "bw_convention": "native pair per estimator: f1,f2 (h,b); f3,f4 (b1,b2); f5 (h1,h2)",
            "summary": [self.summaries[k].to_dict() for k in self.config.kinds],
            "records": self.records,
        }

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=1)
        if path is not None:
            Path(path).write_text(text + "\n")
        return text

    def table(self) -> str:
        """Text table with the column layout of the published simulation table."""
        head = (
            f"{'Estimator':<10}{'ISE (mean)':>12}{'ISE (sd)':>10}"
            f"{'1st BW':>10}{'1st BW':>10}{'2nd BW':>10}{'2nd BW':>10}"
        )
        sub = f"{'':<10}{'x10^6':>12}{'x10^6':>10}{'(mean)':>10}{'(sd)':>10}{'(mean)':>10}{'(sd)':>10}"
        cfg = self.config
        lines = [head, sub, "-" * len(head), f"n={cfg.n}, distribution {cfg.target_id}".center(len(head))]
        for k in cfg.kinds:
            s = self.summaries[k]
            lines.append(
                f"{k.value:<10}{round(s.mean_ise * 1e6):>12,}{round(s.sd_ise * 1e6):>10,}"
                f"{s.mean_bw1:>10.3f}{s.sd_bw1:>10.3f}{s.mean_bw2:>10.3f}{s.sd_bw2:>10.3f}"
            )
        return "\n".join(lines) + "\n"


def _one_replication(args):
    cfg, r = args
    seed = replication_seed(cfg.master_seed, r)
    target = cfg.target
    grid = cfg.grid
    X = target.sample(seed, cfg.n)
    rec = {"replication": r, "seed": seed, "estimators": {}}
    for k in cfg.kinds:
        try:
            res = oracle_select(k, X, target, grid, cfg.search, cfg.search_mode)
        except NumericalError as exc:
            raise NumericalError(f"replication {r}, estimator {k.value}: {exc}", exc.trace) from exc
        bw1, bw2 = res.reported_pair
        s_opt = list(res.s_opt) if isinstance(res.s_opt, tuple) else res.s_opt
        rec["estimators"][k.value] = {"ise": res.score, "bw1": bw1, "bw2": bw2, "s_opt": s_opt}
    return rec


def _sd(values):
    return float(np.std(values, ddof=1)) if len(values) > 1 else 0.0


def _summarise(cfg, records):
    out = {}
    for k in cfg.kinds:
        rows = [rec["estimators"][k.value] for rec in records]
        ise = [row["ise"] for row in rows]
        b1 = [row["bw1"] for row in rows]
        b2 = [row["bw2"] for row in rows]
        out[k] = KindSummary(k, float(np.mean(ise)), _sd(ise), float(np.mean(b1)), _sd(b1), float(np.mean(b2)), _sd(b2))
    return out


def run_simulation(config: SimConfig, progress=None) -> SimReport:
    """Run every replication of ``config`` and aggregate in replication order.

    ``progress``, if given, is called with the number of finished
    replications.
    """
    tasks = [(config, r) for r in range(config.replications)]
    records = []
    if config.workers == 1:
        for t in tasks:
            records.append(_one_replication(t))
            if progress:
                progress(len(records))
    else:
        ctx = mp.get_context("spawn")
        with ProcessPoolExecutor(max_workers=config.workers, mp_context=ctx) as pool:
            for rec in pool.map(_one_replication, tasks, chunksize=max(1, len(tasks) // (4 * config.workers))):
                records.append(rec)
                if progress:
                    progress(len(records))
    return SimReport(config, _summarise(config, records), records)
