"""Command-line interface: ``ngkde simulate | estimate | theory | targets``.

Exit status is 0 on success, 2 on invalid input and 3 when a computation
fails numerically.  ``NGKDE_WORKERS`` and ``NGKDE_SEED`` supply defaults for
``--workers`` and ``--seed``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .bandwidth import LSCV_FACTORS, SEARCH_MODES, ScalarSearchSpec, lscv_grid, lscv_select
from .data import ingest_csv
from .errors import NumericalError
from .estimators import BandwidthVec, EstimatorKind, Grid2D, evaluate_grid
from .simulation import SCHEMA_VERSION, SimConfig, run_simulation
from .targets import BUILTIN_IDS, TargetSpec, builtin_target
from .theory import amise_report

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 2, 3


def _floats(text, count, what):
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"{what} must be {count} comma-separated numbers") from None
    if len(vals) != count:
        raise argparse.ArgumentTypeError(f"{what} must be {count} comma-separated numbers")
    return tuple(vals)


def _grid_arg(text):
    vals = _floats(text, 2, "--grid")
    if any(v != int(v) or v < 2 for v in vals):
        raise argparse.ArgumentTypeError("--grid must be two integers >= 2")
    return tuple(int(v) for v in vals)


def _box_arg(text):
    return _floats(text, 4, "--box")


def _pair_arg(text):
    return _floats(text, 2, "--bandwidths")


def _search_arg(text):
    try:
        return ScalarSearchSpec.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _kinds_arg(text):
    try:
        return tuple(EstimatorKind.parse(k.strip()) for k in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _env_int(name, default):
    raw = os.environ.get(name)
    if raw is None or raw == "":
        return default
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"environment variable {name} must be an integer, got {raw!r}") from None


def _emit(text, out):
    if out is None:
        sys.stdout.write(text + "\n")
    else:
        Path(out).write_text(text + "\n")


def _add_common(p, seed=True):
    p.add_argument("--workers", type=int, default=None, help="worker processes or threads (env NGKDE_WORKERS)")
    if seed:
        p.add_argument("--seed", type=int, default=None, help="master seed (env NGKDE_SEED)")
    p.add_argument("--grid", type=_grid_arg, default=None, metavar="NX,NY")
    p.add_argument("--box", type=_box_arg, default=None, metavar="A,B,C,D")
    p.add_argument("--search", type=_search_arg, default=ScalarSearchSpec(), metavar="LO,HI,POINTS,ITERS")
    p.add_argument("--search-mode", choices=SEARCH_MODES, default="tied")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ngkde", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="oracle-bandwidth Monte-Carlo study on a builtin target")
    p.add_argument("--config", type=Path, help="JSON config; explicit flags override its values")
    p.add_argument("--target", choices=BUILTIN_IDS, default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--reps", type=int, default=None)
    p.add_argument("--kinds", type=_kinds_arg, default=None, metavar="f1,f2,...")
    _add_common(p)
    p.add_argument("--out", type=Path, help="JSON report path (default: stdout)")
    p.add_argument("--table", type=Path, help="also write the text table here")
    p.add_argument("--figure", type=Path, help="also render an ISE bar chart (PNG/PDF/SVG)")
    p.add_argument("--quiet", action="store_true", help="no progress on stderr")

    p = sub.add_parser("estimate", help="density surface from a CSV sample")
    p.add_argument("input", type=Path, help="comma-separated data file")
    p.add_argument("--x1", default="0", help="column name or 0-based index of x1")
    p.add_argument("--x2", default="1", help="column name or 0-based index of the nonnegative x2")
    p.add_argument("--log10-x1", action="store_true")
    p.add_argument("--log10-x2", action="store_true")
    p.add_argument("--kind", type=EstimatorKind.parse, default=EstimatorKind.F4)
    how = p.add_mutually_exclusive_group(required=True)
    how.add_argument("--bandwidths", type=_pair_arg, metavar="BW1,BW2", help="native pair, e.g. b1,b2 for f4")
    how.add_argument("--select", choices=("lscv",))
    p.add_argument("--lscv-factor", choices=LSCV_FACTORS, default="standard")
    _add_common(p, seed=False)
    p.add_argument("--out", type=Path, required=True, help="surface file; .csv or .json")
    p.add_argument("--figure", type=Path, help="also render a contour plot")

    p = sub.add_parser("theory", help="AMISE constants for a target")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--target", choices=BUILTIN_IDS, default="f1")
    g.add_argument("--target-json", type=Path)
    p.add_argument("--kinds", type=_kinds_arg, default=(EstimatorKind.F1, EstimatorKind.F2, EstimatorKind.F3, EstimatorKind.F4))
    p.add_argument("--n", type=int, default=200, help="sample size for s0_opt and AMISE_opt")
    p.add_argument("--ng-constant", choices=("paper", "exact"), default="paper")
    p.add_argument("--grid", type=_grid_arg, default=None, metavar="NX,NY")
    p.add_argument("--out", type=Path)

    p = sub.add_parser("targets", help="list or export builtin target specifications")
    p.add_argument("--export", choices=BUILTIN_IDS)
    p.add_argument("--out", type=Path)
    return parser


def _cmd_simulate(args):
    doc = json.loads(args.config.read_text()) if args.config else {}
    if not isinstance(doc, dict):
        raise ValueError("simulation config must be a JSON object")
    overrides = {
        "target": args.target,
        "n": args.n,
        "replications": args.reps,
        "kinds": [k.value for k in args.kinds] if args.kinds else None,
        "grid": list(args.grid) if args.grid else None,
        "box": list(args.box) if args.box else None,
        "master_seed": args.seed,
        "workers": args.workers,
    }
    doc.update({k: v for k, v in overrides.items() if v is not None})
    if "search" not in doc or args.search != ScalarSearchSpec():
        s = args.search
        doc["search"] = [s.lo, s.hi, s.coarse_points, s.refine_iters]
    if "search_mode" not in doc or args.search_mode != "tied":
        doc["search_mode"] = args.search_mode
    doc.setdefault("master_seed", _env_int("NGKDE_SEED", SimConfig.master_seed))
    doc.setdefault("workers", _env_int("NGKDE_WORKERS", 1))
    cfg = SimConfig.from_dict(doc)

    def progress(k):
        if not args.quiet:
            print(f"\rreplication {k}/{cfg.replications}", end="", file=sys.stderr, flush=True)

    report = run_simulation(cfg, progress)
    if not args.quiet:
        print(file=sys.stderr)
    _emit(report.to_json(), args.out)
    table = report.table()
    if args.table:
        args.table.write_text(table)
    if args.out is not None:
        sys.stdout.write(table)
    if args.figure:
        from .plotting import plot_simulation

        plot_simulation(report, args.figure)


def _cmd_estimate(args):
    data = ingest_csv(args.input, args.x1, args.x2, args.log10_x1, args.log10_x2)
    X = data.sample
    kind = args.kind
    nodes = args.grid or (151, 151)
    meta = {"input": str(args.input), "columns": list(data.columns), "n": int(X.shape[0]), "rejected": data.n_rejected}
    if args.select == "lscv":
        grid = Grid2D.from_box(args.box, *nodes) if args.box else None
        res = lscv_select(kind, X, grid, args.search, args.lscv_factor, args.search_mode)
        bw = BandwidthVec.for_kind(kind, *res.bw.pair(kind))
        s_opt = list(res.s_opt) if isinstance(res.s_opt, tuple) else res.s_opt
        meta["selection"] = {
            "criterion": res.criterion,
            "mode": args.search_mode,
            "s_opt": s_opt,
            "score": res.score,
            "search": [args.search.lo, args.search.hi, args.search.coarse_points, args.search.refine_iters],
        }
    else:
        bw = BandwidthVec.for_kind(kind, *args.bandwidths)
    if args.box:
        out_grid = Grid2D.from_box(args.box, *nodes)
    else:
        g = lscv_grid(X, bw, kind, nodes=nodes[0])
        out_grid = Grid2D(g.x1_lo, g.x1_hi, g.x2_lo, g.x2_hi, nodes[0], nodes[1])
    meta["bandwidths"] = dict(zip(kind.bandwidth_names, bw.pair(kind)))
    workers = args.workers if args.workers is not None else _env_int("NGKDE_WORKERS", 1)
    surface = evaluate_grid(kind, X, bw, out_grid, workers=workers)
    surface.meta.update(meta)
    if args.out.suffix.lower() == ".csv":
        surface.to_csv(args.out)
        meta_doc = {k: v for k, v in surface.to_dict().items() if k != "values"}
        args.out.with_suffix(".meta.json").write_text(json.dumps(meta_doc, indent=1) + "\n")
    else:
        surface.to_json(args.out)
    if args.figure:
        from .plotting import plot_surface

        plot_surface(surface, args.figure, sample=X)
    print(json.dumps(meta["bandwidths"]))


def _cmd_theory(args):
    target = TargetSpec.from_json(args.target_json) if args.target_json else builtin_target(args.target)
    if args.n < 1:
        raise ValueError("--n must be >= 1")
    grid = Grid2D.from_box(target.box, *args.grid) if args.grid else None
    reports = [amise_report(k, target, grid, n_ref=args.n, ng_constant=args.ng_constant) for k in args.kinds]
    doc = {"schema_version": SCHEMA_VERSION, "target": target.name, "n": args.n, "reports": [r.to_dict() for r in reports]}
    _emit(json.dumps(doc, indent=1), args.out)
    if args.out is not None:
        print(f"{'kind':<6}{'s0_opt':>12}{'AMISE_opt':>14}")
        for r in reports:
            print(f"{r.kind.value:<6}{r.s0_opt(args.n):>12.5g}{r.amise_opt(args.n):>14.6g}")


def _cmd_targets(args):
    if args.export:
        _emit(builtin_target(args.export).to_json(), args.out)
        return
    lines = []
    for tid in BUILTIN_IDS:
        t = builtin_target(tid)
        m1 = " + ".join(f"{c.weight:g}*{c.family}" for c in t.margin_x1)
        m2 = " + ".join(f"{c.weight:g}*{c.family}" for c in t.margin_x2)
        lines.append(f"{tid}: [{m1}] x [{m2}]  box={list(t.box)}")
    _emit("\n".join(lines), args.out)


_COMMANDS = {"simulate": _cmd_simulate, "estimate": _cmd_estimate, "theory": _cmd_theory, "targets": _cmd_targets}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _COMMANDS[args.command](args)
    except NumericalError as exc:
        print(f"ngkde: numerical failure: {exc}", file=sys.stderr)
        if exc.trace:
            print(f"ngkde: last trace entries: {exc.trace[-5:]}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"ngkde: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
