"""Command-line front end: fitting, certification, evaluation grids, simulations.

Outputs are CSV/JSON only; plotting is downstream.  Exit codes: 0 success,
1 certificate or convergence failure, 2 input/usage error.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from .censdata import DatasetError, parse_rectangle_csv
from .geometry import finite_sentinel, incidence, mass_candidates, maximal_intersections
from .npmle import (
    dump_masses_csv,
    fenchel_check_ic2,
    fit,
    load_masses_csv,
)
from .kernels import KernelSpec
from .plugin import build_plugin_grid, solve_masses
from .simstudy import Scenario, run_study
from .smle import SmleEstimate, default_bandwidth, smle_grid

OK, FAILED, USAGE = 0, 1, 2

# guard against accidentally launching the paper-scale study without opting in
LONG_RUN_BUDGET = 1_000_000


def _read_dataset(path, kind="case-2"):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return parse_rectangle_csv(fh, kind=kind)
    except OSError as exc:
        raise SystemExit(_fail(USAGE, f"cannot read {path}: {exc.strerror or exc}"))
    except DatasetError as exc:
        raise SystemExit(_fail(USAGE, f"{path}: {exc}"))


def _fail(code, message):
    print(f"error: {message}", file=sys.stderr)
    return code


def _write(path, text):
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def cmd_fit_mle(args) -> int:
    data = _read_dataset(args.input, kind=args.kind)
    if len(data) == 0:
        return _fail(USAGE, f"{args.input}: dataset is empty")
    rects = maximal_intersections(data)
    cands = mass_candidates(data, rects)
    dist, report = fit(incidence(data, cands), data.freqs())
    _write(args.out, dump_masses_csv(dist))
    if args.report:
        _write(args.report, report.to_json() + "\n")
    print(f"{len(rects)} canonical rectangles, support {report.support_size}, "
          f"loglik {report.loglik:.9f}, max_fenchel {report.max_fenchel:.12f}, "
          f"{'converged' if report.converged else 'NOT converged'}")
    return OK if report.converged else FAILED


def cmd_eval(args) -> int:
    if args.grid < 2:
        return _fail(USAGE, f"--grid must be at least 2, got {args.grid}")
    if args.estimator == "smle":
        try:
            with open(args.masses, "r", encoding="utf-8") as fh:
                dist = load_masses_csv(fh)
        except OSError as exc:
            return _fail(USAGE, f"cannot read {args.masses}: {exc.strerror or exc}")
        except ValueError as exc:
            return _fail(USAGE, f"{args.masses}: {exc}")
        if args.h == "auto":
            if args.n is None:
                return _fail(USAGE, "--h auto requires --n (sample size)")
            h = default_bandwidth(args.n)
        else:
            h = float(args.h)
        # map the data range onto the unit square; h is on the unit scale
        span = max(float(dist.points.max()), 1.0)
        unit = SmleEstimate(
            type(dist)(dist.points / span, dist.masses),
            KernelSpec(bandwidth=h),
        )
        ts = np.linspace(0.0, 1.0, args.grid)
        vals = smle_grid(unit, ts, ts)
        lines = ["t,u,value"]
        for i, t in enumerate(ts * span):
            for j, u in enumerate(ts * span):
                lines.append(f"{float(t)!r},{float(u)!r},{float(vals[i, j])!r}")
        _write(args.out, "\n".join(lines) + "\n")
        return OK

    data = _read_dataset(args.input, kind="current-status")
    from .npmle import fit as _  # noqa: F401  (import kept close to use)
    from .censdata import CURRENT_STATUS
    if data.kind != CURRENT_STATUS:
        return _fail(USAGE, "plugin evaluation expects current-status data")
    t, u, d1, d2 = _cs_arrays_from_dataset(data)
    n = args.n if args.n is not None else data.n
    h = default_bandwidth(n) if args.h == "auto" else float(args.h)
    grid = build_plugin_grid((t, u, d1, d2), n, h=h, on_empty="expand")
    masses = solve_masses(grid)
    lines = ["x,y,value,mass"]
    for i, x in enumerate(grid.xs):
        for j, y in enumerate(grid.ys):
            lines.append(f"{float(x)!r},{float(y)!r},"
                         f"{float(grid.values[i, j])!r},{float(masses[i, j])!r}")
    _write(args.out, "\n".join(lines) + "\n")
    if grid.expanded:
        print(f"note: {len(grid.expanded)} empty cell(s) refilled with doubled bandwidth")
    return OK


def _cs_arrays_from_dataset(data):
    import math as _m

    t = np.empty(len(data))
    u = np.empty(len(data))
    d1 = np.empty(len(data), dtype=bool)
    d2 = np.empty(len(data), dtype=bool)
    rows = []
    for i, r in enumerate(data.rectangles):
        d1[i] = _m.isinf(r.l1)
        d2[i] = _m.isinf(r.l2)
        t[i] = r.r1 if d1[i] else r.l1
        u[i] = r.r2 if d2[i] else r.l2
        rows += [i] * r.freq
    rows = np.array(rows)
    return t[rows], u[rows], d1[rows], d2[rows]


def cmd_check(args) -> int:
    data = _read_dataset(args.input, kind=args.kind)
    try:
        with open(args.masses, "r", encoding="utf-8") as fh:
            dist = load_masses_csv(fh)
    except OSError as exc:
        return _fail(USAGE, f"cannot read {args.masses}: {exc.strerror or exc}")
    except ValueError as exc:
        return _fail(USAGE, f"{args.masses}: {exc}")
    support = dist.points[dist.support(1e-12)]
    at_support = fenchel_check_ic2(data, dist, support)
    hi = finite_sentinel(data)
    probes = np.linspace(0.0, hi, args.grid)
    gx, gy = np.meshgrid(probes, probes)
    grid_pts = np.column_stack([gx.ravel(), gy.ravel()])
    on_grid = fenchel_check_ic2(data, dist, grid_pts)
    worst_eq = float(np.max(np.abs(at_support - 1.0)))
    worst_ineq = float(on_grid.max())
    ok = worst_eq <= args.tol and worst_ineq <= 1.0 + args.tol
    print(f"support points: {support.shape[0]}, max |lhs - 1| at support: {worst_eq:.3e}")
    print(f"probe grid {args.grid}x{args.grid}: max lhs = {worst_ineq:.12f}")
    if not ok:
        k = int(np.argmax(on_grid))
        print(f"worst violation at ({grid_pts[k, 0]:g}, {grid_pts[k, 1]:g}): "
              f"lhs = {worst_ineq:.12f} > 1 + {args.tol:g}")
    print("certificate PASSED" if ok else "certificate FAILED")
    return OK if ok else FAILED


def cmd_simulate(args) -> int:
    if args.reps < 2:
        return _fail(USAGE, f"--reps must be at least 2, got {args.reps}")
    if args.reps < 10:
        print(f"warning: reps={args.reps} gives unreliable Monte Carlo standard errors",
              file=sys.stderr)
    if args.n * args.reps > LONG_RUN_BUDGET and not args.long_run:
        return _fail(USAGE,
                     f"n*reps = {args.n * args.reps} exceeds the desk-scale budget "
                     f"({LONG_RUN_BUDGET}); pass --long-run to proceed")
    eval_points = DEFAULTS_EVAL if args.eval_points is None else _parse_points(args.eval_points)
    sc = Scenario(truth=args.truth, n=args.n, reps=args.reps, seed=args.seed,
                  eval_points=eval_points, smle_h=args.smle_h, plugin_h=args.plugin_h,
                  threads=args.threads)
    result = run_study(sc)
    _write(args.out, result.to_csv())
    if result.failures:
        print(f"warning: {len(result.failures)} replication(s) failed and were excluded:",
              file=sys.stderr)
        for rep, msg in result.failures:
            print(f"  rep {rep}: {msg}", file=sys.stderr)
    if result.expanded_cells:
        print(f"note: {result.expanded_cells} empty plug-in cell(s) used a doubled bandwidth")
    return OK


DEFAULTS_EVAL = ((0.2, 0.6), (0.4, 0.6), (0.6, 0.6), (0.8, 0.6))


def _parse_points(text):
    pts = []
    for chunk in text.split(";"):
        t, u = chunk.split(",")
        pts.append((float(t), float(u)))
    return tuple(pts)


def _positive_float(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"{text} is not positive")
    return v


def _positive_int(text):
    v = int(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"{text} is not positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="bicens",
        description="Nonparametric estimators for bivariate current-status "
                    "and interval-censored data.",
    )
    ap.add_argument("--version", action="version", version=f"bicens {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit-mle", help="fit the NPMLE on canonical rectangle corners")
    p.add_argument("--input", required=True, help="rectangle CSV (L1,R1,L2,R2,freq)")
    p.add_argument("--out", required=True, help="masses CSV output path ('-' for stdout)")
    p.add_argument("--report", help="optional FitReport JSON output path")
    p.add_argument("--kind", choices=["case-2", "current-status"], default="case-2")
    p.set_defaults(func=cmd_fit_mle)

    p = sub.add_parser("eval", help="evaluate an estimator on a grid")
    p.add_argument("--estimator", choices=["smle", "plugin"], required=True)
    p.add_argument("--masses", help="masses CSV from fit-mle (smle)")
    p.add_argument("--input", help="current-status rectangle CSV (plugin)")
    p.add_argument("--h", default="auto", help="bandwidth, or 'auto' for n^(-1/6)")
    p.add_argument("--n", type=_positive_int, help="sample size backing 'auto' bandwidth")
    p.add_argument("--grid", type=int, default=41, help="grid resolution per axis")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("check", help="verify the Fenchel duality certificate")
    p.add_argument("--input", required=True, help="rectangle CSV of the data")
    p.add_argument("--masses", required=True, help="masses CSV of the fit to certify")
    p.add_argument("--kind", choices=["case-2", "current-status"], default="case-2")
    p.add_argument("--grid", type=_positive_int, default=50)
    p.add_argument("--tol", type=_positive_float, default=1e-6)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("simulate", help="run the Monte Carlo estimator comparison")
    p.add_argument("--truth", choices=["f0a", "f0b", "linear-sum", "uniform"],
                   default="f0a", help="hidden-pair distribution")
    p.add_argument("--n", type=_positive_int, default=1000)
    p.add_argument("--reps", type=_positive_int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--eval-points", help="semicolon-separated t,u pairs, e.g. '0.4,0.6;0.6,0.6'")
    p.add_argument("--smle-h", type=_positive_float, help="fixed SMLE bandwidth")
    p.add_argument("--plugin-h", type=_positive_float, help="fixed plug-in bandwidth")
    p.add_argument("--threads", type=_positive_int, help="parallel replications (default: BICENS_THREADS or 1)")
    p.add_argument("--long-run", action="store_true", help="allow paper-scale n*reps")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "eval":
        if args.estimator == "smle" and not args.masses:
            return _fail(USAGE, "eval --estimator smle requires --masses")
        if args.estimator == "plugin" and not args.input:
            return _fail(USAGE, "eval --estimator plugin requires --input")
    try:
        return args.func(args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else USAGE
    except DatasetError as exc:
        return _fail(USAGE, str(exc))


if __name__ == "__main__":
    sys.exit(main())
