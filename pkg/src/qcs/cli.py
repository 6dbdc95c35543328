"""Command-line interface.

Subcommands: ``experiment`` (run a preset sweep and persist its outputs),
``solve`` (reconstruct a single serialized instance), ``bounds`` (tabulate
the theoretical calculators over parameter grids) and ``width`` (Monte-Carlo
mean-width estimation).

Exit codes: 0 success, 2 validation/usage error, 3 numerical failure.
The default output root is ``./runs`` unless ``QCS_OUTPUT_ROOT`` is set;
each experiment goes into a timestamped subdirectory unless ``--out`` is
given explicitly.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, bounds
from .exceptions import NumericalError
from .experiments import PRESETS, preset_spec, run_experiment
from .models import LowRankModel, SparseModel, width_estimate
from .sensing import QuantizerConfig, is_consistent, load_instance
from .solvers import (
    SolverConfig,
    bpdn,
    bpdq,
    cobp,
    cobp_lambda,
    epsilon_bpdn,
    epsilon_bpdq4,
)

_SOLVE_METHODS = ("cobp", "cobp-lambda", "bpdn", "bpdq4")


def _output_dir(args) -> Path:
    if args.out:
        return Path(args.out)
    root = Path(os.environ.get("QCS_OUTPUT_ROOT", "runs"))
    stamp = time.strftime("%Y%m%d-%H%M%S")
    return root / f"{args.preset}-{args.scale}-{stamp}"


def _add_solver_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--max-iters", type=int, default=None, help="solver iteration cap")
    parser.add_argument("--tol-feas", type=float, default=None,
                        help="feasibility tolerance in block-natural units")


def _solver_config(args) -> SolverConfig | None:
    overrides = {}
    if args.max_iters is not None:
        overrides["max_iters"] = args.max_iters
    if args.tol_feas is not None:
        overrides["tol_feas"] = args.tol_feas
    return SolverConfig(**overrides) if overrides else None


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v]


def _cmd_experiment(args) -> int:
    spec = preset_spec(args.preset, scale=args.scale, master_seed=args.seed)
    if args.trials is not None:
        from dataclasses import replace

        spec = replace(spec, trials=args.trials)
    out_dir = _output_dir(args)
    records, summary = run_experiment(spec, out_dir=out_dir, jobs=args.jobs)
    n_failed = summary["n_failed"]
    print(f"wrote {len(records)} trial records to {out_dir}")
    for method, data in summary["methods"].items():
        fit = data["slope_fit"]
        slope = f"{fit['slope']:+.3f}" if fit else "n/a"
        print(f"  {method:>24s}: slope {slope}, mean errors {['%.3g' % e for e in data['mean_error']]}")
    if n_failed > 0.10 * len(records):
        print(f"error: {n_failed}/{len(records)} trials failed", file=sys.stderr)
        return 3
    return 0


def _cmd_solve(args) -> int:
    ensemble, q = load_instance(args.instance)
    quantizer = QuantizerConfig(delta=q.delta)
    n = ensemble.n
    if args.model == "lowrank":
        side = int(round(math.sqrt(n)))
        if side * side != n:
            raise ValueError(f"lowrank model needs square ambient dimension, got {n}")
        model = LowRankModel(side=side, rank=side)
    else:
        model = SparseModel(dim=n, k=n)
    config = _solver_config(args)

    if args.method == "cobp":
        result = cobp(q, ensemble, quantizer, model, config)
    elif args.method == "cobp-lambda":
        if args.lam is None:
            raise ValueError("--lambda is required for method cobp-lambda")
        result = cobp_lambda(q, ensemble, quantizer, model, args.lam, config)
    elif args.method == "bpdn":
        eps = args.epsilon if args.epsilon is not None else epsilon_bpdn(q.m, q.delta)
        result = bpdn(q, ensemble, quantizer, model, eps, config)
    else:
        eps4 = args.epsilon if args.epsilon is not None else epsilon_bpdq4(q.m, q.delta)
        result = bpdq(q, ensemble, quantizer, model, eps4, config)

    doc = {
        "method": args.method,
        "objective": result.objective,
        "iterations": result.iterations,
        "converged": result.converged,
        "feasibility": [float(v) for v in result.feasibility],
        "consistent": is_consistent(result.x_star, q, ensemble, quantizer,
                                    tol=1e-5 * q.delta),
        "x_star": [float(v) for v in result.x_star],
    }
    print(json.dumps(doc, indent=2))
    return 0


def _cmd_bounds(args) -> int:
    consts = bounds.BoundConstants(
        c_general=args.C, c_sparse=args.Cp, c_error=args.Ccor,
        kappa_sg=args.kappa_sg, alpha=args.alpha,
    )
    header = ["M", "delta", "w", "error_gaussian"]
    if args.lam is not None:
        header.append("error_subgaussian")
    if args.eps is not None:
        header.append("min_M_general")
    print("\t".join(header))
    for m in args.M:
        for delta in args.delta:
            for w in args.w:
                row = [f"{m:g}", f"{delta:g}", f"{w:g}",
                       f"{bounds.error_bound_gaussian(int(m), delta, w, consts):.6g}"]
                if args.lam is not None:
                    row.append(f"{bounds.error_bound_subgaussian(int(m), delta, w, args.lam, consts):.6g}")
                if args.eps is not None:
                    row.append(f"{bounds.min_measurements_general(w, delta, args.eps, consts):.6g}")
                print("\t".join(row))
    return 0


def _cmd_width(args) -> int:
    if args.model == "sparse":
        model = SparseModel(dim=args.N, k=args.K)
    else:
        model = LowRankModel(side=args.n, rank=args.r)
    est = width_estimate(model, n_samples=args.samples, seed=args.seed)
    print(f"model={args.model} mean={est.mean:.6g} std_error={est.std_error:.3g} "
          f"mean_sq={est.mean**2:.6g} n_samples={est.n_samples}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qcs",
        description="Quantized compressive sensing: consistent reconstruction, "
                    "baselines, bounds and experiments.",
    )
    parser.add_argument("--version", action="version", version=f"qcs {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_exp = sub.add_parser("experiment", help="run a preset error-decay sweep")
    p_exp.add_argument("--preset", choices=PRESETS, required=True)
    p_exp.add_argument("--scale", choices=("paper", "desk"), default="desk",
                       help="paper = full-size setup (hours); desk = reduced (default)")
    p_exp.add_argument("--seed", type=int, default=0, help="master seed")
    p_exp.add_argument("--out", type=str, default=None, help="output directory")
    p_exp.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                       help="parallel trial workers")
    p_exp.add_argument("--trials", type=int, default=None,
                       help="override the preset's trial count")
    p_exp.set_defaults(func=_cmd_experiment)

    p_solve = sub.add_parser("solve", help="reconstruct one serialized instance")
    p_solve.add_argument("--instance", type=str, required=True, help="instance JSON file")
    p_solve.add_argument("--method", choices=_SOLVE_METHODS, required=True)
    p_solve.add_argument("--lambda", dest="lam", type=float, default=None,
                         help="sup-norm cap for cobp-lambda")
    p_solve.add_argument("--epsilon", type=float, default=None,
                         help="residual-ball radius override for bpdn/bpdq4")
    p_solve.add_argument("--model", choices=("sparse", "lowrank"), default="sparse")
    _add_solver_flags(p_solve)
    p_solve.set_defaults(func=_cmd_solve)

    p_bounds = sub.add_parser("bounds", help="tabulate bound calculators on a grid")
    p_bounds.add_argument("--M", type=_floats, required=True,
                          help="comma-separated measurement counts")
    p_bounds.add_argument("--delta", type=_floats, required=True,
                          help="comma-separated bin widths")
    p_bounds.add_argument("--w", type=_floats, required=True,
                          help="comma-separated mean widths")
    p_bounds.add_argument("--eps", type=float, default=None,
                          help="also tabulate the minimal-measurements bound at this eps")
    p_bounds.add_argument("--lambda", dest="lam", type=float, default=None,
                          help="also tabulate the sub-Gaussian bound at this sup-norm cap")
    p_bounds.add_argument("--kappa-sg", dest="kappa_sg", type=float, default=0.0)
    p_bounds.add_argument("--alpha", type=float, default=1.0)
    p_bounds.add_argument("--C", type=float, default=1.0)
    p_bounds.add_argument("--Cp", type=float, default=1.0)
    p_bounds.add_argument("--Ccor", type=float, default=1.0)
    p_bounds.set_defaults(func=_cmd_bounds)

    p_width = sub.add_parser("width", help="Monte-Carlo Gaussian mean-width estimate")
    p_width.add_argument("--model", choices=("sparse", "lowrank"), required=True)
    p_width.add_argument("--N", type=int, default=1024, help="ambient dimension (sparse)")
    p_width.add_argument("--K", type=int, default=16, help="sparsity (sparse)")
    p_width.add_argument("--n", type=int, default=32, help="matrix side (lowrank)")
    p_width.add_argument("--r", type=int, default=1, help="rank (lowrank)")
    p_width.add_argument("--samples", type=int, default=10_000)
    p_width.add_argument("--seed", type=int, default=0)
    p_width.set_defaults(func=_cmd_width)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
