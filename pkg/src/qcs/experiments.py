"""Error-decay experiment harness.

Three committed presets sweep the oversampling ratio and average
reconstruction errors over seeded trials:

* ``sparse-gaussian``       -- sparse signals, Gaussian sensing, M/K sweep,
                               methods bpdn / bpdq4 / cobp;
* ``bernoulli-vs-gaussian`` -- sparse signals at fixed M/K = 16 with the
                               sparsity K swept, cobp and cobp-lambda under
                               both Gaussian and Bernoulli sensing;
* ``lowrank``               -- rank-1 matrices, Gaussian sensing, M/P sweep,
                               cobp and bpdn with the nuclear norm.

Each preset exists at ``paper`` scale (the full-size setup) and ``desk``
scale (reduced dimensions for quick runs).  Every trial's seed is a pure
function of (master seed, preset, grid value, trial index) via SHA-256,
so records are independent of execution order and worker count; methods
share instances at a grid point, mirroring how the sweeps are reported.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .exceptions import NumericalError
from .linalg import ve
from .models import LowRankModel, SparseModel
from .sensing import (
    DISTRIBUTIONS,
    QuantizerConfig,
    delta_from_bits,
    draw_ensemble,
    rng_from_seed,
    saturation_fraction,
    sense,
)
from .solvers import SolverConfig, bpdn, bpdq, cobp, cobp_lambda, epsilon_bpdn, epsilon_bpdq4

PRESETS = ("sparse-gaussian", "bernoulli-vs-gaussian", "lowrank")
METHODS = ("cobp", "cobp-lambda", "bpdn", "bpdq4")

TRIALS_HEADER = (
    "preset,method,grid,trial,seed,error_l2,iterations,converged,saturation,wall_ms"
)
CURVES_HEADER = "method,log2_grid,log2_mean_error"

# Non-converged trials still count toward the means as long as their
# final violation stays within this many feasibility tolerances.
_INCLUDE_FEAS_FACTOR = 10.0


def derive_seed(*parts) -> int:
    """Order-independent-of-execution, platform-stable 64-bit seed."""
    text = "qcs:" + ":".join(f"{p:g}" if isinstance(p, float) else str(p) for p in parts)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def gen_sparse_signal(n_dim: int, k: int, seed: int) -> np.ndarray:
    """Unit-norm signal with exactly k nonzeros on a uniformly random support."""
    if not 1 <= k <= n_dim:
        raise ValueError(f"need 1 <= k <= n_dim, got k={k}, n_dim={n_dim}")
    rng = rng_from_seed(seed)
    support = rng.choice(n_dim, size=k, replace=False)
    values = rng.standard_normal(k)
    x = np.zeros(n_dim)
    x[support] = values
    return x / np.linalg.norm(x)


def gen_rank1(side: int, seed: int) -> np.ndarray:
    """Vectorized unit-Frobenius rank-1 PSD matrix ``v v^T / ||v||^2``."""
    if side < 1:
        raise ValueError(f"side must be >= 1, got {side}")
    rng = rng_from_seed(seed)
    v = rng.standard_normal(side)
    return ve(np.outer(v, v) / np.dot(v, v))


@dataclass(frozen=True)
class ExperimentSpec:
    """A fully pinned experiment: preset parameters, grid, seeds, methods."""

    preset: str
    scale: str
    n_dim: int = 0           # ambient dimension N (sparse presets)
    k: int = 0               # sparsity (sparse-gaussian)
    side: int = 0            # matrix side (lowrank)
    rank: int = 1
    bits: int = 3
    grid: tuple = ()
    trials: int = 20
    master_seed: int = 0
    methods: tuple = ()
    dists: tuple = ("gaussian",)
    ratio: int = 0           # fixed M/K (bernoulli-vs-gaussian)
    p_complexity: int = 0    # P, intrinsic-complexity proxy (lowrank)

    def __post_init__(self):
        if not self.grid or list(self.grid) != sorted(self.grid):
            raise ValueError("grid must be nonempty and ascending")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        for m in self.methods:
            if m not in METHODS:
                raise ValueError(f"unknown method {m!r}")
        for d in self.dists:
            if d not in DISTRIBUTIONS:
                raise ValueError(f"unknown distribution {d!r}")

    @property
    def delta(self) -> float:
        return delta_from_bits(self.bits)

    def measurements(self, grid_value) -> int:
        if self.preset == "bernoulli-vs-gaussian":
            return int(self.ratio * grid_value)  # grid sweeps K at fixed M/K
        if self.preset == "lowrank":
            return int(grid_value * self.p_complexity)
        return int(grid_value * self.k)

    def method_labels(self) -> list[str]:
        if len(self.dists) > 1:
            return [f"{m}-{d}" for m in self.methods for d in self.dists]
        return list(self.methods)


def preset_spec(preset: str, scale: str = "desk", master_seed: int = 0) -> ExperimentSpec:
    """The committed parameterization of one preset at one scale."""
    if scale not in ("paper", "desk"):
        raise ValueError(f"scale must be 'paper' or 'desk', got {scale!r}")
    paper = scale == "paper"
    if preset == "sparse-gaussian":
        return ExperimentSpec(
            preset=preset,
            scale=scale,
            n_dim=2048 if paper else 512,
            k=16 if paper else 8,
            bits=3,
            grid=(8, 16, 32, 64, 128),
            trials=20 if paper else 10,
            master_seed=master_seed,
            methods=("bpdn", "bpdq4", "cobp"),
        )
    if preset == "bernoulli-vs-gaussian":
        return ExperimentSpec(
            preset=preset,
            scale=scale,
            n_dim=1024 if paper else 256,
            bits=4,
            grid=(1, 2, 4, 8, 16, 32, 64) if paper else (1, 2, 4),
            trials=20,
            master_seed=master_seed,
            methods=("cobp", "cobp-lambda"),
            dists=("gaussian", "bernoulli"),
            ratio=16,
        )
    if preset == "lowrank":
        return ExperimentSpec(
            preset=preset,
            scale=scale,
            side=32 if paper else 16,
            rank=1,
            bits=2,
            grid=(4, 8, 16, 32),
            trials=20 if paper else 10,
            master_seed=master_seed,
            methods=("cobp", "bpdn"),
            # intrinsic complexity 2n-1 rounded up: 63 -> 64, 31 -> 32
            p_complexity=64 if paper else 32,
        )
    raise ValueError(f"unknown preset {preset!r}, expected one of {PRESETS}")


@dataclass(frozen=True)
class TrialRecord:
    preset: str
    method: str
    grid_value: float
    trial_index: int
    seed: int
    error_l2: float
    iterations: int
    converged: bool
    saturation: float
    wall_ms: float
    feas_max: float = field(default=float("nan"), compare=False)  # not persisted

    @property
    def included_in_mean(self) -> bool:
        if not math.isfinite(self.error_l2):
            return False
        if self.converged:
            return True
        tol = SolverConfig().tol_feas
        return math.isfinite(self.feas_max) and self.feas_max <= _INCLUDE_FEAS_FACTOR * tol


def _split_method(label: str, spec: ExperimentSpec) -> tuple[str, str]:
    if len(spec.dists) > 1 and "-" in label:
        base, _, dist = label.rpartition("-")
        if dist in DISTRIBUTIONS and base in METHODS:
            return base, dist
    return label, spec.dists[0]


def run_trial(
    spec: ExperimentSpec,
    method: str,
    grid_value,
    trial_index: int,
    solver_config: SolverConfig | None = None,
) -> TrialRecord:
    """Generate one seeded instance, solve it with one method, record the error.

    Solver failures are captured in the record (NaN error, converged
    False) rather than raised, so sweeps survive bad instances.
    """
    base_method, dist = _split_method(method, spec)
    seed = derive_seed(spec.master_seed, spec.preset, grid_value, trial_index)
    m = spec.measurements(grid_value)
    delta = spec.delta
    quantizer = QuantizerConfig(delta=delta, bits=spec.bits)

    if spec.preset == "lowrank":
        model = LowRankModel(side=spec.side, rank=spec.rank)
        x0 = gen_rank1(spec.side, derive_seed(seed, "signal"))
        n_dim = model.ambient_dim
    else:
        k = int(grid_value) if spec.preset == "bernoulli-vs-gaussian" else spec.k
        model = SparseModel(dim=spec.n_dim, k=k)
        x0 = gen_sparse_signal(spec.n_dim, k, derive_seed(seed, "signal"))
        n_dim = spec.n_dim

    ensemble = draw_ensemble(m, n_dim, dist, delta, derive_seed(seed, "ensemble"))
    q = sense(x0, ensemble, quantizer)

    t0 = time.perf_counter()
    try:
        if base_method == "cobp":
            result = cobp(q, ensemble, quantizer, model, solver_config)
        elif base_method == "cobp-lambda":
            lam = float(np.max(np.abs(x0)))  # oracle sup-norm cap
            result = cobp_lambda(q, ensemble, quantizer, model, lam, solver_config)
        elif base_method == "bpdn":
            eps = epsilon_bpdn(m, delta, kappa=2.0)
            result = bpdn(q, ensemble, quantizer, model, eps, solver_config)
        elif base_method == "bpdq4":
            eps4 = epsilon_bpdq4(m, delta)
            result = bpdq(q, ensemble, quantizer, model, eps4, solver_config)
        else:
            raise ValueError(f"unknown method {base_method!r}")
        error = float(np.linalg.norm(result.x_star - x0))
        iterations, converged = result.iterations, result.converged
        feas_max = result.max_violation
    except NumericalError:
        error, iterations, converged, feas_max = float("nan"), 0, False, float("inf")
    wall_ms = (time.perf_counter() - t0) * 1e3

    return TrialRecord(
        preset=spec.preset,
        method=method,
        grid_value=float(grid_value),
        trial_index=trial_index,
        seed=seed,
        error_l2=error,
        iterations=iterations,
        converged=converged,
        saturation=saturation_fraction(q),
        wall_ms=wall_ms,
        feas_max=feas_max,
    )


def _trial_task(args):
    spec, method, grid_value, trial_index = args
    return run_trial(spec, method, grid_value, trial_index)


@dataclass(frozen=True)
class SlopeFit:
    """Least-squares slope of log2(error) against log2(grid)."""

    slope: float
    intercept: float
    n_points_used: int


def fit_log_slope(points, last_k: int = 4) -> SlopeFit:
    """Fit the decay exponent over the ``last_k`` largest grid values.

    ``points`` is a sequence of (grid_value, error) pairs with positive
    entries; fewer than two usable points is an error.
    """
    pts = sorted((float(m), float(e)) for m, e in points)
    if any(m <= 0 or e <= 0 for m, e in pts):
        raise ValueError("fit_log_slope needs strictly positive grid values and errors")
    pts = pts[-last_k:]
    if len(pts) < 2:
        raise ValueError(f"need at least 2 points to fit a slope, got {len(pts)}")
    logm = np.log2([m for m, _ in pts])
    loge = np.log2([e for _, e in pts])
    slope, intercept = np.polyfit(logm, loge, 1)
    return SlopeFit(slope=float(slope), intercept=float(intercept), n_points_used=len(pts))


def summarize(spec: ExperimentSpec, records: list[TrialRecord], last_k: int = 4) -> dict:
    """Per-method mean/median error curves, slope fits and failure counts."""
    methods = {}
    for label in spec.method_labels():
        grid_vals, means, medians, included, excluded = [], [], [], [], []
        for g in spec.grid:
            errs = [
                r.error_l2
                for r in records
                if r.method == label and r.grid_value == float(g) and r.included_in_mean
            ]
            n_all = sum(
                1 for r in records if r.method == label and r.grid_value == float(g)
            )
            grid_vals.append(float(g))
            means.append(float(np.mean(errs)) if errs else float("nan"))
            medians.append(float(np.median(errs)) if errs else float("nan"))
            included.append(len(errs))
            excluded.append(n_all - len(errs))
        fit = None
        usable = [(g, e) for g, e in zip(grid_vals, means) if e > 0 and math.isfinite(e)]
        if len(usable) >= 2:
            f = fit_log_slope(usable, last_k=last_k)
            fit = {
                "slope": f.slope,
                "intercept": f.intercept,
                "last_k": last_k,
                "n_points_used": f.n_points_used,
            }
        methods[label] = {
            "grid": grid_vals,
            "mean_error": means,
            "median_error": medians,
            "n_included": included,
            "n_excluded": excluded,
            "slope_fit": fit,
        }
    n_failed = sum(1 for r in records if not math.isfinite(r.error_l2))
    return {
        "preset": spec.preset,
        "scale": spec.scale,
        "master_seed": spec.master_seed,
        "tool_version": __version__,
        "grid": [float(g) for g in spec.grid],
        "n_trials": spec.trials,
        "n_records": len(records),
        "n_failed": n_failed,
        "methods": methods,
    }


def run_experiment(
    spec: ExperimentSpec,
    out_dir=None,
    jobs: int = 1,
) -> tuple[list[TrialRecord], dict]:
    """Run the full (method x grid x trial) sweep and aggregate.

    Trials execute in a process pool when ``jobs > 1``; records are
    sorted afterwards so output never depends on scheduling.  When
    ``out_dir`` is given, writes ``trials.csv``, ``summary.json`` and
    ``curves.csv`` there.
    """
    tasks = [
        (spec, label, g, t)
        for label in spec.method_labels()
        for g in spec.grid
        for t in range(spec.trials)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_trial_task, tasks, chunksize=1))
    else:
        records = [_trial_task(t) for t in tasks]
    records.sort(key=lambda r: (r.method, r.grid_value, r.trial_index))
    summary = summarize(spec, records)
    if out_dir is not None:
        write_outputs(records, summary, out_dir)
    return records, summary


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_outputs(records: list[TrialRecord], summary: dict, out_dir) -> None:
    """Persist one run: trials.csv + summary.json + plot-ready curves.csv."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    with open(out / "trials.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRIALS_HEADER.split(","))
        for r in records:
            writer.writerow(
                [
                    r.preset,
                    r.method,
                    _fmt(r.grid_value),
                    r.trial_index,
                    r.seed,
                    _fmt(r.error_l2),
                    r.iterations,
                    "true" if r.converged else "false",
                    _fmt(r.saturation),
                    _fmt(r.wall_ms),
                ]
            )

    with open(out / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")

    with open(out / "curves.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CURVES_HEADER.split(","))
        for method, data in summary["methods"].items():
            for g, e in zip(data["grid"], data["mean_error"]):
                if e > 0 and math.isfinite(e):
                    writer.writerow([method, _fmt(math.log2(g)), _fmt(math.log2(e))])


def read_trials(path) -> list[TrialRecord]:
    """Load ``trials.csv`` back into records (persisted fields only)."""
    records = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != TRIALS_HEADER.split(","):
            raise ValueError(f"unexpected trials.csv header: {reader.fieldnames}")
        for row in reader:
            records.append(
                TrialRecord(
                    preset=row["preset"],
                    method=row["method"],
                    grid_value=float(row["grid"]),
                    trial_index=int(row["trial"]),
                    seed=int(row["seed"]),
                    error_l2=float(row["error_l2"]),
                    iterations=int(row["iterations"]),
                    converged=row["converged"] == "true",
                    saturation=float(row["saturation"]),
                    wall_ms=float(row["wall_ms"]),
                )
            )
    return records
