"""Reconstruction of low-complexity signals from quantized compressive measurements.

Sparse vectors and low-rank matrices are observed through ``q = Q(phi @ x
+ dither)`` with a dithered midrise quantizer; this package provides the
sensing simulators, consistent and denoise-style reconstruction programs
(CoBP, CoBP-lambda, BPDN, BPDQ), theoretical bound calculators, and the
error-decay experiment harness, plus sklearn-style estimator wrappers.
"""

__version__ = "0.1.0"

from .bounds import (
    BoundConstants,
    error_bound_gaussian,
    error_bound_subgaussian,
    kappa_sg_upper,
    min_antisparse_level,
    min_measurements_general,
    min_measurements_sparse,
    prop3_error,
)
from .estimators import BPDN, BPDQ, CoBP, CoBPLambda
from .exceptions import NumericalError
from .models import (
    LowRankModel,
    SparseModel,
    WidthEstimate,
    atomic_norm,
    in_antisparse,
    project_box,
    project_l2_ball,
    project_lp_ball,
    prox_atomic,
    sup_correlation,
    width_estimate,
)
from .sensing import (
    QuantizedMeasurements,
    QuantizerConfig,
    SensingEnsemble,
    delta_from_bits,
    draw_ensemble,
    is_consistent,
    load_instance,
    quantize,
    saturation_fraction,
    save_instance,
    sense,
)
from .solvers import (
    ProgramSpec,
    ReconResult,
    SolverConfig,
    bpdn,
    bpdq,
    cobp,
    cobp_lambda,
    epsilon_bpdn,
    epsilon_bpdq4,
    solve_primal_dual,
)

__all__ = [
    "__version__",
    "BoundConstants",
    "BPDN",
    "BPDQ",
    "CoBP",
    "CoBPLambda",
    "LowRankModel",
    "NumericalError",
    "ProgramSpec",
    "QuantizedMeasurements",
    "QuantizerConfig",
    "ReconResult",
    "SensingEnsemble",
    "SolverConfig",
    "SparseModel",
    "WidthEstimate",
    "atomic_norm",
    "bpdn",
    "bpdq",
    "cobp",
    "cobp_lambda",
    "delta_from_bits",
    "draw_ensemble",
    "epsilon_bpdn",
    "epsilon_bpdq4",
    "error_bound_gaussian",
    "error_bound_subgaussian",
    "in_antisparse",
    "is_consistent",
    "kappa_sg_upper",
    "load_instance",
    "min_antisparse_level",
    "min_measurements_general",
    "min_measurements_sparse",
    "project_box",
    "project_l2_ball",
    "project_lp_ball",
    "prop3_error",
    "prox_atomic",
    "quantize",
    "saturation_fraction",
    "save_instance",
    "sense",
    "solve_primal_dual",
    "sup_correlation",
    "width_estimate",
]
