"""Reconstruction programs over quantized measurements.

All four programs minimize the model norm subject to convex constraint
blocks, each block being a set with an exact Euclidean projection seen
through a linear map (the sensing matrix or the identity):

* ``cobp``        -- quantization-consistency box + unit l2 ball,
* ``cobp_lambda`` -- the same plus an l-infinity ball of radius lambda,
* ``bpdn``        -- l2 residual ball of radius epsilon + unit l2 ball,
* ``bpdq``        -- l4 residual ball (moment-4 dequantizer) + unit ball.

They are solved by one product-space primal-dual splitting engine
(Chambolle-Pock with the duals stacked over the blocks).  Each iteration
costs one proximal step of the objective, one projection per block, and
a single application of the sensing matrix and of its adjoint.  Step
sizes are tied to a power-iteration estimate of the stacked operator
norm, so a run is fully deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .exceptions import NumericalError
from .models import (
    AtomicModel,
    atomic_norm,
    project_l2_ball,
    project_l4_with_multiplier,
    prox_atomic,
)
from .sensing import QuantizedMeasurements, QuantizerConfig, SensingEnsemble
from .validation import as_vector, check_nonnegative, check_positive

_DIVERGENCE_NORM = 1e6


@dataclass(frozen=True)
class ConsistencyBox:
    """``max|phi u + dither - q| <= delta/2``, i.e. re-observation lands in the observed bins."""

    q: np.ndarray
    dither: np.ndarray
    delta: float
    through_phi = True

    @property
    def center(self) -> np.ndarray:
        return self.q - self.dither

    @property
    def scale(self) -> float:
        return self.delta / 2.0

    def project(self, p: np.ndarray) -> np.ndarray:
        c = self.center
        return np.clip(p, c - self.scale, c + self.scale)

    def violation(self, z: np.ndarray) -> float:
        gap = float(np.max(np.abs(z - self.center))) - self.scale
        return max(gap, 0.0) / self.scale


@dataclass(frozen=True)
class ResidualL2Ball:
    """``||phi u - center||_2 <= eps`` with ``center = q - dither``."""

    center: np.ndarray
    eps: float
    through_phi = True

    @property
    def scale(self) -> float:
        return self.eps if self.eps > 0 else 1.0

    def project(self, p: np.ndarray) -> np.ndarray:
        if self.eps == 0.0:
            return self.center.copy()
        return self.center + project_l2_ball(p - self.center, self.eps)

    def violation(self, z: np.ndarray) -> float:
        gap = float(np.linalg.norm(z - self.center)) - self.eps
        return max(gap, 0.0) / self.scale


@dataclass(frozen=True)
class ResidualL4Ball:
    """``||phi u - center||_4 <= eps4``, the moment-4 dequantizer constraint."""

    center: np.ndarray
    eps4: float
    through_phi = True

    def __post_init__(self):
        # warm-start store for the projection multiplier; per-solve blocks
        # are never shared across concurrent solves
        object.__setattr__(self, "_mu_hint", [None])

    @property
    def scale(self) -> float:
        return self.eps4 if self.eps4 > 0 else 1.0

    def project(self, p: np.ndarray) -> np.ndarray:
        if self.eps4 == 0.0:
            return self.center.copy()
        z, mu = project_l4_with_multiplier(p - self.center, self.eps4, self._mu_hint[0])
        self._mu_hint[0] = mu if mu > 0 else None
        return self.center + z

    def violation(self, z: np.ndarray) -> float:
        gap = float(np.power(np.sum((z - self.center) ** 4), 0.25)) - self.eps4
        return max(gap, 0.0) / self.scale


@dataclass(frozen=True)
class UnitL2Ball:
    """``||u||_2 <= radius`` (radius 1 unless a test rescales the program)."""

    radius: float = 1.0
    through_phi = False

    @property
    def scale(self) -> float:
        return self.radius

    def project(self, p: np.ndarray) -> np.ndarray:
        return project_l2_ball(p, self.radius)

    def violation(self, z: np.ndarray) -> float:
        gap = float(np.linalg.norm(z)) - self.radius
        return max(gap, 0.0) / self.scale


@dataclass(frozen=True)
class InfBall:
    """``||u||_inf <= lam``."""

    lam: float
    through_phi = False

    @property
    def scale(self) -> float:
        return self.lam

    def project(self, p: np.ndarray) -> np.ndarray:
        return np.clip(p, -self.lam, self.lam)

    def violation(self, z: np.ndarray) -> float:
        gap = float(np.max(np.abs(z))) - self.lam
        return max(gap, 0.0) / self.scale


@dataclass(frozen=True)
class ProgramSpec:
    """One convex program: model-norm objective plus constraint blocks.

    ``model=None`` drops the objective (pure feasibility problem).
    """

    model: Optional[AtomicModel]
    blocks: Sequence
    ensemble: SensingEnsemble

    def __post_init__(self):
        if not self.blocks:
            raise ValueError("a program needs at least one constraint block")
        m, n = self.ensemble.phi.shape
        if self.model is not None and self.model.ambient_dim != n:
            raise ValueError(
                f"model ambient dim {self.model.ambient_dim} != sensing dim {n}"
            )
        for b in self.blocks:
            expect = m if b.through_phi else n
            for name in ("q", "dither", "center"):
                arr = getattr(b, name, None)
                if arr is not None and np.asarray(arr).shape[0] != expect:
                    raise ValueError(f"block {type(b).__name__}.{name} has wrong length")


@dataclass(frozen=True)
class SolverConfig:
    """Primal-dual loop controls.

    ``tol_feas`` is measured in each block's natural unit (half bin
    width, ball radius, ...); ``tol_rel_change`` bounds the relative
    movement of the iterate across one ``check_every`` window.
    """

    max_iters: int = 50_000
    tol_feas: float = 1e-5
    tol_rel_change: float = 1e-7
    step_safety: float = 0.99
    check_every: int = 50

    def __post_init__(self):
        if self.max_iters < 1 or self.check_every < 1:
            raise ValueError("max_iters and check_every must be >= 1")
        check_positive(self.tol_feas, "tol_feas")
        check_positive(self.tol_rel_change, "tol_rel_change")
        if not 0.0 < self.step_safety < 1.0:
            raise ValueError(f"step_safety must be in (0, 1), got {self.step_safety}")


@dataclass(frozen=True)
class ReconResult:
    """Solver output: estimate, iteration count and per-block violations."""

    x_star: np.ndarray
    iterations: int
    feasibility: np.ndarray
    objective: float
    converged: bool

    @property
    def max_violation(self) -> float:
        return float(np.max(self.feasibility)) if self.feasibility.size else 0.0


def _violations(blocks, x, phi_x) -> np.ndarray:
    return np.array(
        [b.violation(phi_x if b.through_phi else x) for b in blocks], dtype=np.float64
    )


def _stacked_norm(phi: np.ndarray, blocks) -> float:
    # The stacked constraint map K satisfies K^T K = a phi^T phi + c I
    # with a = #blocks through phi and c = #identity blocks, so its norm
    # is available exactly; power iteration at its fixed cap can fall a
    # few 1e-3 short on near-degenerate spectra, which the step-size
    # margin cannot absorb.
    n_phi = sum(1 for b in blocks if b.through_phi)
    n_id = len(blocks) - n_phi
    top = float(np.linalg.svd(phi, compute_uv=False)[0]) if n_phi else 0.0
    return float(np.sqrt(n_phi * top**2 + n_id))


def solve_primal_dual(spec: ProgramSpec, cfg: SolverConfig | None = None) -> ReconResult:
    """Run the product-space primal-dual iteration on one program.

    Returns once every block violation is below ``cfg.tol_feas`` and the
    iterate has stopped moving, or with ``converged=False`` when the
    iteration cap is hit first.  Iterate blow-up raises
    :class:`~qcs.exceptions.NumericalError`.
    """
    cfg = cfg or SolverConfig()
    phi = spec.ensemble.phi
    m, n = phi.shape
    blocks = list(spec.blocks)
    norm_k = _stacked_norm(phi, blocks)
    step = cfg.step_safety / max(norm_k, 1e-12)
    tau = sigma = step

    needs_phi = any(b.through_phi for b in blocks)
    x = np.zeros(n)
    x_bar = np.zeros(n)
    y = [np.zeros(m if b.through_phi else n) for b in blocks]
    x_at_last_check = x.copy()

    iterations = 0
    converged = False
    for it in range(1, cfg.max_iters + 1):
        iterations = it
        phi_xbar = phi @ x_bar if needs_phi else None

        grad = np.zeros(n)
        phi_dual = np.zeros(m) if needs_phi else None
        for j, b in enumerate(blocks):
            z = phi_xbar if b.through_phi else x_bar
            p = y[j] + sigma * z
            y[j] = p - sigma * b.project(p / sigma)
            if b.through_phi:
                phi_dual += y[j]
            else:
                grad += y[j]
        if needs_phi:
            grad += phi.T @ phi_dual

        x_new = x - tau * grad
        if spec.model is not None:
            x_new = prox_atomic(x_new, tau, spec.model)
        x_bar = 2.0 * x_new - x
        x = x_new

        if it % cfg.check_every == 0:
            x_norm = float(np.linalg.norm(x))
            if x_norm > _DIVERGENCE_NORM:
                raise NumericalError(f"primal-dual iterate diverged (||x|| = {x_norm:g})")
            rel_change = float(np.linalg.norm(x - x_at_last_check)) / max(x_norm, 1e-300)
            x_at_last_check = x.copy()
            if rel_change <= cfg.tol_rel_change:
                feas = _violations(blocks, x, phi @ x if needs_phi else None)
                if np.all(feas <= cfg.tol_feas):
                    converged = True
                    break

    feas = _violations(blocks, x, phi @ x if needs_phi else None)
    objective = atomic_norm(x, spec.model) if spec.model is not None else 0.0
    return ReconResult(
        x_star=x,
        iterations=iterations,
        feasibility=feas,
        objective=objective,
        converged=converged and bool(np.all(feas <= cfg.tol_feas)),
    )


def _check_program_inputs(q, ensemble, quantizer) -> None:
    if q.m != ensemble.m:
        raise ValueError(f"measurement count mismatch: q has {q.m}, ensemble has {ensemble.m}")
    if abs(q.delta - quantizer.delta) > 1e-12 * quantizer.delta:
        raise ValueError(f"delta mismatch: q.delta={q.delta}, quantizer.delta={quantizer.delta}")


def cobp(
    q: QuantizedMeasurements,
    ensemble: SensingEnsemble,
    quantizer: QuantizerConfig,
    model: AtomicModel,
    solver_config: SolverConfig | None = None,
) -> ReconResult:
    """Consistent basis pursuit: minimal model norm among unit-ball signals
    whose re-observation reproduces every observed quantization bin."""
    _check_program_inputs(q, ensemble, quantizer)
    spec = ProgramSpec(
        model=model,
        blocks=[
            ConsistencyBox(q=q.q, dither=ensemble.dither, delta=quantizer.delta),
            UnitL2Ball(),
        ],
        ensemble=ensemble,
    )
    return solve_primal_dual(spec, solver_config)


def cobp_lambda(
    q: QuantizedMeasurements,
    ensemble: SensingEnsemble,
    quantizer: QuantizerConfig,
    model: AtomicModel,
    lam: float,
    solver_config: SolverConfig | None = None,
) -> ReconResult:
    """Consistent basis pursuit with an extra sup-norm cap.

    For ``lam >= 1`` the cap is inactive (the unit l2 ball already sits
    inside it) and the program coincides with :func:`cobp`; smaller caps
    tame the error floor of non-Gaussian ensembles on very sparse
    signals.
    """
    check_positive(lam, "lam")
    _check_program_inputs(q, ensemble, quantizer)
    spec = ProgramSpec(
        model=model,
        blocks=[
            ConsistencyBox(q=q.q, dither=ensemble.dither, delta=quantizer.delta),
            UnitL2Ball(),
            InfBall(lam=lam),
        ],
        ensemble=ensemble,
    )
    return solve_primal_dual(spec, solver_config)


def bpdn(
    q: QuantizedMeasurements,
    ensemble: SensingEnsemble,
    quantizer: QuantizerConfig,
    model: AtomicModel,
    epsilon: float,
    solver_config: SolverConfig | None = None,
) -> ReconResult:
    """Basis pursuit denoise treating quantization as bounded l2 noise.

    The unit-ball constraint is kept so that results are directly
    comparable with :func:`cobp`.
    """
    check_nonnegative(epsilon, "epsilon")
    _check_program_inputs(q, ensemble, quantizer)
    spec = ProgramSpec(
        model=model,
        blocks=[
            ResidualL2Ball(center=q.q - ensemble.dither, eps=float(epsilon)),
            UnitL2Ball(),
        ],
        ensemble=ensemble,
    )
    return solve_primal_dual(spec, solver_config)


def bpdq(
    q: QuantizedMeasurements,
    ensemble: SensingEnsemble,
    quantizer: QuantizerConfig,
    model: AtomicModel,
    epsilon4: float,
    solver_config: SolverConfig | None = None,
) -> ReconResult:
    """Moment-4 basis pursuit dequantizer: l4 residual ball + unit ball."""
    check_nonnegative(epsilon4, "epsilon4")
    _check_program_inputs(q, ensemble, quantizer)
    spec = ProgramSpec(
        model=model,
        blocks=[
            ResidualL4Ball(center=q.q - ensemble.dither, eps4=float(epsilon4)),
            UnitL2Ball(),
        ],
        ensemble=ensemble,
    )
    return solve_primal_dual(spec, solver_config)


def epsilon_bpdn(m: int, delta: float, kappa: float = 2.0) -> float:
    """High-probability l2 bound on uniform quantization noise over m samples.

    ``sqrt(m * delta^2 / 12 + kappa * sqrt(m))``: the expected squared
    norm plus a slack of ``kappa`` standard-deviation-scale units.
    """
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    check_positive(delta, "delta")
    return math.sqrt(m * delta**2 / 12.0 + kappa * math.sqrt(m))


def epsilon_bpdq4(m: int, delta: float, kappa4: float = 1.0) -> float:
    """High-probability l4 bound on uniform quantization noise over m samples.

    The fourth moment of a uniform variable on [-delta/2, delta/2] is
    (delta/2)^4 / 5; the default slack ``kappa4=1`` puts the bound about
    3.75 standard deviations above the mean of the summed fourth powers,
    so coverage comfortably exceeds 95%.
    """
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    check_positive(delta, "delta")
    half = delta / 2.0
    return (m * half**4 / 5.0 + kappa4 * math.sqrt(m) * half**4) ** 0.25
