"""Scikit-learn style estimators for quantized-measurement reconstruction.

Each estimator solves one of the reconstruction programs with the
linear-model calling convention: ``fit(X, y)`` where ``X`` is the M x N
sensing matrix and ``y`` the M observed bin centers, with the dither and
bin width passed as fit parameters.  The recovered signal lands in
``coef_``, so the classes compose with sklearn tooling (``clone``,
``get_params``, pipelines that treat reconstruction as a step).
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from . import solvers
from .models import AtomicModel, LowRankModel, SparseModel
from .sensing import QuantizedMeasurements, QuantizerConfig, SensingEnsemble
from .validation import as_matrix, as_vector, check_positive


def _resolve_model(model, n_features: int) -> AtomicModel:
    if isinstance(model, (SparseModel, LowRankModel)):
        if model.ambient_dim != n_features:
            raise ValueError(
                f"model ambient dim {model.ambient_dim} != n_features {n_features}"
            )
        return model
    if model == "sparse":
        # Only the norm kind matters to the programs, not the sparsity level.
        return SparseModel(dim=n_features, k=n_features)
    if model == "lowrank":
        side = int(round(np.sqrt(n_features)))
        if side * side != n_features:
            raise ValueError(f"lowrank model needs a square n_features, got {n_features}")
        return LowRankModel(side=side, rank=side)
    raise ValueError(f"model must be 'sparse', 'lowrank' or an AtomicModel, got {model!r}")


class _QuantizedReconstruction(BaseEstimator):
    """Shared fit machinery; subclasses declare the program to solve."""

    def __init__(
        self,
        model="sparse",
        max_iter: int = 50_000,
        tol_feas: float = 1e-5,
        tol_rel_change: float = 1e-7,
        step_safety: float = 0.99,
        check_every: int = 50,
    ):
        self.model = model
        self.max_iter = max_iter
        self.tol_feas = tol_feas
        self.tol_rel_change = tol_rel_change
        self.step_safety = step_safety
        self.check_every = check_every

    def _solver_config(self) -> solvers.SolverConfig:
        return solvers.SolverConfig(
            max_iters=self.max_iter,
            tol_feas=self.tol_feas,
            tol_rel_change=self.tol_rel_change,
            step_safety=self.step_safety,
            check_every=self.check_every,
        )

    def _solve(self, q, ensemble, quantizer, atomic, config):
        raise NotImplementedError

    def fit(self, X, y, *, dither=None, delta=None):
        """Reconstruct a signal from quantized measurements.

        Parameters
        ----------
        X : array_like, shape (n_measurements, n_features)
            Sensing matrix.
        y : array_like, shape (n_measurements,)
            Observed quantizer outputs (bin centers).
        dither : array_like, optional
            Dither realization added before quantization; zeros if omitted.
        delta : float
            Quantizer bin width.  Required.
        """
        phi = as_matrix(X, "X")
        m, n = phi.shape
        y = as_vector(y, "y", length=m)
        if delta is None:
            raise ValueError("delta (quantizer bin width) is required")
        check_positive(delta, "delta")
        dither = np.zeros(m) if dither is None else as_vector(dither, "dither", length=m)

        ensemble = SensingEnsemble(phi=phi, dist="user", dither=dither, seed=-1)
        q = QuantizedMeasurements(q=y, delta=float(delta))
        quantizer = QuantizerConfig(delta=float(delta))
        atomic = _resolve_model(self.model, n)

        result = self._solve(q, ensemble, quantizer, atomic, self._solver_config())
        self.coef_ = result.x_star
        self.n_iter_ = result.iterations
        self.converged_ = result.converged
        self.feasibility_ = result.feasibility
        self.objective_ = result.objective
        return self

    def predict(self, X):
        """Unquantized re-observation ``X @ coef_`` of the fitted signal."""
        if not hasattr(self, "coef_"):
            raise NotFittedError(f"this {type(self).__name__} instance is not fitted yet")
        return as_matrix(X, "X") @ self.coef_


class CoBP(_QuantizedReconstruction):
    """Consistent basis pursuit.

    Minimizes the model norm over unit-l2-ball signals whose noiseless
    re-observation falls bin-for-bin into the observed quantization
    cells.  Consistency makes the reconstruction error keep decaying as
    measurements accumulate, unlike the denoise-style baselines.

    Attributes
    ----------
    coef_ : ndarray, shape (n_features,)
        Reconstructed signal (vectorized matrix for ``model='lowrank'``).
    n_iter_ : int
        Primal-dual iterations run.
    converged_ : bool
        Whether feasibility and iterate-change tolerances were met.
    feasibility_ : ndarray
        Final per-constraint-block violations, in block-natural units.
    objective_ : float
        Model norm of ``coef_``.
    """

    def _solve(self, q, ensemble, quantizer, atomic, config):
        return solvers.cobp(q, ensemble, quantizer, atomic, config)


class CoBPLambda(_QuantizedReconstruction):
    """Consistent basis pursuit with a sup-norm cap ``||u||_inf <= lam``.

    Equivalent to :class:`CoBP` once ``lam >= 1``; tighter caps improve
    recovery of very sparse signals under Bernoulli-type sensing.
    """

    def __init__(
        self,
        lam: float = 1.0,
        model="sparse",
        max_iter: int = 50_000,
        tol_feas: float = 1e-5,
        tol_rel_change: float = 1e-7,
        step_safety: float = 0.99,
        check_every: int = 50,
    ):
        super().__init__(
            model=model,
            max_iter=max_iter,
            tol_feas=tol_feas,
            tol_rel_change=tol_rel_change,
            step_safety=step_safety,
            check_every=check_every,
        )
        self.lam = lam

    def _solve(self, q, ensemble, quantizer, atomic, config):
        return solvers.cobp_lambda(q, ensemble, quantizer, atomic, self.lam, config)


class BPDN(_QuantizedReconstruction):
    """Basis pursuit denoise baseline with an l2 residual ball.

    ``epsilon=None`` derives the radius from the uniform-noise model
    ``sqrt(M delta^2/12 + kappa sqrt(M))``.
    """

    def __init__(
        self,
        epsilon: float | None = None,
        kappa: float = 2.0,
        model="sparse",
        max_iter: int = 50_000,
        tol_feas: float = 1e-5,
        tol_rel_change: float = 1e-7,
        step_safety: float = 0.99,
        check_every: int = 50,
    ):
        super().__init__(
            model=model,
            max_iter=max_iter,
            tol_feas=tol_feas,
            tol_rel_change=tol_rel_change,
            step_safety=step_safety,
            check_every=check_every,
        )
        self.epsilon = epsilon
        self.kappa = kappa

    def _solve(self, q, ensemble, quantizer, atomic, config):
        eps = self.epsilon
        if eps is None:
            eps = solvers.epsilon_bpdn(q.m, quantizer.delta, self.kappa)
        return solvers.bpdn(q, ensemble, quantizer, atomic, eps, config)


class BPDQ(_QuantizedReconstruction):
    """Moment-4 basis pursuit dequantizer baseline (l4 residual ball).

    ``epsilon4=None`` derives the radius from the fourth moment of the
    uniform quantization noise plus a ``kappa4`` slack.
    """

    def __init__(
        self,
        epsilon4: float | None = None,
        kappa4: float = 1.0,
        model="sparse",
        max_iter: int = 50_000,
        tol_feas: float = 1e-5,
        tol_rel_change: float = 1e-7,
        step_safety: float = 0.99,
        check_every: int = 50,
    ):
        super().__init__(
            model=model,
            max_iter=max_iter,
            tol_feas=tol_feas,
            tol_rel_change=tol_rel_change,
            step_safety=step_safety,
            check_every=check_every,
        )
        self.epsilon4 = epsilon4
        self.kappa4 = kappa4

    def _solve(self, q, ensemble, quantizer, atomic, config):
        eps4 = self.epsilon4
        if eps4 is None:
            eps4 = solvers.epsilon_bpdq4(q.m, quantizer.delta, self.kappa4)
        return solvers.bpdq(q, ensemble, quantizer, atomic, eps4, config)
