"""Low-complexity signal models and their convex geometry.

Two model families are supported: K-sparse vectors in R^N (convexified
by the l1 norm, model-set radius sqrt(K)) and rank-r n x n matrices
(nuclear norm, radius sqrt(r)).  Matrices are handled through their
column-stacked vectorization, so every operator below acts on flat
vectors of the ambient dimension.

Besides the model norms and their proximal operators, this module ships
the exact Euclidean projections used as solver constraint blocks (l2
ball, box, l4 ball) and a Monte-Carlo estimator of the Gaussian mean
width of the unit-ball-capped model sets.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.optimize import brentq

from .exceptions import NumericalError
from .linalg import mat, ve
from .sensing import rng_from_seed
from .validation import as_vector, check_nonnegative, check_positive


@dataclass(frozen=True)
class SparseModel:
    """K-sparse vectors in R^dim; model norm l1, radius sqrt(k)."""

    dim: int
    k: int

    def __post_init__(self):
        if not 1 <= self.k <= self.dim:
            raise ValueError(f"need 1 <= k <= dim, got k={self.k}, dim={self.dim}")

    @property
    def ambient_dim(self) -> int:
        return self.dim

    @property
    def radius(self) -> float:
        return float(np.sqrt(self.k))

    norm_kind = "l1"


@dataclass(frozen=True)
class LowRankModel:
    """Rank-r side x side matrices; model norm nuclear, radius sqrt(r)."""

    side: int
    rank: int

    def __post_init__(self):
        if not 1 <= self.rank <= self.side:
            raise ValueError(f"need 1 <= rank <= side, got rank={self.rank}, side={self.side}")

    @property
    def ambient_dim(self) -> int:
        return self.side * self.side

    @property
    def radius(self) -> float:
        return float(np.sqrt(self.rank))

    norm_kind = "nuclear"


AtomicModel = Union[SparseModel, LowRankModel]


def _as_model_vector(u, model: AtomicModel) -> tuple[np.ndarray, bool]:
    # Accept either a flat ambient vector or, for matrix models, the
    # square matrix itself; report which form came in.
    arr = np.asarray(u, dtype=np.float64)
    if isinstance(model, LowRankModel) and arr.ndim == 2:
        if arr.shape != (model.side, model.side):
            raise ValueError(f"matrix argument has shape {arr.shape}, expected "
                             f"({model.side}, {model.side})")
        return ve(arr), True
    return as_vector(arr, "u", length=model.ambient_dim), False


def atomic_norm(u, model: AtomicModel) -> float:
    """Model norm of ``u``: l1 for sparse, nuclear for low rank."""
    vec, _ = _as_model_vector(u, model)
    if isinstance(model, SparseModel):
        return float(np.sum(np.abs(vec)))
    sing = np.linalg.svd(mat(vec, model.side), compute_uv=False)
    return float(np.sum(sing))


def soft_threshold(u: np.ndarray, tau: float) -> np.ndarray:
    return np.sign(u) * np.maximum(np.abs(u) - tau, 0.0)


def prox_atomic(u, tau: float, model: AtomicModel):
    """Proximal operator of ``tau * atomic_norm``.

    Componentwise soft-thresholding for the sparse model; singular-value
    soft-thresholding for the low-rank model.  Returns the same shape
    (vector or matrix) it was given.
    """
    check_nonnegative(tau, "tau")
    vec, was_matrix = _as_model_vector(u, model)
    if isinstance(model, SparseModel):
        return soft_threshold(vec, tau)
    w, s, vt = np.linalg.svd(mat(vec, model.side), full_matrices=False)
    out = (w * soft_threshold(s, tau)) @ vt
    return out if was_matrix else ve(out)


def project_l2_ball(u, radius: float = 1.0) -> np.ndarray:
    """Euclidean projection onto the centered l2 ball."""
    check_positive(radius, "radius")
    u = np.asarray(u, dtype=np.float64)
    norm = np.linalg.norm(u)
    if norm <= radius:
        return u.copy()
    return u * (radius / norm)


def project_box(u, lo, hi) -> np.ndarray:
    """Componentwise clamp onto the box [lo, hi]."""
    u = np.asarray(u, dtype=np.float64)
    lo = np.broadcast_to(np.asarray(lo, dtype=np.float64), u.shape)
    hi = np.broadcast_to(np.asarray(hi, dtype=np.float64), u.shape)
    if np.any(lo > hi):
        raise ValueError("box is empty: lo > hi in some component")
    return np.clip(u, lo, hi)


def _l4_shrink(v_abs: np.ndarray, mu: float) -> np.ndarray:
    # Unique nonnegative root z of z + 4*mu*z^3 = v, per component.
    # Newton from z=v is monotone decreasing (the cubic is convex on
    # z >= 0 and starts above its root), hence globally convergent.
    z = v_abs.copy()
    scale = max(1.0, float(np.max(v_abs, initial=0.0)))
    for _ in range(100):
        f = z + 4.0 * mu * z**3 - v_abs
        step = f / (1.0 + 12.0 * mu * z**2)
        z -= step
        if np.max(np.abs(step)) <= 1e-15 * scale:
            break
    return z


def project_l4_with_multiplier(
    v, radius: float, mu_hint: float | None = None
) -> tuple[np.ndarray, float]:
    """Projection onto the centered l4 ball, returning the KKT multiplier too.

    For points outside the ball the projection z solves the
    stationarity system z_i + 4*mu*z_i^3 = v_i with a single multiplier
    mu >= 0 chosen so that ||z||_4 = radius; the inner cubics are solved
    by safeguarded Newton and mu by Brent root-finding on the radius
    mismatch.  ``mu_hint`` (e.g. the multiplier of a nearby projection)
    tightens the initial bracket; interior points return mu = 0.
    """
    check_positive(radius, "radius")
    v = as_vector(v, "v")
    norm4 = float(np.power(np.sum(v**4), 0.25))
    if norm4 <= radius:
        return v.copy(), 0.0

    v_abs = np.abs(v)

    def radius_gap(mu: float) -> float:
        z = _l4_shrink(v_abs, mu)
        return float(np.power(np.sum(z**4), 0.25)) - radius

    lo, hi = 0.0, 1.0
    if mu_hint is not None and mu_hint > 0.0:
        if radius_gap(mu_hint / 4.0) >= 0.0:
            lo, hi = mu_hint / 4.0, mu_hint * 4.0
        else:
            hi = mu_hint / 4.0
    for _ in range(200):
        if radius_gap(hi) < 0.0:
            break
        lo, hi = hi, hi * 4.0
    else:
        raise NumericalError("l4 projection: could not bracket the multiplier")
    try:
        mu = brentq(radius_gap, lo, hi, xtol=1e-30, rtol=8.9e-16, maxiter=300)
    except RuntimeError as exc:
        raise NumericalError(f"l4 projection: root-find failed: {exc}") from exc

    z = np.sign(v) * _l4_shrink(v_abs, mu)
    kkt_residual = float(np.max(np.abs(z + 4.0 * mu * z**3 - v)))
    if kkt_residual > 1e-9 * max(np.linalg.norm(v), 1.0):
        raise NumericalError(f"l4 projection: KKT residual {kkt_residual:g} too large")
    return z, float(mu)


def project_lp_ball(v, radius: float, p: int = 4) -> np.ndarray:
    """Euclidean projection onto the centered l4 ball of given radius.

    Only the moment p=4 is supported; see
    :func:`project_l4_with_multiplier` for the mechanics.
    """
    if p != 4:
        raise ValueError(f"only p=4 is supported, got p={p}")
    z, _ = project_l4_with_multiplier(v, radius)
    return z


def sup_correlation(g, model: AtomicModel) -> float:
    """Exact value of ``sup |<g, u>|`` over the model set capped at the unit ball.

    For the sparse model this is the l2 norm of the K largest-magnitude
    entries of ``g``; for the low-rank model, the l2 norm of the r
    largest singular values of the matricized ``g``.
    """
    vec, _ = _as_model_vector(g, model)
    if isinstance(model, SparseModel):
        sq = vec**2
        if model.k >= model.dim:
            return float(np.sqrt(np.sum(sq)))
        top = np.partition(sq, model.dim - model.k)[model.dim - model.k :]
        return float(np.sqrt(np.sum(top)))
    sing = np.linalg.svd(mat(vec, model.side), compute_uv=False)
    return float(np.sqrt(np.sum(sing[: model.rank] ** 2)))


@dataclass(frozen=True)
class WidthEstimate:
    """Monte-Carlo Gaussian mean-width estimate with its standard error."""

    mean: float
    std_error: float
    n_samples: int


def width_estimate(model: AtomicModel, n_samples: int, seed: int) -> WidthEstimate:
    """Estimate the Gaussian mean width of the capped model set.

    Averages the exact supremum :func:`sup_correlation` over iid
    standard-normal probes.  The estimator is unbiased; by construction
    it is monotone in K (resp. r) realization by realization.
    """
    n_samples = int(n_samples)
    if n_samples < 2:
        raise ValueError(f"n_samples must be >= 2, got {n_samples}")
    rng = rng_from_seed(seed)
    dim = model.ambient_dim
    values = np.empty(n_samples)
    if isinstance(model, SparseModel):
        g = rng.standard_normal((n_samples, dim))
        sq = g**2
        if model.k >= model.dim:
            values = np.sqrt(np.sum(sq, axis=1))
        else:
            top = np.partition(sq, model.dim - model.k, axis=1)[:, model.dim - model.k :]
            values = np.sqrt(np.sum(top, axis=1))
    else:
        g = rng.standard_normal((n_samples, model.side, model.side))
        sing = np.linalg.svd(g, compute_uv=False)  # rows sorted nonincreasing
        values = np.sqrt(np.sum(sing[:, : model.rank] ** 2, axis=1))
    mean = float(np.mean(values))
    std_error = float(np.std(values, ddof=1) / np.sqrt(n_samples))
    return WidthEstimate(mean=mean, std_error=std_error, n_samples=n_samples)


def in_antisparse(u, k0: float) -> bool:
    """Whether ``u`` is spread enough that ``k0 * ||u||_inf^2 <= ||u||_2^2``.

    Vectors that are too sparse fail this for k0 above their support
    size; k0 = 0 accepts everything.
    """
    check_nonnegative(k0, "k0")
    u = as_vector(u, "u")
    if u.size == 0:
        return True
    return bool(k0 * np.max(np.abs(u)) ** 2 <= np.sum(u**2))
