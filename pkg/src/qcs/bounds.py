"""Sample-complexity and error-bound calculators.

The theory leaves the absolute constants unspecified, so every
calculator takes them from :class:`BoundConstants` (all defaulting to 1)
and is meant for scaling-law inspection -- how bounds move with M,
delta, the mean width or the sup-norm cap -- rather than for certified
guarantees.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from .validation import check_nonnegative, check_positive


@dataclass(frozen=True)
class BoundConstants:
    """User-supplied constants of the bound family.

    ``c_general`` scales the generic measurement bound, ``c_sparse`` its
    sparse-set refinement, ``c_error`` the error-decay bounds.
    ``kappa_sg`` is the anisotropy constant of the sensing distribution
    (0 for Gaussian) and ``alpha`` its sub-Gaussian norm.
    """

    c_general: float = 1.0
    c_sparse: float = 1.0
    c_error: float = 1.0
    kappa_sg: float = 0.0
    alpha: float = 1.0

    def __post_init__(self):
        check_positive(self.c_general, "c_general")
        check_positive(self.c_sparse, "c_sparse")
        check_positive(self.c_error, "c_error")
        check_nonnegative(self.kappa_sg, "kappa_sg")
        check_positive(self.alpha, "alpha")


def min_measurements_general(
    w: float, delta: float, eps: float, consts: BoundConstants = BoundConstants()
) -> float:
    """Measurements sufficient for eps-proximity of consistent pairs:
    ``C (2 + delta)^4 / (delta^2 eps^4) * w^2``."""
    check_positive(w, "w")
    check_positive(delta, "delta")
    check_positive(eps, "eps")
    if eps >= 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    return consts.c_general * (2.0 + delta) ** 4 / (delta**2 * eps**4) * w**2


def min_measurements_sparse(
    k: int, n: int, delta: float, eps: float, consts: BoundConstants = BoundConstants()
) -> float:
    """Sparse-set refinement of the measurement bound:
    ``C' (2 + delta)/eps * K log( (N/(K delta)) ((2 + delta)/eps)^(3/2) )``."""
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    check_positive(delta, "delta")
    check_positive(eps, "eps")
    ratio = (2.0 + delta) / eps
    log_arg = (n / (k * delta)) * ratio**1.5
    if log_arg <= 1.0:
        warnings.warn(
            f"log argument {log_arg:g} <= 1: dimensions too small for this bound's regime",
            RuntimeWarning,
        )
    return consts.c_sparse * ratio * k * math.log(log_arg)


def error_bound_gaussian(
    m: int, delta: float, w: float, consts: BoundConstants = BoundConstants()
) -> float:
    """Gaussian-sensing error decay ``C (2 + delta)/sqrt(delta) * (w^2/M)^(1/4)``."""
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    check_positive(delta, "delta")
    check_positive(w, "w")
    return consts.c_error * (2.0 + delta) / math.sqrt(delta) * (w**2 / m) ** 0.25


def error_bound_subgaussian(
    m: int, delta: float, w: float, lam: float, consts: BoundConstants = BoundConstants()
) -> float:
    """Sub-Gaussian error decay: the Gaussian bound plus the ``kappa_sg * lam`` floor."""
    check_positive(lam, "lam")
    return error_bound_gaussian(m, delta, w, consts) + consts.kappa_sg * lam


def kappa_sg_upper(alpha: float) -> float:
    """Upper bound ``9 sqrt(27) alpha^3`` on the anisotropy constant."""
    check_positive(alpha, "alpha")
    return 9.0 * math.sqrt(27.0) * alpha**3


def prop3_error(eps: float, lam: float, k0: float) -> float:
    """Sup-norm-capped consistent reconstruction error ``eps + 2 lam sqrt(K0)``."""
    check_nonnegative(eps, "eps")
    check_nonnegative(lam, "lam")
    check_nonnegative(k0, "k0")
    return eps + 2.0 * lam * math.sqrt(k0)


def min_antisparse_level(kappa_sg: float) -> float:
    """Smallest admissible spread level ``(16 kappa_sg)^2`` for the sub-Gaussian bound."""
    check_nonnegative(kappa_sg, "kappa_sg")
    return (16.0 * kappa_sg) ** 2
