"""Dithered uniform quantization of random linear measurements.

The measurement pipeline is ``q = Q(phi @ x + xi)`` where ``phi`` is an
M x N random matrix with iid zero-mean unit-variance entries, ``xi`` is
a uniform dither on [-delta/2, delta/2] known at reconstruction, and
``Q`` is the midrise quantizer with bin width ``delta``.  The quantizer
maps onto bin centers delta * (Z + 1/2) and is left-closed: bin
boundaries quantize to the bin on their right.

Randomness is drawn from NumPy's Philox4x32-10 counter-based generator
keyed directly by the 64-bit seed, so an ensemble is a pure function of
``(m, n, dist, delta, seed)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .validation import as_matrix, as_vector, check_nonnegative, check_positive

DISTRIBUTIONS = ("gaussian", "bernoulli", "uniform")

# Entries of the symmetric uniform ensemble live on [-sqrt(3), sqrt(3)]
# so that their variance is exactly 1.
_SQRT3 = np.sqrt(3.0)


def rng_from_seed(seed: int) -> np.random.Generator:
    """Philox4x32-10 generator keyed by ``seed`` (counter starts at 0)."""
    return np.random.Generator(np.random.Philox(key=int(seed) & (2**128 - 1)))


@dataclass(frozen=True)
class QuantizerConfig:
    """Uniform quantizer resolution, optionally derived from a bit depth."""

    delta: float
    bits: int | None = None

    def __post_init__(self):
        check_positive(self.delta, "delta")
        if self.bits is not None:
            if not 1 <= int(self.bits) <= 4:
                raise ValueError(f"bits must be in 1..4, got {self.bits}")
            expected = delta_from_bits(int(self.bits))
            if abs(self.delta - expected) > 1e-12 * expected:
                raise ValueError(
                    f"delta={self.delta} inconsistent with bits={self.bits} "
                    f"(expected {expected})"
                )

    @classmethod
    def from_bits(cls, bits: int) -> "QuantizerConfig":
        return cls(delta=delta_from_bits(bits), bits=bits)


@dataclass(frozen=True)
class SensingEnsemble:
    """A drawn sensing matrix together with its dither realization."""

    phi: np.ndarray
    dist: str
    dither: np.ndarray
    seed: int

    @property
    def m(self) -> int:
        return self.phi.shape[0]

    @property
    def n(self) -> int:
        return self.phi.shape[1]


@dataclass(frozen=True)
class QuantizedMeasurements:
    """Observed bin centers ``q`` on the lattice delta * (Z + 1/2)."""

    q: np.ndarray
    delta: float

    def __post_init__(self):
        check_positive(self.delta, "delta")
        q = as_vector(self.q, "q")
        object.__setattr__(self, "q", q)
        offsets = q / self.delta - 0.5
        if q.size and np.max(np.abs(offsets - np.round(offsets))) > 1e-9:
            raise ValueError("q entries are not bin centers of the delta lattice")

    @property
    def m(self) -> int:
        return self.q.shape[0]


def quantize(t, delta: float):
    """Midrise uniform quantizer ``delta * (floor(t/delta) + 1/2)``.

    Accepts scalars or arrays; the error ``quantize(t) - t`` always lies
    in (-delta/2, delta/2].
    """
    check_positive(delta, "delta")
    t_arr = np.asarray(t, dtype=np.float64)
    if not np.all(np.isfinite(t_arr)):
        raise ValueError("t contains non-finite entries")
    out = delta * (np.floor(t_arr / delta) + 0.5)
    return float(out) if np.isscalar(t) or t_arr.ndim == 0 else out


def delta_from_bits(bits: int) -> float:
    """Bin width for an essentially-B-bit quantizer: ``6 * 2**(1 - B)``."""
    bits = int(bits)
    if bits < 1:
        raise ValueError(f"bits must be >= 1, got {bits}")
    return 6.0 * 2.0 ** (1 - bits)


def draw_ensemble(m: int, n: int, dist: str, delta: float, seed: int) -> SensingEnsemble:
    """Draw an iid sensing matrix and a uniform dither, fully seed-determined.

    Parameters
    ----------
    m, n : int
        Measurement and ambient dimensions.
    dist : {"gaussian", "bernoulli", "uniform"}
        Entry law: standard normal, +-1 equiprobable, or uniform on
        [-sqrt(3), sqrt(3)].  All are zero mean with unit variance.
    delta : float
        Quantizer bin width; the dither is uniform on [-delta/2, delta/2].
    seed : int
        Philox key.  The matrix is drawn first (row-major), then the dither.
    """
    if m < 1 or n < 1:
        raise ValueError(f"m and n must be >= 1, got m={m}, n={n}")
    check_positive(delta, "delta")
    if dist not in DISTRIBUTIONS:
        raise ValueError(f"unknown distribution {dist!r}, expected one of {DISTRIBUTIONS}")
    rng = rng_from_seed(seed)
    if dist == "gaussian":
        phi = rng.standard_normal((m, n))
    elif dist == "bernoulli":
        phi = 2.0 * rng.integers(0, 2, size=(m, n)).astype(np.float64) - 1.0
    else:
        phi = rng.uniform(-_SQRT3, _SQRT3, size=(m, n))
    dither = rng.uniform(-delta / 2.0, delta / 2.0, size=m)
    return SensingEnsemble(phi=phi, dist=dist, dither=dither, seed=int(seed))


def sense(x, ensemble: SensingEnsemble, cfg: QuantizerConfig) -> QuantizedMeasurements:
    """Observe ``x`` through the quantized map ``Q(phi @ x + dither)``."""
    x = as_vector(x, "x", length=ensemble.n)
    y = ensemble.phi @ x + ensemble.dither
    return QuantizedMeasurements(q=quantize(y, cfg.delta), delta=cfg.delta)


def is_consistent(
    u,
    q: QuantizedMeasurements,
    ensemble: SensingEnsemble,
    cfg: QuantizerConfig,
    tol: float = 0.0,
) -> bool:
    """Whether re-observing ``u`` lands in the same quantization cells as ``q``.

    Equivalent to ``max|phi @ u + dither - q| <= delta/2 + tol``.
    """
    check_nonnegative(tol, "tol")
    u = as_vector(u, "u", length=ensemble.n)
    residual = ensemble.phi @ u + ensemble.dither - q.q
    return bool(np.max(np.abs(residual)) <= cfg.delta / 2.0 + tol)


def saturation_fraction(q: QuantizedMeasurements) -> float:
    """Fraction of measurements outside the two central bins (+-delta/2)."""
    outside = np.abs(np.abs(q.q) - q.delta / 2.0) > 1e-9 * q.delta
    return float(np.mean(outside))


def save_instance(path, ensemble: SensingEnsemble, q: QuantizedMeasurements) -> None:
    """Serialize one measurement instance as a JSON container.

    Field order: m, n, dist, delta, seed, phi (row-major), xi, q.
    """
    doc = {
        "m": ensemble.m,
        "n": ensemble.n,
        "dist": ensemble.dist,
        "delta": q.delta,
        "seed": ensemble.seed,
        "phi": [float(v) for v in ensemble.phi.reshape(-1)],
        "xi": [float(v) for v in ensemble.dither],
        "q": [float(v) for v in q.q],
    }
    Path(path).write_text(json.dumps(doc))


def load_instance(path) -> tuple[SensingEnsemble, QuantizedMeasurements]:
    """Inverse of :func:`save_instance`."""
    doc = json.loads(Path(path).read_text())
    m, n = int(doc["m"]), int(doc["n"])
    phi = as_matrix(np.reshape(doc["phi"], (m, n)), "phi")
    ensemble = SensingEnsemble(
        phi=phi,
        dist=str(doc["dist"]),
        dither=as_vector(doc["xi"], "xi", length=m),
        seed=int(doc["seed"]),
    )
    q = QuantizedMeasurements(q=as_vector(doc["q"], "q", length=m), delta=float(doc["delta"]))
    return ensemble, q
