"""Harmonic relational key memory.

A population of N "band cells" holds a unit-magnitude complex phasor each.
Every cell j has an oriented frequency ``gamma_j`` in R^d, so a key vector
``x`` in C^N encodes a point in space: translating the point by ``delta``
multiplies the key elementwise by ``exp(2*pi*i * Gamma @ delta)``, which makes
key construction a homomorphism from (R^d, +) into phasor multiplication.

Associations are stored by one-shot Hebbian binding (scaled complex outer
products). When the stored key is modulated by a gain vector ``g(gamma)``
computed for a spatial scale ``sigma``, the retrieved value decays as an
isometric Gaussian ``exp(-||delta/sigma||^2)`` of the query displacement, up
to crosstalk that shrinks as N grows. The gain that produces this response
under a ``1/r`` frequency-magnitude density is

    g(gamma) = exp(d*ln r - pi^2 * ||sigma*gamma||^2
                   - d/2 * (ln(d / (2 pi^2 sigma_min^2)) - 1)),  r = ||gamma||

normalized so its maximum over r is exactly 1 (attained at
r = sqrt(d) / (sqrt(2) pi sigma_min)). The band of magnitudes with gain above
a floor ``eps`` is bracketed by the two real branches of the Lambert W
function, which is how a basis is sized to a range of scales.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .lambertw import lambert_w0, lambert_w_minus1

TWO_PI = 2.0 * np.pi

DEFAULT_SIZE = 16384
DEFAULT_EPS_GAIN = 0.001

# |key element| may drift away from 1 after chained shifts; renormalize
# whenever it exceeds this.
_UNIT_DRIFT_TOL = 1e-9


@dataclass(frozen=True)
class HarkBasis:
    """Sampled oriented-frequency matrix plus the band it covers."""

    dim_d: int
    size_n: int
    gamma: np.ndarray  # (N, d) oriented frequencies, cycles per unit
    gamma_min: float
    gamma_max: float
    rng_seed: int


@dataclass(frozen=True)
class GainProfile:
    """Per-cell storage gains for one spatial scale vector."""

    sigma: np.ndarray  # (d,)
    gains: np.ndarray  # (N,) in [0, 1]


class BindMemory:
    """Accumulator of bind terms: an M x N complex association matrix."""

    def __init__(self, value_dim: int, key_dim: int, dim_d: int = 0, seed: int = 0):
        self.value_dim = value_dim
        self.key_dim = key_dim
        self.dim_d = dim_d
        self.seed = seed
        self.matrix = np.zeros((value_dim, key_dim), dtype=np.complex128)

    @classmethod
    def for_basis(cls, basis: HarkBasis, value_dim: int) -> "BindMemory":
        return cls(value_dim, basis.size_n, basis.dim_d, basis.rng_seed)

    def save(self, path: str) -> None:
        """Binary dump: int64 header {d, N, M, seed}, then row-major complex values."""
        with open(path, "wb") as fh:
            fh.write(struct.pack("<4q", self.dim_d, self.key_dim, self.value_dim, self.seed))
            fh.write(np.ascontiguousarray(self.matrix, dtype=np.complex128).tobytes())

    @classmethod
    def load(cls, path: str) -> "BindMemory":
        with open(path, "rb") as fh:
            d, n, m, seed = struct.unpack("<4q", fh.read(32))
            mem = cls(m, n, d, seed)
            data = np.frombuffer(fh.read(), dtype=np.complex128)
        mem.matrix = data.reshape(m, n).copy()
        return mem


def gamma_band(d: int, sigma: float, eps_gain: float) -> tuple[float, float]:
    """Magnitude band [gamma_min, gamma_max] where gain at scale sigma exceeds eps."""
    if not 0.0 < eps_gain < 1.0:
        raise ValueError(f"eps_gain must lie in (0, 1), got {eps_gain}")
    if sigma <= 0.0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    arg = -(eps_gain ** (2.0 / d)) / np.e
    scale = d / (2.0 * np.pi**2 * sigma**2)
    lo = float(np.sqrt(-scale * lambert_w0(arg)))
    hi = float(np.sqrt(-scale * lambert_w_minus1(arg)))
    return lo, hi


def sample_basis(
    d: int,
    n: int,
    sigma_smallest: float,
    sigma_largest: float,
    eps_gain: float = DEFAULT_EPS_GAIN,
    seed: int = 0,
) -> HarkBasis:
    """Sample N oriented frequencies covering scales in [sigma_smallest, sigma_largest].

    Magnitudes are log-uniform (the 1/r density), directions uniform on the
    sphere. The band ends come from the Lambert-W brackets of the gain curve:
    the largest scale fixes gamma_min, the smallest scale fixes gamma_max.
    """
    if d < 1 or n < 1:
        raise ValueError("d and n must be >= 1")
    if not 0.0 < sigma_smallest <= sigma_largest:
        raise ValueError(
            f"need 0 < sigma_smallest <= sigma_largest, got {sigma_smallest}, {sigma_largest}"
        )
    gamma_min, _ = gamma_band(d, sigma_largest, eps_gain)
    _, gamma_max = gamma_band(d, sigma_smallest, eps_gain)
    rng = np.random.default_rng(seed)
    mags = np.exp(rng.uniform(np.log(gamma_min), np.log(gamma_max), size=n))
    dirs = rng.normal(size=(n, d))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    return HarkBasis(d, n, mags[:, None] * dirs, gamma_min, gamma_max, seed)


def origin_key(basis: HarkBasis) -> np.ndarray:
    return np.ones(basis.size_n, dtype=np.complex128)


def shift_key(basis: HarkBasis, key: np.ndarray, delta: np.ndarray) -> np.ndarray:
    """Key for the point displaced by delta: x * exp(2*pi*i * Gamma @ delta)."""
    delta = np.asarray(delta, dtype=np.float64)
    if delta.shape != (basis.dim_d,):
        raise ValueError(f"delta must have shape ({basis.dim_d},), got {delta.shape}")
    if not np.all(np.isfinite(delta)):
        raise ValueError("delta must be finite")
    out = key * np.exp(1j * TWO_PI * (basis.gamma @ delta))
    mags = np.abs(out)
    if np.max(np.abs(mags - 1.0)) > _UNIT_DRIFT_TOL:
        out = out / mags
    return out


def key_at(basis: HarkBasis, point: np.ndarray) -> np.ndarray:
    """Key assigned to an absolute point (shift of the all-ones origin key)."""
    return shift_key(basis, origin_key(basis), point)


def bind(key: np.ndarray, value: np.ndarray) -> np.ndarray:
    """One-shot Hebbian association: value (x) conj(key) / ||key||^2.

    Querying the result with the key returns the value exactly; querying with
    any other vector scales the value by (||q|| / ||key||) * cossim(key, q).
    """
    key = np.asarray(key, dtype=np.complex128)
    value = np.atleast_1d(np.asarray(value, dtype=np.complex128))
    nrm2 = np.vdot(key, key).real
    if nrm2 == 0.0:
        raise ValueError("cannot bind with a zero key")
    return np.outer(value, np.conj(key)) / nrm2


def gain_vector(basis: HarkBasis, sigma) -> GainProfile:
    """Storage gains for a per-axis scale vector (scalar sigma = isometric)."""
    sigma = np.asarray(sigma, dtype=np.float64)
    if sigma.ndim == 0:
        sigma = np.full(basis.dim_d, float(sigma))
    if sigma.shape != (basis.dim_d,):
        raise ValueError(f"sigma must be scalar or shape ({basis.dim_d},)")
    if np.any(sigma <= 0.0):
        raise ValueError("sigma components must be positive")
    return GainProfile(sigma, gain_at(basis.gamma, sigma, basis.dim_d))


def gain_at(gamma: np.ndarray, sigma: np.ndarray, d: int) -> np.ndarray:
    """Evaluate the normalized gain curve at rows of gamma."""
    r = np.linalg.norm(gamma, axis=-1)
    sig_min = float(np.min(sigma))
    offset = 0.5 * d * (np.log(d / (2.0 * np.pi**2 * sig_min**2)) - 1.0)
    with np.errstate(divide="ignore"):
        expo = d * np.log(r) - np.pi**2 * np.sum((sigma * gamma) ** 2, axis=-1) - offset
    return np.where(r > 0.0, np.exp(expo), 0.0)


def active_fraction_approx(gamma_min: float, gamma_max: float, d: int) -> float:
    """Closed-form estimate of the fraction of cells with gain above 0.001."""
    return 5.257 / np.log(gamma_max / gamma_min) * np.sqrt(d + 1.83) / d


def store(
    mem: BindMemory,
    basis: HarkBasis,
    anchor_key: np.ndarray,
    delta: np.ndarray,
    value: np.ndarray,
    sigma,
) -> None:
    """Add one association at anchor+delta, gain-modulated for scale sigma.

    The stored key is alpha * (g * shifted_key) with alpha = sum(g)/sum(g^2),
    which normalizes the zero-displacement response to exactly the value.
    """
    value = np.atleast_1d(np.asarray(value, dtype=np.complex128))
    if value.shape != (mem.value_dim,):
        raise ValueError(f"value must have shape ({mem.value_dim},), got {value.shape}")
    profile = gain_vector(basis, sigma)
    g = profile.gains
    alpha = g.sum() / np.sum(g * g)
    mem.matrix += bind(alpha * (g * shift_key(basis, anchor_key, delta)), value)


def query(
    mem: BindMemory,
    basis: HarkBasis,
    anchor_key: np.ndarray,
    delta: np.ndarray,
) -> np.ndarray:
    """Readout at anchor+delta with a plain (unmodulated) key.

    For gain-modulated stores this returns sum_k c_sigma(delta - delta_k) *
    value_k plus crosstalk; queries are a single matrix-vector product.
    """
    return mem.matrix @ shift_key(basis, anchor_key, delta)


def query_modulated(
    mem: BindMemory,
    basis: HarkBasis,
    anchor_key: np.ndarray,
    delta: np.ndarray,
    sigma,
) -> np.ndarray:
    """Readout with gain modulation applied on the query side instead.

    Use against memories accumulated with plain ``bind``; yields the same
    Gaussian response curve as modulation on storage.
    """
    profile = gain_vector(basis, sigma)
    g = profile.gains
    beta = mem.key_dim / g.sum()
    return mem.matrix @ (beta * (g * shift_key(basis, anchor_key, delta)))
