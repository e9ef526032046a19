"""Alpha-eta signal mapping, heterodyne channel and plaintext sources.

Circle coordinates are in signal-index units: ``M`` points spaced 1 apart on a
circle of circumference ``M``.  A cut at 90 degrees is therefore ``M/4``.

The basis map is the interleaved antipodal one: running-key segment ``b``
selects the pair ``{b, b + M/2}`` and the transmitted half is
``x XOR (b mod 2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erf, logsumexp, ndtr, ndtri

from aeta_lab.keystream import LfsrSpec, segment_bits, running_key

FULL_GAUSSIAN = "full_gaussian"
TRUNCATED = "truncated"
NOISE_KINDS = (FULL_GAUSSIAN, TRUNCATED)
LOG_SQRT_2PI = 0.5 * math.log(2 * math.pi)


class ChannelError(ValueError):
    pass


def sigma_from_photon_number(M: int, photon_N: float) -> float:
    """Heterodyne phase noise in signal-index units.

    Uses a phase standard deviation of ``1/(2 sqrt(N))`` radians, i.e.
    ``M / (4 pi sqrt(N))`` index units.  This is the scale at which the
    per-symbol information obeys ``U ~ 0.5 log2 N + 1.6`` for ``sigma >> 1``.
    """
    if photon_N <= 0:
        raise ChannelError("photon_N must be positive")
    return M / (4 * math.pi * math.sqrt(photon_N))


def photon_number_from_sigma(M: int, sigma: float) -> float:
    return (M / (4 * math.pi * sigma)) ** 2


@dataclass(frozen=True)
class NoiseModel:
    kind: str
    sigma: float
    M: int

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ChannelError(f"noise kind must be one of {NOISE_KINDS}, got {self.kind!r}")
        if not self.sigma > 0:
            raise ChannelError("sigma must be positive")

    @property
    def half_width(self) -> float:
        return self.M / 4

    @property
    def wraps(self) -> int:
        return math.ceil(6 * self.sigma / self.M) + 1

    @property
    def log_mass(self) -> float:
        """Log of the Gaussian mass kept by the truncated model."""
        return math.log(erf(self.half_width / (self.sigma * math.sqrt(2))))


@dataclass(frozen=True)
class SystemParams:
    lfsr: LfsrSpec
    M: int
    noise: NoiseModel
    cipher: str = "alphaeta"
    photon_N: float | None = None

    def __post_init__(self):
        segment_bits(self.M)
        if self.cipher not in ("alphaeta", "asc"):
            raise ChannelError(f"cipher must be 'alphaeta' or 'asc', got {self.cipher!r}")
        if self.noise.M != self.M:
            raise ChannelError("noise model and system disagree on M")

    @classmethod
    def build(cls, L, M, *, sigma=None, photon_N=None, noise="full_gaussian",
              taps=None, cipher="alphaeta"):
        if (sigma is None) == (photon_N is None):
            raise ChannelError("give exactly one of sigma and photon_N")
        lfsr = LfsrSpec(L, tuple(taps)) if taps is not None else LfsrSpec.default(L)
        if sigma is None:
            sigma = sigma_from_photon_number(M, photon_N)
        return cls(lfsr, M, NoiseModel(noise, float(sigma), M), cipher, photon_N)

    @classmethod
    def asc(cls, L, taps=None):
        """Additive stream cipher: one keystream bit per symbol, no channel noise."""
        lfsr = LfsrSpec(L, tuple(taps)) if taps is not None else LfsrSpec.default(L)
        return cls(lfsr, 4, NoiseModel(FULL_GAUSSIAN, 1.0, 4), "asc")

    @property
    def sigma(self) -> float:
        return self.noise.sigma

    @property
    def seg_bits(self) -> int:
        return 1 if self.cipher == "asc" else segment_bits(self.M)

    @property
    def n_bases(self) -> int:
        return 2 if self.cipher == "asc" else self.M // 2

    @property
    def n_keys(self) -> int:
        return self.lfsr.n_keys

    @property
    def key_entropy(self) -> float:
        return math.log2(self.n_keys)


def binary_entropy(p: float) -> float:
    if p <= 0 or p >= 1:
        return 0.0
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


@dataclass(frozen=True)
class PlaintextSource:
    """Plaintext bit distribution.

    ``known`` carries the exact bits Eve knows; ``bits=None`` means an
    all-zero plaintext of whatever length is requested.
    """

    kind: str
    p: float = 0.5
    bits: tuple[int, ...] | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in ("known", "uniform", "bernoulli"):
            raise ChannelError(f"unknown source kind {self.kind!r}")
        if self.kind == "bernoulli" and not 0 <= self.p <= 1:
            raise ChannelError("bernoulli p must be in [0, 1]")

    @classmethod
    def known(cls, bits=None):
        return cls("known", bits=None if bits is None else tuple(int(b) & 1 for b in bits))

    @classmethod
    def uniform(cls):
        return cls("uniform")

    @classmethod
    def bernoulli(cls, p):
        return cls("bernoulli", p=float(p))

    @property
    def prob_one(self) -> float:
        return 0.5 if self.kind == "uniform" else self.p

    @property
    def entropy_rate(self) -> float:
        if self.kind == "known":
            return 0.0
        return binary_entropy(self.prob_one)

    @property
    def redundancy(self) -> float:
        return 1.0 - self.entropy_rate

    def block_entropy(self, n: int) -> float:
        """``H(X^n)`` in bits (i.i.d. sources)."""
        return n * self.entropy_rate

    def known_bits(self, n: int) -> np.ndarray:
        if self.kind != "known":
            raise ChannelError("source is not a known plaintext")
        if self.bits is None:
            return np.zeros(n, dtype=np.int64)
        if len(self.bits) < n:
            raise ChannelError(f"known plaintext has {len(self.bits)} bits, {n} needed")
        return np.asarray(self.bits[:n], dtype=np.int64)


def redundancy(source: PlaintextSource) -> float:
    return source.redundancy


def sample_plaintext(source: PlaintextSource, n: int, rng, size=None) -> np.ndarray:
    """Draw plaintext bits; ``size`` prepends batch dimensions."""
    shape = (n,) if size is None else (*np.atleast_1d(size), n)
    if source.kind == "known":
        return np.broadcast_to(source.known_bits(n), shape).copy()
    return (rng.random(shape) < source.prob_one).astype(np.int64)


def circular_offset(y, s, M):
    """Signed offset ``y - s`` reduced to ``[-M/2, M/2)``."""
    return np.mod(np.asarray(y, dtype=float) - s + M / 2, M) - M / 2


def circular_distance(a, b, M):
    return np.abs(circular_offset(a, b, M))


def encrypt_symbol(x: int, kseg: int, M: int) -> int:
    if not 0 <= kseg < M // 2:
        raise ChannelError(f"basis index {kseg} out of range [0, {M // 2})")
    v = (x & 1) ^ (kseg & 1)
    return (kseg + (M // 2) * v) % M


def signals(x, kseg, M):
    """Vectorised :func:`encrypt_symbol`."""
    kseg = np.asarray(kseg)
    return (kseg + (M // 2) * (np.asarray(x) ^ (kseg & 1))) % M


def decrypt_symbol(y: float, kseg: int, M: int) -> int:
    s0, s1 = encrypt_symbol(0, kseg, M), encrypt_symbol(1, kseg, M)
    d0, d1 = float(circular_distance(y, s0, M)), float(circular_distance(y, s1, M))
    if d0 != d1:
        return 0 if d0 < d1 else 1
    return 0 if s0 < s1 else 1


def decrypt_seq(y, ksegs, M) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    ksegs = np.asarray(ksegs)
    s0, s1 = signals(0, ksegs, M), signals(1, ksegs, M)
    d0, d1 = circular_distance(y, s0, M), circular_distance(y, s1, M)
    tie_to_one = s1 < s0
    return np.where(d0 == d1, tie_to_one, d1 < d0).astype(np.int64)


def sample_noise(noise: NoiseModel, rng, shape) -> np.ndarray:
    if noise.kind == FULL_GAUSSIAN:
        return rng.normal(0.0, noise.sigma, size=shape)
    hw = noise.half_width
    lo = ndtr(-hw / noise.sigma)
    u = rng.random(shape)
    r = noise.sigma * ndtri(lo + u * (1.0 - 2.0 * lo))
    limit = np.nextafter(hw, 0.0)
    return np.clip(r, -limit, limit)


def heterodyne_sample(s, noise: NoiseModel, rng):
    s = np.asarray(s, dtype=float)
    y = np.mod(s + sample_noise(noise, rng, s.shape), noise.M)
    return y if y.ndim else float(y)


def log_likelihood(y, s, noise: NoiseModel):
    """Natural-log density of observing ``y`` when ``s`` was sent."""
    M, sigma = noise.M, noise.sigma
    d = circular_offset(y, s, M)
    if noise.kind == TRUNCATED:
        inside = np.abs(d) < noise.half_width
        val = -0.5 * (d / sigma) ** 2 - LOG_SQRT_2PI - math.log(sigma) - noise.log_mass
        return np.where(inside, val, -np.inf)
    j = np.arange(-noise.wraps, noise.wraps + 1) * M
    z = (d[..., None] + j) / sigma
    return logsumexp(-0.5 * z * z, axis=-1) - LOG_SQRT_2PI - math.log(sigma)


def likelihood(y, s, noise: NoiseModel):
    out = np.exp(log_likelihood(y, s, noise))
    return out if np.ndim(out) else float(out)


def asc_encrypt(keystream_bits, x_bits) -> np.ndarray:
    k = np.asarray(keystream_bits, dtype=np.int64)
    x = np.asarray(x_bits, dtype=np.int64)
    if k.shape != x.shape:
        raise ChannelError(f"keystream length {k.shape} does not match plaintext {x.shape}")
    return k ^ x


@dataclass(frozen=True)
class CiphertextSeq:
    values: np.ndarray
    M: int

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.size and (v.min() < 0 or v.max() >= self.M):
            raise ChannelError("ciphertext values must lie in [0, M)")
        object.__setattr__(self, "values", v)

    def __len__(self):
        return len(self.values)


def encrypt_seq(params: SystemParams, seed: int, x_bits, rng=None):
    """Encrypt a plaintext under ``seed``.

    For alpha-eta returns ``(signals, CiphertextSeq)``; the heterodyne draw
    needs ``rng``.  For the additive stream cipher returns
    ``(keystream, ciphertext_bits)``.
    """
    x = np.asarray(x_bits, dtype=np.int64)
    n = x.size
    if params.cipher == "asc":
        k = np.asarray(running_key(params.lfsr, seed, 4, n).segments, dtype=np.int64)
        return k, asc_encrypt(k, x)
    ksegs = np.asarray(running_key(params.lfsr, seed, params.M, n).segments, dtype=np.int64)
    s = signals(x, ksegs, params.M)
    if rng is None:
        raise ChannelError("alpha-eta encryption needs an rng for the heterodyne draw")
    y = np.mod(s + sample_noise(params.noise, rng, s.shape), params.M)
    return s, CiphertextSeq(y, params.M)
