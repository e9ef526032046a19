"""Fibonacci LFSR running-key generation.

Register convention: the state is an ``L``-bit integer whose most significant
bit is tap position ``L`` and least significant bit is position 1.  Each clock
emits the MSB, shifts the state left by one and inserts the XOR of the tapped
bits as the new LSB.  The first ``L`` output bits are therefore the seed
itself, MSB first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from aeta_lab import kernels

MAX_REGISTER_LENGTH = 24

# Maximal-length tap sets (trinomials/pentanomials).  Primitivity of every row is
# checked against the polynomial-order oracle in the test suite.
PRIMITIVE_TAPS: dict[int, tuple[int, ...]] = {
    2: (2, 1),
    3: (3, 2),
    4: (4, 1),
    5: (5, 3),
    6: (6, 5),
    7: (7, 6),
    8: (8, 6, 5, 4),
    9: (9, 5),
    10: (10, 7),
    11: (11, 9),
    12: (12, 6, 4, 1),
    13: (13, 4, 3, 1),
    14: (14, 5, 3, 1),
    15: (15, 14),
    16: (16, 15, 13, 4),
    17: (17, 14),
    18: (18, 11),
    19: (19, 6, 2, 1),
    20: (20, 17),
    21: (21, 19),
    22: (22, 21),
    23: (23, 18),
    24: (24, 23, 22, 17),
}


class KeystreamError(ValueError):
    """Invalid register description, seed or segment width."""


@dataclass(frozen=True)
class LfsrSpec:
    length: int
    taps: tuple[int, ...]

    def __post_init__(self):
        taps = tuple(sorted({int(t) for t in self.taps}, reverse=True))
        object.__setattr__(self, "taps", taps)
        if not 1 <= self.length <= MAX_REGISTER_LENGTH:
            raise KeystreamError(
                f"register length must be in [1, {MAX_REGISTER_LENGTH}], got {self.length}"
            )
        if not taps:
            raise KeystreamError("at least one tap is required")
        if taps[0] != self.length:
            raise KeystreamError(
                f"highest tap must equal the register length {self.length}, got {taps[0]}"
            )
        if taps[-1] < 1:
            raise KeystreamError("tap positions start at 1")

    @classmethod
    def default(cls, length: int) -> "LfsrSpec":
        if length not in PRIMITIVE_TAPS:
            raise KeystreamError(f"no shipped primitive taps for L={length}")
        return cls(length, PRIMITIVE_TAPS[length])

    @property
    def tap_mask(self) -> int:
        return sum(1 << (t - 1) for t in self.taps)

    @property
    def n_keys(self) -> int:
        """Size of the admissible key space (the all-zero seed is excluded)."""
        return (1 << self.length) - 1


@dataclass(frozen=True)
class RunningKeySeq:
    segments: tuple[int, ...]
    seg_bits: int

    def __len__(self):
        return len(self.segments)


def segment_bits(M: int) -> int:
    """Bits of running key consumed per symbol, ``log2(M/2)``."""
    if M < 4 or M & (M - 1):
        raise KeystreamError(f"M must be a power of two >= 4, got {M}")
    return M.bit_length() - 2


def _check_seed(spec: LfsrSpec, seed: int) -> None:
    if seed == 0:
        raise KeystreamError("the all-zero seed is a fixed point of the register")
    if not 0 < seed < (1 << spec.length):
        raise KeystreamError(f"seed must be in [1, 2^{spec.length}), got {seed}")


def _step(state: int, tap_mask: int, length: int, mask: int) -> tuple[int, int]:
    out = state >> (length - 1)
    fb = (state & tap_mask).bit_count() & 1
    return out, ((state << 1) | fb) & mask


def keystream_bits(spec: LfsrSpec, seed: int, count: int) -> list[int]:
    if count < 0:
        raise KeystreamError("count must be non-negative")
    _check_seed(spec, seed)
    mask = (1 << spec.length) - 1
    state, tap_mask = seed, spec.tap_mask
    bits = []
    for _ in range(count):
        out, state = _step(state, tap_mask, spec.length, mask)
        bits.append(out)
    return bits


def chunk_bits(bits, seg_bits: int) -> list[int]:
    """Non-overlapping MSB-first chunks; a trailing partial chunk is dropped."""
    out = []
    for start in range(0, len(bits) - seg_bits + 1, seg_bits):
        value = 0
        for b in bits[start:start + seg_bits]:
            value = (value << 1) | b
        out.append(value)
    return out


def running_key(spec: LfsrSpec, seed: int, M: int, n_symbols: int) -> RunningKeySeq:
    seg = segment_bits(M)
    if n_symbols < 0:
        raise KeystreamError("n_symbols must be non-negative")
    bits = keystream_bits(spec, seed, n_symbols * seg)
    return RunningKeySeq(tuple(chunk_bits(bits, seg)), seg)


@lru_cache(maxsize=None)
def period(spec: LfsrSpec, seed: int = 1) -> int:
    """Cycle length of the state sequence started at ``seed``.

    For primitive taps every nonzero seed lies on the same cycle of length
    ``2^L - 1``; otherwise the answer depends on the seed.
    """
    _check_seed(spec, seed)
    return kernels.lfsr_period(spec.length, spec.tap_mask, seed)


def is_maximal(spec: LfsrSpec) -> bool:
    return period(spec) == spec.n_keys


def cycle_lengths(spec: LfsrSpec) -> dict[int, int]:
    """Map each nonzero seed to its cycle length (exhaustive; small L only)."""
    mask = (1 << spec.length) - 1
    seen: dict[int, int] = {}
    for seed in range(1, mask + 1):
        if seed in seen:
            continue
        cycle = [seed]
        _, state = _step(seed, spec.tap_mask, spec.length, mask)
        while state != seed:
            cycle.append(state)
            _, state = _step(state, spec.tap_mask, spec.length, mask)
        for s in cycle:
            seen[s] = len(cycle)
    return seen


def dependency_distance(L: int, M: int) -> tuple[Fraction, int]:
    """Symbols of running key after which segments must be dependent.

    Returns the exact ratio ``L / log2(M/2)`` and its floor, the last symbol
    count for which the segments are still independent for an LFSR.
    """
    ratio = Fraction(L, segment_bits(M))
    return ratio, math.floor(ratio)


def all_keystreams(spec: LfsrSpec, n_bits: int) -> np.ndarray:
    """Output bits for every admissible seed, shape ``(2^L - 1, n_bits)``.

    Row ``j`` belongs to seed ``j + 1``.
    """
    L = spec.length
    seeds = np.arange(1, 1 << L, dtype=np.int64)
    if n_bits <= 0:
        return np.zeros((seeds.size, 0), dtype=np.uint8)
    maximal = is_maximal(spec)
    n_direct = min(n_bits, spec.n_keys) if maximal else n_bits
    out = np.empty((seeds.size, n_direct), dtype=np.uint8)
    mask = (1 << L) - 1
    tap_mask = spec.tap_mask
    state = seeds.copy()
    for t in range(n_direct):
        out[:, t] = state >> (L - 1)
        fb = np.bitwise_count(state & tap_mask) & 1
        state = ((state << 1) | fb) & mask
    if n_direct < n_bits:
        reps = -(-n_bits // n_direct)
        out = np.tile(out, (1, reps))[:, :n_bits]
    return out


def segment_table(spec: LfsrSpec, M: int, n_symbols: int) -> np.ndarray:
    """Running-key segments for every admissible seed, shape ``(2^L - 1, n)``."""
    seg = segment_bits(M)
    bits = all_keystreams(spec, n_symbols * seg).astype(np.int32)
    if seg == 1:
        return bits
    bits = bits.reshape(bits.shape[0], n_symbols, seg)
    weights = (1 << np.arange(seg - 1, -1, -1)).astype(np.int32)
    return bits @ weights


def to_hex(bits) -> str:
    """Debug dump of a bit sequence, MSB first, zero-padded to whole nibbles."""
    bits = list(bits)
    if not bits:
        return ""
    pad = (-len(bits)) % 4
    value = 0
    for b in bits + [0] * pad:
        value = (value << 1) | b
    return format(value, f"0{(len(bits) + pad) // 4}x")


def from_hex(text: str, n_bits: int | None = None) -> list[int]:
    text = text.strip().lower().removeprefix("0x")
    bits = [int(b) for c in text for b in format(int(c, 16), "04b")]
    return bits if n_bits is None else bits[:n_bits]
