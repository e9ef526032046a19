"""Closed-form spurious-key bounds and the approximations they are compared with.

Every function takes the key entropy ``H_K = log2(2^L - 1)`` (the zero seed is
not a key) rather than the register length, except the two approximation
helpers that are stated in terms of ``L``.

The lower bounds here can vanish at some ``n`` without the cipher being broken
there: a lower bound on the average number of spurious keys says nothing
about how large that number actually is.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class BoundInputs:
    H_K: float
    n: int
    log2_alphabet: float = 1.0
    D: float = 0.0
    I_XKY: float = 0.0
    U: float | None = None
    L: int | None = None

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("n must be non-negative")
        if not 0.0 <= self.D <= self.log2_alphabet + 1e-12:
            raise ValueError("redundancy must lie in [0, log2|X|]")
        if self.I_XKY < 0:
            raise ValueError("mutual information must be non-negative")


def key_entropy(L: int) -> float:
    return math.log2((1 << L) - 1)


def shannon_random_cipher_nk(H_K: float, n: int, D: float) -> tuple[float, float]:
    """Average spurious keys of Shannon's random-cipher ensemble.

    Returns ``((2^H_K - 1) 2^(-nD), n0)`` where ``n0 = H_K / D`` is the
    classical unicity distance (``inf`` when ``D = 0``).
    """
    value = (2.0 ** H_K - 1.0) * 2.0 ** (-n * D)
    n0 = H_K / D if D > 0 else math.inf
    return value, n0


def hbb_lower_bound(H_K: float, n: int, D: float) -> float:
    """``2^(H_K - nD) - 1`` for endomorphic nonrandom ciphers."""
    return 2.0 ** (H_K - n * D) - 1.0


def theorem2_lower_bound(inputs: BoundInputs) -> float:
    """``2^(H_K + n(log2|X| - D) - I(X^n K; Y^n)) - 1``, valid for random ciphers."""
    exponent = inputs.H_K + inputs.n * (inputs.log2_alphabet - inputs.D) - inputs.I_XKY
    return 2.0 ** exponent - 1.0


@dataclass(frozen=True)
class CiphertextOnlyBound:
    bound: float
    n_unicity: float
    # Where the bound reaches zero is only where a zero spurious-key count
    # becomes possible, not where the key is determined.
    necessary_only: bool = True


def cta_bound_and_unicity(H_K: float, n: float, U: float) -> CiphertextOnlyBound:
    """Ciphertext-only bound ``2^(H_K + n(1-U)) - 1`` and its zero ``H_K/(U-1)``.

    For ``U <= 1`` the bound never decreases and the zero is reported as
    ``inf``.
    """
    n_unicity = H_K / (U - 1.0) if U > 1.0 else math.inf
    if n_unicity != math.inf and n == n_unicity:
        bound = 0.0
    else:
        bound = 2.0 ** (H_K + n * (1.0 - U)) - 1.0
    return CiphertextOnlyBound(bound, n_unicity)


def ab_equivocation_approx(L: float, Q: float, U: float) -> float:
    """Overlay curve ``max(L - QU, 0)`` for the key-equivocation approximation.

    The approximation carries no error estimate (its "approximately equal"
    and "much less than" are undefined), so it is plotted against measured
    equivocation, never treated as ground truth.
    """
    return max(L - Q * U, 0.0)


def ab_break_condition(Q: float, U: float, L: float, H_E: float, c: float = 10.0) -> bool:
    """Evaluate ``Q(U+1) > c (L + H_E)``.

    ``c`` stands in for the undefined "much greater than"; the default of 10
    is arbitrary and has to be chosen by the caller for any real claim.
    """
    return Q * (U + 1.0) > c * (L + H_E)


@dataclass(frozen=True)
class NecessaryConditions:
    asc_zero_possible: bool
    alphaeta_zero_possible: bool


def necessary_conditions(n: int, H_Xn: float, L: float, U: float) -> NecessaryConditions:
    """Conditions without which an average of zero spurious keys is impossible.

    ASC: ``n - H(X^n) >= |K|``.  Alpha-eta: ``nU - H(X^n) >= |K|``.  Neither is
    sufficient.
    """
    if n == 0:
        return NecessaryConditions(False, False)
    return NecessaryConditions(n - H_Xn >= L, n * U - H_Xn >= L)
