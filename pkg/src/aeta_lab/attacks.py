"""Key-recovery attacks: MAP decoding, empirical unicity distance, majority vote."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from aeta_lab import kernels
from aeta_lab.channel import FULL_GAUSSIAN, PlaintextSource, SystemParams, signals
from aeta_lab.inference import (
    CapError,
    _deterministic_plaintext,
    _offset_survival,
    _reduce,
    _trial_cost,
    channel_tables,
    key_table,
    sample_trials,
    simulate,
)
from aeta_lab.montecarlo import Estimate, concat, run_blocks

NOT_REACHED = "not reached"
MAX_VOTE_SYMBOLS = 1 << 20


@dataclass(frozen=True)
class AttackResult:
    success_prob: Estimate
    correct: np.ndarray
    n: int
    joint_success: Estimate | None = None
    periods: int | None = None


def map_attack_success(params: SystemParams, source: PlaintextSource, n: int, trials: int,
                       seed: int = 0, workers=None) -> AttackResult:
    """Fraction of trials in which the MAP seed equals the true seed."""
    sim = simulate(params, source, n, trials, seed, workers)
    correct = sim["map_key"] == sim["true_key"]
    return AttackResult(Estimate.from_samples(correct), correct, n)


def spurious_possible(params: SystemParams, source: PlaintextSource, n: int) -> bool:
    """Whether some ciphertext of length ``n`` leaves more than one key possible.

    Decided structurally, so it is exact even where the probabilities involved
    underflow.
    """
    K = params.n_keys
    if K < 2:
        return False
    x = _deterministic_plaintext(source, n)
    if n == 0 or x is None:
        return True
    KS = key_table(params, n)
    if params.cipher == "asc":
        return np.unique(KS, axis=0).shape[0] < K
    if params.noise.kind == FULL_GAUSSIAN:
        return True
    M = params.M
    S = signals(x[None, :], KS, M)
    allowed = _offset_survival(params) > 0
    for k in range(K):
        d = np.mod(S - S[k] + M // 2, M)
        ok = allowed[d].all(axis=1)
        ok[k] = False
        if ok.any():
            return True
    return False


def unicity_distance(params: SystemParams, source: PlaintextSource, p: float, n_max: int,
                     trials: int, seed: int = 0, workers=None):
    """Smallest ``n <= n_max`` at which the MAP attack succeeds with probability ``p``.

    For ``p < 1`` success means ``rate - 2 se >= p`` over ``trials`` draws,
    located by doubling then bisection.  For ``p = 1`` the key must be
    determined for every ciphertext, which is checked exactly: no spurious key
    may have positive probability.  Returns :data:`NOT_REACHED` otherwise.
    """
    if not 0.0 < p <= 1.0:
        raise ValueError(f"target probability must be in (0, 1], got {p}")
    if n_max < 1:
        raise ValueError("n_max must be >= 1")

    if p == 1.0:
        def reached(n):
            return not spurious_possible(params, source, n)
    else:
        def reached(n):
            est = map_attack_success(params, source, n, trials, seed, workers).success_prob
            return est.value - 2.0 * est.std_error >= p

    lo, hi = 0, None
    n = 1
    while n <= n_max:
        if reached(n):
            hi = n
            break
        lo = n
        n *= 2
    if hi is None:
        if lo == n_max or not reached(n_max):
            return NOT_REACHED
        hi = n_max
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if reached(mid):
            hi = mid
        else:
            lo = mid
    return hi


def symbols_per_period(params: SystemParams) -> int:
    return math.ceil(params.n_keys / params.seg_bits)


def majority_vote_attack(params: SystemParams, periods: int, trials: int, seed: int = 0,
                         workers=None) -> AttackResult:
    """Ciphertext-only attack over repeated keystream periods.

    Each period is MAP-decoded on its own symbols and the final guess is the
    plurality of the per-period guesses (ties to the smallest seed).  The
    joint MAP over all periods is reported alongside as ``joint_success``.
    """
    if periods < 1:
        raise ValueError("periods must be >= 1")
    source = PlaintextSource.uniform()
    P = symbols_per_period(params)
    n = periods * P
    if n > MAX_VOTE_SYMBOLS:
        raise CapError(
            f"{periods} periods of {P} symbols exceed the budget of {MAX_VOTE_SYMBOLS} symbols"
        )
    KS = key_table(params, n)
    K = KS.shape[0]

    def block(rng, count):
        keys, _, _, y = sample_trials(params, source, n, count, rng)
        W, bad, _ = channel_tables(params, source, y)
        votes = np.zeros((count, K), dtype=np.int64)
        joint = np.zeros((count, K))
        joint_viol = np.zeros((count, K), dtype=np.int64)
        rows = np.arange(count)
        for t in range(periods):
            sl = slice(t * P, (t + 1) * P)
            logL, viol = kernels.key_loglik(
                W[:, sl], None if bad is None else bad[:, sl], KS[:, sl]
            )
            guess = _reduce(logL, viol)["map_key"]
            votes[rows, guess] += 1
            joint += logL
            joint_viol += viol
        vote_guess = np.argmax(votes, axis=1)
        joint_guess = _reduce(joint, joint_viol)["map_key"]
        return {"vote": vote_guess == keys, "joint": joint_guess == keys}

    results = run_blocks(block, trials, _trial_cost(params, n), seed, workers)
    vote = concat(results, "vote")
    joint = concat(results, "joint")
    return AttackResult(
        Estimate.from_samples(vote), vote, n, Estimate.from_samples(joint), periods
    )
