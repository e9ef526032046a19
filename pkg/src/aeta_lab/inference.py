"""Exact key posteriors and Monte-Carlo information estimators.

The key space is every nonzero LFSR seed; key index ``j`` is seed ``j + 1``
and the prior is uniform.  For a ciphertext ``y`` the posterior is

    Pr[k | y]  ∝  prod_i  sum_x Pr[x_i = x] p(y_i | s(x, k'_i))

which factorises per symbol because the plaintext is i.i.d. (or fixed).  Each
symbol therefore contributes one log weight per basis, and a key's log
likelihood is the sum of the weights picked out by its running key.  That sum
over (trials x keys x symbols) is the hot loop in :mod:`aeta_lab.kernels`.

All entropies and informations are in bits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import logsumexp, ndtr, xlogy

from aeta_lab import kernels
from aeta_lab.channel import (
    FULL_GAUSSIAN,
    ChannelError,
    PlaintextSource,
    SystemParams,
    log_likelihood,
    sample_noise,
    sample_plaintext,
    signals,
)
from aeta_lab.infoquad import mixture_entropy, noise_entropy, uniform_output_entropy
from aeta_lab.keystream import LfsrSpec, segment_table
from aeta_lab.montecarlo import Estimate, concat, run_blocks

LN2 = math.log(2.0)
MAX_POSTERIOR_L = 24
MAX_SEQINFO_L = 16
MAX_SEQINFO_BITS = 24
MAX_JOINT_BITS = 32


class CapError(ValueError):
    """An exact enumeration would exceed the configured size cap."""


class EmptySupportError(ValueError):
    """No key is consistent with the observation."""


@dataclass(frozen=True)
class KeyPosterior:
    probs: np.ndarray
    log_probs: np.ndarray
    support: np.ndarray
    context: str

    @property
    def n_keys(self) -> int:
        return self.probs.size

    @property
    def empty(self) -> bool:
        return not self.support.any()

    @property
    def seeds(self) -> np.ndarray:
        return np.arange(1, self.n_keys + 1)

    def map_seed(self) -> int:
        return int(np.argmax(self.log_probs)) + 1

    def entropy(self) -> float:
        return float(-xlogy(self.probs, self.probs).sum() / LN2)


# ---------------------------------------------------------------------------
# tables


@lru_cache(maxsize=16)
def _key_table_cached(lfsr: LfsrSpec, M: int, n: int) -> np.ndarray:
    table = segment_table(lfsr, M, n)
    table.setflags(write=False)
    return table


def key_table(params: SystemParams, n: int) -> np.ndarray:
    """Basis index per (key, symbol), shape ``(2^L - 1, n)``."""
    if params.lfsr.length > MAX_POSTERIOR_L:
        raise CapError(f"L={params.lfsr.length} exceeds the posterior cap {MAX_POSTERIOR_L}")
    return _key_table_cached(params.lfsr, 4 if params.cipher == "asc" else params.M, n)


def _basis_points(M: int):
    b = np.arange(M // 2)
    return signals(0, b, M), signals(1, b, M)


def _context(source: PlaintextSource) -> str:
    return {"known": "known-plaintext", "uniform": "ciphertext-only"}.get(
        source.kind, f"statistical(p={source.p})"
    )


def channel_tables(params: SystemParams, source: PlaintextSource, Y):
    """Per-symbol log weights for a batch of ciphertexts.

    Returns ``(W, bad, LL)`` where ``W`` has shape ``(T, n, B)`` with impossible
    entries zeroed, ``bad`` flags those entries (``None`` when there are none)
    and ``LL`` is the ``(T, n, M)`` table of ``log p(y_i | s)`` (``None`` for the
    noiseless additive cipher).
    """
    Y = np.atleast_2d(Y)
    T, n = Y.shape
    if params.cipher == "asc":
        yb = Y.astype(np.int64)
        b = np.arange(2)
        xs = yb[:, :, None] ^ b
        if source.kind == "known":
            x = source.known_bits(n)
            W = np.where(xs == x[None, :, None], 0.0, -np.inf)
        else:
            p = source.prob_one
            with np.errstate(divide="ignore"):
                W = np.where(xs == 1, np.log(p), np.log1p(-p))
        LL = None
    else:
        M = params.M
        LL = log_likelihood(Y[:, :, None], np.arange(M), params.noise)
        s0, s1 = _basis_points(M)
        if source.kind == "known":
            x = source.known_bits(n)
            idx = np.where(x[:, None] == 0, s0[None, :], s1[None, :])
            W = LL[:, np.arange(n)[:, None], idx]
        else:
            p = source.prob_one
            with np.errstate(divide="ignore"):
                W = np.logaddexp(LL[:, :, s0] + np.log1p(-p), LL[:, :, s1] + np.log(p))
    bad = np.isneginf(W)
    if bad.any():
        W = np.where(bad, 0.0, W)
        bad = bad.astype(np.uint8)
    else:
        bad = None
    return W, bad, LL


def _reduce(logL, viol, true_keys=None):
    logL = np.where(viol > 0, -np.inf, logL)
    K = logL.shape[1]
    top = logL.max(axis=1)
    if not np.isfinite(top).all():
        raise EmptySupportError("a ciphertext in the batch is inconsistent with every key")
    w = np.exp(logL - top[:, None])
    Z = w.sum(axis=1)
    post = w / Z[:, None]
    out = {
        "log_evidence": top + np.log(Z) - math.log(K),
        "entropy": -xlogy(post, post).sum(axis=1) / LN2,
        "n_spurious": (viol == 0).sum(axis=1) - 1,
        "map_key": np.argmax(logL, axis=1),
        "max_prob": post.max(axis=1),
    }
    if true_keys is not None:
        out["true_prob"] = post[np.arange(post.shape[0]), true_keys]
    return out


# ---------------------------------------------------------------------------
# single-ciphertext posterior


def key_posterior(params: SystemParams, y, source: PlaintextSource) -> KeyPosterior:
    """Exact posterior over all admissible seeds given one ciphertext."""
    y = np.asarray(getattr(y, "values", y), dtype=float).ravel()
    n = y.size
    KS = key_table(params, n)
    K = KS.shape[0]
    if n == 0:
        logp = np.full(K, -math.log(K))
        return KeyPosterior(np.exp(logp), logp, np.ones(K, dtype=bool), _context(source))
    W, bad, _ = channel_tables(params, source, y[None, :])
    logL, viol = kernels.key_loglik(W, bad, KS)
    logL, viol = logL[0], viol[0]
    support = viol == 0
    if not support.any():
        return KeyPosterior(np.zeros(K), np.full(K, -np.inf), support, _context(source))
    logL = np.where(support, logL, -np.inf)
    logp = logL - logsumexp(logL)
    return KeyPosterior(np.exp(logp), logp, support, _context(source))


def support_set(params: SystemParams, y, source: PlaintextSource) -> set[int]:
    """Seeds that could have produced ``y`` (exact support, not numerical)."""
    post = key_posterior(params, y, source)
    return {int(s) for s in post.seeds[post.support]}


def spurious_count(params: SystemParams, y, source: PlaintextSource) -> int:
    post = key_posterior(params, y, source)
    if post.empty:
        raise EmptySupportError("no key is consistent with the ciphertext")
    return int(post.support.sum()) - 1


# ---------------------------------------------------------------------------
# Monte-Carlo simulation


def sample_trials(params: SystemParams, source: PlaintextSource, n: int, count: int, rng):
    """Draw ``(key index, plaintext, signal, ciphertext)`` for ``count`` trials."""
    KS = key_table(params, n)
    keys = rng.integers(0, KS.shape[0], size=count)
    x = sample_plaintext(source, n, rng, size=count)
    ks = KS[keys]
    if params.cipher == "asc":
        y = (ks ^ x).astype(float)
        return keys, x, y, y
    s = signals(x, ks, params.M)
    y = np.mod(s + sample_noise(params.noise, rng, s.shape), params.M)
    return keys, x, s, y


def _trial_cost(params: SystemParams, n: int) -> int:
    width = 2 if params.cipher == "asc" else params.M
    if params.cipher != "asc" and params.noise.kind == FULL_GAUSSIAN:
        width *= 2 * params.noise.wraps + 1
    return max(n * width, 6 * params.n_keys, 1)


def analyse_block(params, source, n, count, rng, extra=None):
    keys, x, s, y = sample_trials(params, source, n, count, rng)
    KS = key_table(params, n)
    W, bad, LL = channel_tables(params, source, y)
    logL, viol = kernels.key_loglik(W, bad, KS)
    out = _reduce(logL, viol, keys)
    out["true_key"] = keys
    if LL is not None:
        out["log_lik_true"] = np.take_along_axis(LL, s[:, :, None], axis=2)[:, :, 0].sum(axis=1)
    else:
        out["log_lik_true"] = np.zeros(count)
    if extra is not None:
        out.update(extra(y, LL))
    return out


def simulate(params: SystemParams, source: PlaintextSource, n: int, trials: int,
             seed: int = 0, workers=None, stream: int = 0, extra=None) -> dict:
    """Per-trial posterior statistics for ``trials`` model-generated ciphertexts.

    Keys: ``true_key, map_key, entropy, n_spurious, max_prob, true_prob,
    log_evidence`` (natural log of ``p(y)``) and ``log_lik_true``.
    """
    if n == 0:
        K = params.n_keys
        rng_results = run_blocks(
            lambda rng, c: {"true_key": rng.integers(0, K, size=c)}, trials, 1, seed,
            workers, stream,
        )
        keys = concat(rng_results, "true_key")
        T = keys.size
        return {
            "true_key": keys,
            "map_key": np.zeros(T, dtype=np.int64),
            "entropy": np.full(T, math.log2(K)),
            "n_spurious": np.full(T, K - 1),
            "max_prob": np.full(T, 1.0 / K),
            "true_prob": np.full(T, 1.0 / K),
            "log_evidence": np.zeros(T),
            "log_lik_true": np.zeros(T),
        }
    results = run_blocks(
        lambda rng, c: analyse_block(params, source, n, c, rng, extra),
        trials, _trial_cost(params, n), seed, workers, stream,
    )
    return {k: concat(results, k) for k in results[0]}


# ---------------------------------------------------------------------------
# spurious keys


def _gauss_mass(a, b):
    """``Phi(b) - Phi(a)`` without cancellation in either tail."""
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    upper = ndtr(-a) - ndtr(-b)
    lower = ndtr(b) - ndtr(a)
    middle = 1.0 - ndtr(a) - ndtr(-b)
    return np.where(a >= 0, upper, np.where(b <= 0, lower, middle))


def _offset_survival(params: SystemParams) -> np.ndarray:
    """Probability that a signal offset ``d`` stays inside the truncated window.

    Indexed by ``d + M/2`` for integer ``d`` in ``[-M/2, M/2)``.
    """
    M, sigma, hw = params.M, params.sigma, params.noise.half_width
    d = np.arange(-M // 2, M // 2, dtype=float)
    lo = np.maximum(d - hw, -hw)
    hi = np.minimum(d + hw, hw)
    mass = _gauss_mass(-hw / sigma, hw / sigma)
    q = np.where(hi > lo, _gauss_mass(lo / sigma, hi / sigma) / mass, 0.0)
    return q


def _deterministic_plaintext(source: PlaintextSource, n: int):
    if source.kind == "known":
        return source.known_bits(n)
    if source.kind == "bernoulli" and source.p in (0.0, 1.0):
        return np.full(n, int(source.p), dtype=np.int64)
    return None


def spurious_given_keys(params: SystemParams, source: PlaintextSource, n: int,
                        keys) -> np.ndarray:
    """``E[N_k(Y) | key]`` with the channel noise integrated out exactly."""
    keys = np.asarray(keys, dtype=np.int64)
    K = params.n_keys
    x = _deterministic_plaintext(source, n)
    if n == 0 or x is None:
        return np.full(keys.size, float(K - 1))
    KS = key_table(params, n)
    if params.cipher == "asc":
        out = np.empty(keys.size)
        for j, k in enumerate(keys):
            out[j] = np.all(KS == KS[k], axis=1).sum() - 1
        return out
    if params.noise.kind == FULL_GAUSSIAN:
        return np.full(keys.size, float(K - 1))
    M = params.M
    S = signals(x[None, :], KS, M)
    with np.errstate(divide="ignore"):
        logq = np.log(_offset_survival(params))
    out = np.empty(keys.size)
    chunk = max(1, (1 << 22) // max(1, K * n))
    for start in range(0, keys.size, chunk):
        rows = keys[start:start + chunk]
        d = np.mod(S[None, :, :] - S[rows][:, None, :] + M // 2, M)
        surv = np.exp(logq[d].sum(axis=2))
        surv[np.arange(rows.size), rows] = 0.0
        out[start:start + chunk] = surv.sum(axis=1)
    return out


def exact_avg_spurious(params: SystemParams, source: PlaintextSource, n: int) -> float:
    """``N̄_k`` by enumerating every key with the noise integrated exactly."""
    return float(spurious_given_keys(params, source, n, np.arange(params.n_keys)).mean())


def avg_spurious(params: SystemParams, source: PlaintextSource, n: int, trials: int,
                 seed: int = 0, method: str = "sample", workers=None) -> Estimate:
    """Average number of spurious keys.

    ``sample`` draws (key, plaintext, noise) and counts the exact support of
    each posterior.  ``conditional`` draws keys only and integrates the noise
    analytically, which stays informative when spurious keys are rare.
    ``exact`` enumerates all keys.
    """
    if method == "sample":
        sim = simulate(params, source, n, trials, seed, workers)
        return Estimate.from_samples(sim["n_spurious"])
    if method == "conditional":
        results = run_blocks(
            lambda rng, c: {"k": rng.integers(0, params.n_keys, size=c)},
            trials, 1, seed, workers,
        )
        return Estimate.from_samples(spurious_given_keys(params, source, n, concat(results, "k")))
    if method == "exact":
        return Estimate(exact_avg_spurious(params, source, n), 0.0, params.n_keys)
    raise ValueError(f"unknown method {method!r}")


# ---------------------------------------------------------------------------
# equivocation and the Pi-function


def key_equivocation(params, source, n, trials, seed=0, workers=None, stream=0) -> Estimate:
    """``H(K | Y^n)`` as the mean posterior entropy over model-generated ``y``."""
    sim = simulate(params, source, n, trials, seed, workers, stream)
    return Estimate.from_samples(sim["entropy"])


def pi_function(params, source, n, trials, seed=0, workers=None) -> Estimate:
    """Sampled lower estimate of ``max_y max_k Pr[k | y]``.

    The maximum over a continuous ciphertext space cannot be reached by
    sampling, so the value only bounds the true function from below.  The
    standard error is reported as 0.
    """
    sim = simulate(params, source, n, trials, seed, workers)
    return Estimate(float(sim["max_prob"].max()), 0.0, trials)


@dataclass(frozen=True)
class ProofChain:
    equivocation: float
    mean_log_support: float
    log_mean_support: float

    @property
    def holds(self) -> bool:
        return self.equivocation <= self.mean_log_support <= self.log_mean_support


def proof_chain(params, source, n, trials, seed=0, workers=None, sim=None) -> ProofChain:
    """Evaluate ``H(K|Y) <= E log2(N_k+1) <= log2(N̄_k+1)`` on one sampled batch."""
    if sim is None:
        sim = simulate(params, source, n, trials, seed, workers)
    support = sim["n_spurious"] + 1.0
    return ProofChain(
        float(sim["entropy"].mean()),
        float(np.log2(support).mean()),
        float(math.log2(support.mean())),
    )


# ---------------------------------------------------------------------------
# mutual information


def per_symbol_info_U(params: SystemParams) -> float:
    """``I(S_i; Y_i)`` for a uniformly distributed signal point, by quadrature."""
    return uniform_output_entropy(params.noise) - noise_entropy(params.noise)


def signal_marginals(params: SystemParams, source: PlaintextSource, n: int) -> np.ndarray:
    """Exact ``Pr[S_i = s]`` per symbol over the key and plaintext, shape ``(n, M)``."""
    M, B = params.M, params.M // 2
    KS = key_table(params, n)
    counts = np.stack([np.bincount(KS[:, i], minlength=B) for i in range(n)]) / KS.shape[0]
    s0, s1 = _basis_points(M)
    out = np.zeros((n, M))
    x = _deterministic_plaintext(source, n)
    if x is not None:
        idx = np.where(x[:, None] == 0, s0[None, :], s1[None, :])
        np.add.at(out, (np.arange(n)[:, None], idx), counts)
    else:
        p = source.prob_one
        out[:, s0] += counts * (1 - p)
        out[:, s1] += counts * p
    return out


def _check_seqinfo_caps(params, n, max_L, max_bits):
    L, bits = params.lfsr.length, n * params.seg_bits
    if L > max_L or bits > max_bits or L + bits > MAX_JOINT_BITS:
        raise CapError(
            f"signal-sequence enumeration too large: L={L}, n*seg_bits={bits} "
            f"(caps L<={max_L}, n*seg_bits<={max_bits}, sum<={MAX_JOINT_BITS}); "
            f"reduce n to <= {max(0, min(max_bits, MAX_JOINT_BITS - L) // params.seg_bits)}"
        )


def sequence_info(params: SystemParams, n: int, trials: int, seed: int = 0,
                  source: PlaintextSource | None = None, estimator: str = "control",
                  workers=None, stream: int = 0, max_L: int = MAX_SEQINFO_L,
                  max_bits: int = MAX_SEQINFO_BITS) -> Estimate:
    """Monte-Carlo estimate of ``I(S^n; Y^n)`` in bits.

    ``direct`` averages ``f = log2 p(y|s) - log2 p(y)`` over model draws.
    ``control`` (default) subtracts a fitted multiple of the control variate
    ``g = sum_i [log2 p(y_i|s_i) - log2 p_i(y_i)]``, whose mean
    ``sum_i I(S_i; Y_i)`` is known exactly by quadrature.  Up to the symbol
    dependence the two coincide, so the variance left is that of the
    inter-symbol term; for ``n = 1`` the estimate is exact.
    """
    source = PlaintextSource.uniform() if source is None else source
    _check_seqinfo_caps(params, n, max_L, max_bits)
    if n == 0:
        return Estimate(0.0, 0.0, trials)
    if params.cipher == "asc" and estimator == "control":
        estimator = "direct"
    if estimator not in ("direct", "control"):
        raise ValueError(f"unknown estimator {estimator!r}")
    if estimator == "direct":
        sim = simulate(params, source, n, trials, seed, workers, stream)
        return Estimate.from_samples((sim["log_lik_true"] - sim["log_evidence"]) / LN2)

    marg = signal_marginals(params, source, n)
    with np.errstate(divide="ignore"):
        log_marg = np.log(marg)
    h_noise = noise_entropy(params.noise)
    cache: dict[bytes, float] = {}
    per_symbol = 0.0
    for row in marg:
        key = np.round(row, 15).tobytes()
        if key not in cache:
            cache[key] = mixture_entropy(row, params.noise) - h_noise
        per_symbol += cache[key]

    def extra(y, LL):
        return {"log_marginals": logsumexp(LL + log_marg[None], axis=2).sum(axis=1)}

    sim = simulate(params, source, n, trials, seed, workers, stream, extra)
    f = (sim["log_lik_true"] - sim["log_evidence"]) / LN2
    g = (sim["log_lik_true"] - sim["log_marginals"]) / LN2
    var_g = g.var()
    beta = float(np.mean((f - f.mean()) * (g - g.mean())) / var_g) if var_g > 0 else 1.0
    est = Estimate.from_samples(f - beta * g)
    return Estimate(est.value + beta * per_symbol, est.std_error, est.trials)


@dataclass(frozen=True)
class IdentityCheck:
    lhs: Estimate
    rhs: Estimate
    gap: float
    gap_se: float


def equivocation_identity_check(params, source, n, trials, seed=0, workers=None,
                                estimator="control") -> IdentityCheck:
    """Compare ``H(K|Y^n)`` with ``H(X^n) + H(K) - I(X^n K; Y^n)``.

    The two sides use independent random streams and different estimators
    (posterior entropy versus the information estimator).  The identity needs
    Bob to decrypt without error; under full Gaussian noise with a random
    plaintext the gap equals ``-H(X^n | K, Y^n)``.
    """
    lhs = key_equivocation(params, source, n, trials, seed, workers, stream=0)
    info = sequence_info(params, n, trials, seed, source, estimator, workers, stream=1)
    rhs_value = source.block_entropy(n) + params.key_entropy - info.value
    rhs = Estimate(rhs_value, info.std_error, info.trials)
    gap_se = math.hypot(lhs.std_error, rhs.std_error)
    return IdentityCheck(lhs, rhs, lhs.value - rhs.value, gap_se)


def check_plaintext_length(source: PlaintextSource, n: int) -> None:
    if source.kind == "known" and source.bits is not None and len(source.bits) < n:
        raise ChannelError(f"known plaintext has {len(source.bits)} bits, {n} needed")
