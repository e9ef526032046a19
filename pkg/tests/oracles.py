"""Independent reference implementations used as test oracles.

Nothing here imports the package's numerical code: registers are simulated
bit-by-bit on Python lists, densities come from scipy.stats and posteriors
are formed by enumerating every (key, plaintext) pair.
"""

import itertools
import math

import numpy as np
from scipy import integrate, stats


def ref_lfsr(L, taps, seed, count):
    reg = [(seed >> (L - 1 - i)) & 1 for i in range(L)]  # reg[0] is the MSB
    out = []
    for _ in range(count):
        out.append(reg[0])
        fb = 0
        for p in taps:
            fb ^= reg[L - p]
        reg = reg[1:] + [fb]
    return out


def ref_segments(L, taps, seed, M, n):
    seg = int(math.log2(M // 2))
    bits = ref_lfsr(L, taps, seed, n * seg)
    return [int("".join(map(str, bits[i * seg:(i + 1) * seg])), 2) for i in range(n)]


def ref_signal(x, kseg, M):
    v = x ^ (kseg % 2)
    return (kseg + v * M // 2) % M


def _min_offset(y, s, M):
    d = (y - s) % M
    return d - M if d >= M / 2 else d


def ref_density(y, s, M, sigma, kind):
    d = _min_offset(y, s, M)
    if kind == "truncated":
        b = (M / 4) / sigma
        return float(stats.truncnorm.pdf(d, -b, b, scale=sigma)) if abs(d) < M / 4 else 0.0
    j = np.arange(-60, 61) * M
    return float(stats.norm.pdf(d + j, scale=sigma).sum())


def brute_posterior(L, taps, M, sigma, kind, y, p_one=0.5, known=None):
    """``Pr[seed | y]`` for seeds ``1..2^L-1`` by direct Bayes over (key, plaintext)."""
    n = len(y)
    K = (1 << L) - 1
    if known is not None:
        plaintexts = [(tuple(known[:n]), 1.0)]
    else:
        plaintexts = []
        for xs in itertools.product((0, 1), repeat=n):
            prior = 1.0
            for x in xs:
                prior *= p_one if x else 1.0 - p_one
            plaintexts.append((xs, prior))
    joint = np.zeros(K)
    for seed in range(1, K + 1):
        ks = ref_segments(L, taps, seed, M, n)
        total = 0.0
        for xs, prior in plaintexts:
            lik = prior
            for yi, xi, ki in zip(y, xs, ks):
                lik *= ref_density(yi, ref_signal(xi, ki, M), M, sigma, kind)
            total += lik
        joint[seed - 1] = total / K
    return joint / joint.sum()


def gf2_mulmod(a, b, mod, deg):
    r = 0
    while b:
        if b & 1:
            r ^= a
        b >>= 1
        a <<= 1
        if a >> deg & 1:
            a ^= mod
    return r


def gf2_powmod(base, e, mod, deg):
    r = 1
    while e:
        if e & 1:
            r = gf2_mulmod(r, base, mod, deg)
        base = gf2_mulmod(base, base, mod, deg)
        e >>= 1
    return r


def is_primitive(L, taps):
    """Order of ``x`` modulo ``1 + sum x^p`` equals ``2^L - 1``."""
    mod = 1
    for p in taps:
        mod ^= 1 << p
    order = (1 << L) - 1
    if gf2_powmod(2, order, mod, L) != 1:
        return False
    m, q, primes = order, 2, set()
    while q * q <= m:
        while m % q == 0:
            primes.add(q)
            m //= q
        q += 1
    if m > 1:
        primes.add(m)
    return all(gf2_powmod(2, order // q, mod, L) != 1 for q in primes)


def entropy_by_scipy(pdf, lo, hi, breaks=()):
    """Differential entropy in bits of a density on ``[lo, hi]`` via adaptive quadrature."""
    def f(y):
        p = pdf(y)
        return -p * math.log2(p) if p > 0 else 0.0
    pts = sorted(set([lo, *breaks, hi]))
    return sum(integrate.quad(f, a, b, limit=400, epsabs=1e-12)[0] for a, b in zip(pts, pts[1:]))


def exact_pair_info(L, taps, M, sigma, kind, p_one=0.5):
    """``I(S_1 S_2; Y_1 Y_2)`` in bits by 2-D Gauss-Legendre quadrature."""
    K = (1 << L) - 1
    P = np.zeros((M, M))
    for seed in range(1, K + 1):
        k1, k2 = ref_segments(L, taps, seed, M, 2)
        for x1, x2 in itertools.product((0, 1), repeat=2):
            w = (p_one if x1 else 1 - p_one) * (p_one if x2 else 1 - p_one) / K
            P[ref_signal(x1, k1, M), ref_signal(x2, k2, M)] += w
    xg, wg = np.polynomial.legendre.leggauss(20)
    edges = np.linspace(0, M, 8 * M + 1)  # every density jump sits on a quarter-integer
    half = 0.5 * np.diff(edges)[:, None]
    pts = (half * xg + 0.5 * (edges[1:] + edges[:-1])[:, None]).ravel()
    wts = (half * wg).ravel()
    d = (pts[:, None] - np.arange(M)[None, :]) % M
    d = np.where(d >= M / 2, d - M, d)
    if kind == "truncated":
        b = (M / 4) / sigma
        F = np.where(np.abs(d) < M / 4, stats.truncnorm.pdf(d, -b, b, scale=sigma), 0.0)
        hn = stats.truncnorm(-b, b, scale=sigma).entropy() / math.log(2)
    else:
        F = sum(stats.norm.pdf(d + j * M, scale=sigma) for j in range(-40, 41))
        hn = entropy_by_scipy(lambda t: float(sum(stats.norm.pdf(t + j * M, scale=sigma)
                                                  for j in range(-40, 41))), -M / 2, M / 2)
    pdf = F @ P @ F.T
    W = wts[:, None] * wts[None, :]
    safe = np.where(pdf > 0, pdf, 1.0)
    h = -(W * pdf * np.log2(safe)).sum()
    return h - 2 * hn
