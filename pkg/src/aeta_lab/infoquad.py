"""Differential entropies of the heterodyne channel by numerical quadrature.

Integrals are composite Gauss-Legendre over panels whose edges sit on every
integer (where truncated densities jump) and whose width never exceeds the
noise scale.  Each result is recomputed with twice the nodes and rejected if
the two disagree by more than ``QUAD_TOL`` bits.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import logsumexp

from aeta_lab.channel import FULL_GAUSSIAN, LOG_SQRT_2PI, NoiseModel, log_likelihood

QUAD_TOL = 1e-6
LN2 = math.log(2.0)


class QuadratureError(RuntimeError):
    pass


def _panel_edges(lo: float, hi: float, sigma: float) -> np.ndarray:
    per_unit = max(1, math.ceil(2.0 / min(1.0, sigma)))
    count = max(1, round((hi - lo) * per_unit))
    return np.linspace(lo, hi, count + 1)


def _integrate(fn, edges: np.ndarray, nodes: int) -> float:
    x, w = np.polynomial.legendre.leggauss(nodes)
    a, b = edges[:-1, None], edges[1:, None]
    pts = 0.5 * (b - a) * x + 0.5 * (a + b)
    vals = fn(pts.ravel()).reshape(pts.shape)
    return float(np.sum(vals * (0.5 * (b - a)) * w))


def _entropy(logpdf, edges, nodes=16) -> float:
    def integrand(y):
        lp = logpdf(y)
        out = np.zeros_like(lp)
        ok = np.isfinite(lp)
        out[ok] = -np.exp(lp[ok]) * lp[ok]
        return out

    coarse = _integrate(integrand, edges, nodes) / LN2
    fine = _integrate(integrand, edges, 2 * nodes) / LN2
    if abs(fine - coarse) > QUAD_TOL:
        raise QuadratureError(
            f"entropy quadrature did not converge: {coarse!r} vs {fine!r}"
        )
    return fine


def _log_lattice_sum(y: np.ndarray, noise: NoiseModel) -> np.ndarray:
    """``log sum_m f(y - m)`` over all integers ``m`` for the unwrapped noise law."""
    sigma = noise.sigma
    if noise.kind == FULL_GAUSSIAN:
        if sigma >= 0.5:
            k = np.arange(1, max(2, math.ceil(math.sqrt(45.0) / (math.pi * sigma)) + 1))
            coef = np.exp(-2.0 * (math.pi * sigma * k) ** 2)
            series = 1.0 + 2.0 * np.cos(2 * math.pi * np.outer(y, k)) @ coef
            return np.log(series)
        reach = math.ceil(9 * sigma) + 2
        m = np.arange(-reach, reach + 2)
        z = (y[:, None] - m) / sigma
        return logsumexp(-0.5 * z * z, axis=1) - LOG_SQRT_2PI - math.log(sigma)
    hw = noise.half_width
    m = np.arange(-math.ceil(hw) - 1, math.ceil(hw) + 2)
    d = y[:, None] - m
    val = -0.5 * (d / sigma) ** 2 - LOG_SQRT_2PI - math.log(sigma) - noise.log_mass
    return logsumexp(np.where(np.abs(d) < hw, val, -np.inf), axis=1)


def _log_noise_density(d: np.ndarray, noise: NoiseModel) -> np.ndarray:
    M, sigma = noise.M, noise.sigma
    if noise.kind == FULL_GAUSSIAN and sigma > 0.5 * M:
        k = np.arange(1, math.ceil(math.sqrt(45.0) * M / (math.pi * sigma)) + 2)
        coef = np.exp(-2.0 * (math.pi * sigma * k / M) ** 2)
        series = 1.0 + 2.0 * np.cos(2 * math.pi * np.outer(d, k) / M) @ coef
        return np.log(series) - math.log(M)
    return log_likelihood(d, 0.0, noise)


def noise_entropy(noise: NoiseModel) -> float:
    """``h(R)`` in bits for the circle-valued noise (``h(Y|S)`` per symbol)."""
    if noise.kind == FULL_GAUSSIAN:
        lo, hi = -noise.M / 2, noise.M / 2
    else:
        lo, hi = -noise.half_width, noise.half_width
    edges = _panel_edges(lo, hi, noise.sigma)
    return _entropy(lambda d: _log_noise_density(d, noise), edges)


def uniform_output_entropy(noise: NoiseModel) -> float:
    """``h(Y)`` in bits when the signal is uniform over all ``M`` points."""
    edges = _panel_edges(0.0, 1.0, noise.sigma)
    per_cell = _entropy(lambda y: _log_lattice_sum(y, noise) - math.log(noise.M), edges)
    return noise.M * per_cell


def mixture_entropy(weights, noise: NoiseModel) -> float:
    """``h(Y)`` in bits for ``Y = S + R`` with ``Pr[S = s] = weights[s]``."""
    weights = np.asarray(weights, dtype=float)
    support = np.flatnonzero(weights > 0)
    logw = np.log(weights[support])

    def logpdf(y):
        return logsumexp(log_likelihood(y[:, None], support[None, :], noise) + logw, axis=1)

    edges = _panel_edges(0.0, float(noise.M), noise.sigma)
    return _entropy(logpdf, edges)


def truncated_noise_entropy_closed_form(noise: NoiseModel) -> float:
    """Truncated-normal entropy, for cross-checking :func:`noise_entropy`."""
    s, b = noise.sigma, noise.half_width / noise.sigma
    Z = math.exp(noise.log_mass)
    phi_b = math.exp(-0.5 * b * b) / math.sqrt(2 * math.pi)
    nats = math.log(math.sqrt(2 * math.pi * math.e) * s * Z) - b * phi_b / Z
    return nats / LN2
