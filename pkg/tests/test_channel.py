import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from aeta_lab import channel as ch
from aeta_lab import infoquad
from aeta_lab.inference import per_symbol_info_U
from oracles import entropy_by_scipy, ref_density, ref_signal

M_VALUES = st.sampled_from([4, 8, 16, 64])


@given(st.integers(0, 1), M_VALUES, st.data())
def test_encrypt_matches_definition(x, M, data):
    k = data.draw(st.integers(0, M // 2 - 1))
    s = ch.encrypt_symbol(x, k, M)
    assert s == ref_signal(x, k, M)
    assert ch.signals(x, k, M) == s
    # the two bits of one basis are antipodal
    assert (ch.encrypt_symbol(1, k, M) - ch.encrypt_symbol(0, k, M)) % M == M // 2


def test_encrypt_rejects_bad_basis():
    with pytest.raises(ch.ChannelError):
        ch.encrypt_symbol(0, 4, 8)


@given(M_VALUES, st.floats(0.05, 3.0), st.integers(0, 2**32 - 1))
@settings(max_examples=50)
def test_truncated_noise_always_decrypts(M, rel_sigma, seed):
    rng = np.random.default_rng(seed)
    noise = ch.NoiseModel(ch.TRUNCATED, rel_sigma * M / 4, M)
    k = rng.integers(0, M // 2, size=200)
    x = rng.integers(0, 2, size=200)
    y = ch.heterodyne_sample(ch.signals(x, k, M), noise, rng)
    assert np.all((y >= 0) & (y < M))
    assert np.array_equal(ch.decrypt_seq(y, k, M), x)


@given(st.integers(0, 1), st.integers(0, 3))
def test_decrypt_without_noise(x, k):
    M = 8
    assert ch.decrypt_symbol(float(ch.encrypt_symbol(x, k, M)), k, M) == x


def test_decrypt_tie_goes_to_smaller_signal():
    M = 8
    for k in range(4):
        s0, s1 = ch.encrypt_symbol(0, k, M), ch.encrypt_symbol(1, k, M)
        y = (min(s0, s1) + M / 4) % M
        expected = 0 if s0 < s1 else 1
        assert ch.decrypt_symbol(y, k, M) == expected
        assert ch.decrypt_seq([y], [k], M)[0] == expected


def test_photon_number_conversion():
    assert ch.sigma_from_photon_number(1024, 64) == pytest.approx(1024 / (4 * math.pi * 8))
    assert ch.photon_number_from_sigma(1024, ch.sigma_from_photon_number(1024, 64)) == pytest.approx(64)
    with pytest.raises(ch.ChannelError):
        ch.sigma_from_photon_number(8, 0)


@pytest.mark.parametrize("kind", [ch.FULL_GAUSSIAN, ch.TRUNCATED])
@pytest.mark.parametrize("M, sigma", [(8, 0.3), (8, 2.0), (4, 4.0), (16, 1.0)])
def test_density_matches_reference(kind, M, sigma):
    noise = ch.NoiseModel(kind, sigma, M)
    ys = np.linspace(0, M, 37, endpoint=False) + 0.013
    for s in (0, 1, M - 1):
        got = ch.likelihood(ys, s, noise)
        want = [ref_density(y, s, M, sigma, kind) for y in ys]
        np.testing.assert_allclose(got, want, rtol=1e-9, atol=1e-300)


@pytest.mark.parametrize("kind", [ch.FULL_GAUSSIAN, ch.TRUNCATED])
@pytest.mark.parametrize("M, sigma", [(8, 0.5), (8, 3.0), (4, 4.0)])
def test_density_normalised(kind, M, sigma):
    noise = ch.NoiseModel(kind, sigma, M)
    pts = [M / 2 - M / 4, M / 2 + M / 4]
    total, _ = integrate.quad(lambda y: ch.likelihood(y, M / 2, noise), 0, M, points=pts, limit=200)
    assert total == pytest.approx(1.0, abs=1e-8)


def test_truncated_sampler_distribution():
    rng = np.random.default_rng(5)
    noise = ch.NoiseModel(ch.TRUNCATED, 2.0, 8)
    r = ch.sample_noise(noise, rng, 20000)
    assert np.all(np.abs(r) < 2.0)
    b = 2.0 / 2.0
    res = stats.kstest(r, stats.truncnorm(-b, b, scale=2.0).cdf)
    assert res.pvalue > 1e-3


def test_full_gaussian_sampler_scale():
    rng = np.random.default_rng(6)
    r = ch.sample_noise(ch.NoiseModel(ch.FULL_GAUSSIAN, 1.5, 8), rng, 40000)
    assert r.std() == pytest.approx(1.5, rel=0.02)


def test_noise_model_validation():
    with pytest.raises(ch.ChannelError):
        ch.NoiseModel("laplace", 1.0, 8)
    with pytest.raises(ch.ChannelError):
        ch.NoiseModel(ch.TRUNCATED, 0.0, 8)
    assert ch.NoiseModel(ch.FULL_GAUSSIAN, 4.0, 4).wraps == 7


def test_system_params_build():
    p = ch.SystemParams.build(8, 8, sigma=2.0, noise=ch.TRUNCATED)
    assert (p.seg_bits, p.n_bases, p.n_keys) == (2, 4, 255)
    assert p.key_entropy == pytest.approx(math.log2(255))
    q = ch.SystemParams.build(8, 1024, photon_N=64)
    assert q.sigma == pytest.approx(1024 / (32 * math.pi))
    with pytest.raises(ch.ChannelError):
        ch.SystemParams.build(8, 8)
    with pytest.raises(ch.ChannelError):
        ch.SystemParams.build(8, 8, sigma=1.0, photon_N=4)
    with pytest.raises(ValueError):
        ch.SystemParams.build(8, 12, sigma=1.0)
    asc = ch.SystemParams.asc(8)
    assert asc.cipher == "asc" and asc.seg_bits == 1


def test_plaintext_sources():
    assert ch.PlaintextSource.uniform().redundancy == 0.0
    assert ch.PlaintextSource.known().redundancy == 1.0
    b = ch.PlaintextSource.bernoulli(0.11)
    assert b.entropy_rate == pytest.approx(-0.11 * math.log2(0.11) - 0.89 * math.log2(0.89))
    assert b.block_entropy(5) == pytest.approx(5 * b.entropy_rate)
    k = ch.PlaintextSource.known([1, 0, 1])
    assert list(k.known_bits(2)) == [1, 0]
    with pytest.raises(ch.ChannelError):
        k.known_bits(4)
    assert list(ch.PlaintextSource.known().known_bits(3)) == [0, 0, 0]
    with pytest.raises(ch.ChannelError):
        ch.PlaintextSource.bernoulli(1.5)
    with pytest.raises(ch.ChannelError):
        ch.PlaintextSource("zipf")


def test_sample_plaintext_shapes():
    rng = np.random.default_rng(0)
    assert ch.sample_plaintext(ch.PlaintextSource.uniform(), 7, rng, size=3).shape == (3, 7)
    x = ch.sample_plaintext(ch.PlaintextSource.bernoulli(0.2), 100000, rng)
    assert x.mean() == pytest.approx(0.2, abs=0.01)


def test_encrypt_seq_round_trip():
    rng = np.random.default_rng(1)
    p = ch.SystemParams.build(8, 8, sigma=1.0, noise=ch.TRUNCATED)
    x = rng.integers(0, 2, 40)
    s, y = ch.encrypt_seq(p, 77, x, rng)
    from aeta_lab.keystream import running_key

    k = running_key(p.lfsr, 77, 8, 40).segments
    assert np.array_equal(ch.decrypt_seq(y.values, k, 8), x)
    with pytest.raises(ch.ChannelError):
        ch.encrypt_seq(p, 77, x)
    kbits, c = ch.encrypt_seq(ch.SystemParams.asc(8), 77, x)
    assert np.array_equal(c ^ kbits, x)


def test_ciphertext_range_checked():
    with pytest.raises(ch.ChannelError):
        ch.CiphertextSeq(np.array([0.5, 8.0]), 8)


# -- quadrature ---------------------------------------------------------------


@pytest.mark.parametrize("M, sigma", [(8, 0.3), (8, 1.0), (8, 2.0), (4, 4.0), (64, 5.0)])
def test_truncated_entropy_closed_form(M, sigma):
    noise = ch.NoiseModel(ch.TRUNCATED, sigma, M)
    assert infoquad.noise_entropy(noise) == pytest.approx(
        infoquad.truncated_noise_entropy_closed_form(noise), abs=1e-8
    )


@pytest.mark.parametrize("kind", [ch.FULL_GAUSSIAN, ch.TRUNCATED])
@pytest.mark.parametrize("M, sigma", [(8, 0.7), (8, 2.0), (4, 1.3)])
def test_output_entropy_against_scipy(kind, M, sigma):
    noise = ch.NoiseModel(kind, sigma, M)
    pdf = lambda y: sum(ref_density(y, s, M, sigma, kind) for s in range(M)) / M
    want = entropy_by_scipy(pdf, 0, M, breaks=[s + d for s in range(M) for d in (-M / 4, M / 4) if 0 < s + d < M])
    assert infoquad.uniform_output_entropy(noise) == pytest.approx(want, abs=1e-6)


def test_mixture_entropy_uniform_weights():
    noise = ch.NoiseModel(ch.FULL_GAUSSIAN, 0.9, 8)
    assert infoquad.mixture_entropy(np.full(8, 1 / 8), noise) == pytest.approx(
        infoquad.uniform_output_entropy(noise), abs=1e-8
    )


def test_small_sigma_gaussian_entropy():
    noise = ch.NoiseModel(ch.FULL_GAUSSIAN, 0.05, 8)
    assert infoquad.noise_entropy(noise) == pytest.approx(0.5 * math.log2(2 * math.pi * math.e * 0.05**2), abs=1e-9)


@pytest.mark.parametrize("M", [4, 8, 64, 256])
def test_U_limits(M):
    small = ch.SystemParams.build(8, M, sigma=M / 2000)
    large = ch.SystemParams.build(8, M, sigma=50.0 * M)
    assert per_symbol_info_U(small) == pytest.approx(math.log2(M), rel=0.01)
    assert abs(per_symbol_info_U(large)) < 0.01 * math.log2(M)


@given(st.floats(0.1, 20.0))
@settings(max_examples=20, deadline=None)
def test_U_between_zero_and_log2M(sigma):
    U = per_symbol_info_U(ch.SystemParams.build(8, 16, sigma=sigma))
    assert -1e-9 <= U <= 4 + 1e-9


def test_U_decreases_with_noise():
    us = [per_symbol_info_U(ch.SystemParams.build(8, 32, sigma=s)) for s in (0.2, 0.5, 1, 2, 4, 8)]
    assert all(a > b for a, b in zip(us, us[1:]))


def test_U_at_moderate_photon_number():
    U = per_symbol_info_U(ch.SystemParams.build(8, 1024, photon_N=64))
    assert abs(U - 4.6) < 0.3
    # slope in log2 N approaches one half
    U4 = per_symbol_info_U(ch.SystemParams.build(8, 1024, photon_N=256))
    assert U4 - U == pytest.approx(1.0, abs=0.05)
