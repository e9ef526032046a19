import numpy as np
import pytest

from aeta_lab import attacks as at
from aeta_lab.channel import FULL_GAUSSIAN, TRUNCATED, PlaintextSource, SystemParams
from aeta_lab.inference import CapError

KNOWN = PlaintextSource.known()
UNIFORM = PlaintextSource.uniform()


def test_asc_unicity_is_register_length():
    assert at.unicity_distance(SystemParams.asc(8), KNOWN, 0.999, 64, 2000) == 8
    assert at.unicity_distance(SystemParams.asc(8), KNOWN, 1.0, 64, 10) == 8
    assert at.unicity_distance(SystemParams.asc(5), KNOWN, 1.0, 64, 10) == 5


def test_asc_map_exact_at_register_length():
    r = at.map_attack_success(SystemParams.asc(8), KNOWN, 8, 3000, seed=2)
    assert r.success_prob.value == 1.0 and r.correct.all()
    assert at.map_attack_success(SystemParams.asc(8), KNOWN, 7, 3000).success_prob.value < 0.6


@pytest.mark.parametrize("noise", [FULL_GAUSSIAN, TRUNCATED])
def test_alphaeta_never_certain(noise):
    p = SystemParams.build(8, 8, sigma=2.0, noise=noise)
    assert at.unicity_distance(p, KNOWN, 1.0, 256, 10) == at.NOT_REACHED
    assert not at.spurious_possible(SystemParams.asc(8), KNOWN, 8)
    assert at.spurious_possible(p, KNOWN, 40)


def test_alphaeta_half_unicity_stable_across_seeds():
    p = SystemParams.build(8, 8, sigma=2.0, noise=TRUNCATED)
    values = [at.unicity_distance(p, KNOWN, 0.5, 64, 2000, seed=s) for s in (1, 2, 3)]
    assert all(isinstance(v, int) for v in values)
    assert max(values) - min(values) <= 1


def test_unicity_rejects_bad_probability():
    p = SystemParams.asc(4)
    for bad in (0.0, -0.1, 1.5):
        with pytest.raises(ValueError):
            at.unicity_distance(p, KNOWN, bad, 10, 10)
    with pytest.raises(ValueError):
        at.unicity_distance(p, KNOWN, 0.5, 0, 10)


def test_unicity_not_reached_within_budget():
    p = SystemParams.build(8, 8, sigma=2.0, noise=TRUNCATED)
    assert at.unicity_distance(p, KNOWN, 0.999, 3, 500) == at.NOT_REACHED


def test_map_success_non_decreasing():
    p = SystemParams.build(6, 8, sigma=1.5, noise=FULL_GAUSSIAN)
    prev = None
    for n in (1, 2, 4, 6, 8, 12):
        e = at.map_attack_success(p, KNOWN, n, 3000, seed=n).success_prob
        if prev is not None:
            assert e.value >= prev.value - 2 * np.hypot(e.std_error, prev.std_error)
        prev = e


def test_single_period_vote_equals_map():
    p = SystemParams.build(6, 4, sigma=0.8, noise=FULL_GAUSSIAN)
    P = at.symbols_per_period(p)
    assert P == 63
    vote = at.majority_vote_attack(p, 1, 300, seed=9)
    mapr = at.map_attack_success(p, UNIFORM, P, 300, seed=9)
    assert np.array_equal(vote.correct, mapr.correct)
    assert vote.joint_success.value == mapr.success_prob.value


def test_vote_improves_with_periods():
    p = SystemParams.build(6, 4, sigma=0.8, noise=FULL_GAUSSIAN)
    one = at.majority_vote_attack(p, 1, 400, seed=1)
    for T in (5, 25):
        r = at.majority_vote_attack(p, T, 400, seed=1)
        assert r.success_prob.value >= one.success_prob.value - 2 * r.success_prob.std_error
        assert r.joint_success.value >= r.success_prob.value - 2 * r.success_prob.std_error


def test_vote_validation():
    p = SystemParams.build(6, 4, sigma=1.0)
    with pytest.raises(ValueError):
        at.majority_vote_attack(p, 0, 10)
    big = SystemParams.build(20, 4, sigma=1.0)
    with pytest.raises(CapError):
        at.majority_vote_attack(big, 3, 10)
