#!/usr/bin/env python3
"""
Tests for the exact moment and cumulant engine on finite chains
"""
import math
import os
import sys

import numpy as np
import pytest

# Add src to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

from src.chains import random_certified_chain
from src.constants import geometric_rate
from src.cumulants import (
    IndexTuple,
    autocovariance,
    centered_moment,
    envelope_check,
    exact_sn_moments,
    exact_sn_moments_from,
    exact_variance,
    joint_cumulant,
    leonov_check,
    markov_reduction_check,
    path_enumeration_centered_moment,
    path_enumeration_moment,
    sn_cumulants,
    spectral_density,
    v_norm_distance,
)
from src.errors import BudgetExceededError, InputValidationError

# g = (1, -2) is an eigenvector of Q for 0.7 with pi(g) = 0
DECAY = 0.7
STATIONARY_VAR = 2.0


def reference_variance(n):
    return sum(STATIONARY_VAR * DECAY ** abs(i - j) for i in range(n) for j in range(n))


def test_autocovariance_reference(chain):
    for lag in range(6):
        assert autocovariance(chain, chain.g, lag) == pytest.approx(STATIONARY_VAR * DECAY ** lag)


@pytest.mark.parametrize("n", [1, 2, 5, 12])
def test_exact_variance_reference(chain, n):
    assert exact_variance(chain, chain.g, n) == pytest.approx(reference_variance(n), rel=1e-12)


def test_stationary_moments_are_centered(chain):
    moments = exact_sn_moments(chain, chain.g, 7, 4)
    assert moments[0] == pytest.approx(1.0)
    assert moments[1] == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("init", [None, 0, 1, [0.5, 0.5]])
def test_moment_dp_matches_path_enumeration(chain, init):
    dp = exact_sn_moments_from(chain, chain.g, 6, 4, init=init)
    for power in (2, 3, 4):
        oracle = path_enumeration_moment(chain, chain.g, 6, power, init=init)
        assert dp[power] == pytest.approx(oracle, rel=1e-10)


def test_moment_dp_on_random_chain():
    chain = random_certified_chain(np.random.default_rng(7), 4)
    dp = exact_sn_moments(chain, chain.g, 5, 4)
    assert dp[4] == pytest.approx(path_enumeration_moment(chain, chain.g, 5, 4), rel=1e-9)


def test_invalid_initial_law(chain):
    with pytest.raises(InputValidationError):
        exact_sn_moments_from(chain, chain.g, 3, 2, init=5)
    with pytest.raises(InputValidationError):
        exact_sn_moments_from(chain, chain.g, 3, 2, init=[0.6, 0.6])


def test_moment_dp_budget(chain):
    with pytest.raises(BudgetExceededError):
        exact_sn_moments(chain, chain.g, 10 ** 7, 2)


def test_sn_cumulants_second_is_variance(chain):
    cumulants = sn_cumulants(chain, chain.g, 8, 4)
    assert cumulants[0] == pytest.approx(0.0, abs=1e-12)
    assert cumulants[1] == pytest.approx(reference_variance(8), rel=1e-12)


def test_centered_moment_matches_joint_law(chain):
    rng = np.random.default_rng(3)
    observables = tuple(rng.normal(size=2) for _ in range(3))
    tup = IndexTuple((0, 1, 3), observables)
    assert centered_moment(chain, tup) == pytest.approx(
        path_enumeration_centered_moment(chain, tup), rel=1e-9, abs=1e-14)


def test_centered_moment_needs_sorted_times(chain):
    tup = IndexTuple((3, 1), (chain.g, chain.g))
    with pytest.raises(InputValidationError):
        centered_moment(chain, tup)


def test_index_tuple_validation(chain):
    with pytest.raises(InputValidationError):
        IndexTuple((0, 1), (chain.g,))
    with pytest.raises(InputValidationError):
        IndexTuple((-1,), (chain.g,))
    assert IndexTuple((0, 2, 7), (chain.g,) * 3).gap == 5


def test_markov_reduction(chain):
    rng = np.random.default_rng(11)
    tup = IndexTuple((0, 2, 3, 6), tuple(rng.normal(size=2) for _ in range(4)))
    result = markov_reduction_check(chain, tup)
    assert result.passed
    with pytest.raises(InputValidationError):
        markov_reduction_check(chain, IndexTuple((0,), (chain.g,)))


def test_joint_cumulant_second_order_is_covariance(chain):
    tup = IndexTuple((0, 3), (chain.g, chain.g))
    assert joint_cumulant(chain, tup) == pytest.approx(STATIONARY_VAR * DECAY ** 3)


def test_joint_cumulant_is_symmetric(chain):
    rng = np.random.default_rng(5)
    tup = IndexTuple((0, 2, 5), tuple(rng.normal(size=2) for _ in range(3)))
    assert joint_cumulant(chain, tup.permuted([2, 0, 1])) == pytest.approx(
        joint_cumulant(chain, tup), rel=1e-10, abs=1e-14)


@pytest.mark.parametrize("n,q", [(5, 2), (10, 3), (6, 4)])
def test_leonov_assembly(chain, n, q):
    result = leonov_check(chain, chain.g, n, q)
    assert result.passed
    assert result.leading == pytest.approx(math.prod(range(1, 2 * q, 2)) * reference_variance(n) ** q)


def test_spectral_density_reference(chain):
    grid = np.array([0.0, math.pi / 2, math.pi])
    density = spectral_density(chain, chain.g, grid)
    expected = (STATIONARY_VAR * (1 - DECAY ** 2)
                / (1 - 2 * DECAY * np.cos(grid) + DECAY ** 2) / (2 * math.pi))
    assert density.values == pytest.approx(expected, rel=1e-9)
    assert 0 < density.f_min <= density.values.min()
    assert density.slack >= 0


def test_spectral_density_of_zero_observable(chain):
    density = spectral_density(chain, np.zeros(2), [0.0, 1.0])
    assert density.f_min == 0.0
    assert np.all(density.values == 0)


def test_envelope_holds(chain):
    from src.chains import certify
    cert = certify(chain)
    rate = geometric_rate(cert)
    tup = IndexTuple((0, 1, 4, 5), (chain.g,) * 4)
    lhs, rhs = envelope_check(chain, tup, rate, cert.pi_V, q=2)
    assert lhs <= rhs
    lhs_w, rhs_w = envelope_check(chain, tup, rate, cert.pi_V, q=2, gamma=1.0)
    assert lhs_w <= rhs_w


def test_v_norm_distance(chain):
    assert v_norm_distance(chain, 0, 0) == pytest.approx((math.e + math.e ** 3) / 3)
    assert v_norm_distance(chain, 30, 0) < v_norm_distance(chain, 3, 0)
