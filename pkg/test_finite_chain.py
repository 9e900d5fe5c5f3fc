#!/usr/bin/env python3
"""
Tests for finite-state chains: stationary law, certification and simulation
"""
import math
import os
import sys

import numpy as np
import pytest

# Add src to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

from src.chains import (
    FiniteChain,
    certify,
    certify_coupling,
    certify_drift,
    certify_small_set,
    certify_wasserstein,
    coupling_contraction_check,
    finite_stationary,
    random_certified_chain,
)
from src.chains.finite_chain import EPS_CEILING
from src.constants import contraction_rate, geometric_rate
from src.errors import CertificationFailure, InputValidationError


def test_stationary_law_reference(chain):
    assert chain.pi == pytest.approx([2 / 3, 1 / 3], abs=1e-15)
    assert chain.pi_V == pytest.approx(2 / 3 * math.e + math.e ** 3 / 3)


def test_stationary_law_random_chain():
    chain = random_certified_chain(np.random.default_rng(1), 6)
    assert np.abs(chain.pi @ chain.Q - chain.pi).max() < 1e-14
    assert chain.pi.sum() == pytest.approx(1.0)


def test_nearly_decomposable_chain():
    eps = 1e-10
    Q = np.array([[1 - eps, eps], [eps, 1 - eps]])
    assert finite_stationary(Q) == pytest.approx([0.5, 0.5], abs=1e-15)


@pytest.mark.parametrize("Q", [
    [[1.0, 0.0], [0.0, 1.0]],
    [[0.5, 0.6], [0.5, 0.5]],
    [[0.5, 0.5, 0.0]],
    [[1.2, -0.2], [0.5, 0.5]],
])
def test_invalid_transition_matrices(Q):
    with pytest.raises(InputValidationError):
        finite_stationary(np.array(Q))


def test_drift_function_below_e_rejected():
    with pytest.raises(InputValidationError):
        FiniteChain([[0.5, 0.5], [0.5, 0.5]], V=[1.0, math.e])


def test_certify_drift_with_target_lambda(chain):
    fit = certify_drift(chain, target_lambda=0.5)
    assert fit.b == pytest.approx(0.2 * math.e + 0.3 * math.e ** 3)
    assert fit.witness == 1
    with pytest.raises(InputValidationError):
        certify_drift(chain, target_lambda=1.0)


def test_certify_reference(chain):
    cert = certify(chain)
    assert cert.m == 1
    # C covers both states: eps = min(0.9, 0.2) + min(0.1, 0.8)
    assert cert.eps == pytest.approx(0.3)
    assert cert.d >= math.e ** 3
    assert cert.pi_V == pytest.approx(chain.pi_V)
    cert.validate()
    rate = geometric_rate(cert)
    assert 0 < rate.rho < 1


def test_certify_small_set(chain):
    small = certify_small_set(chain, 1, 3.0)
    assert list(small.small_set) == [0]
    assert small.eps == pytest.approx(1.0)
    assert small.nu == pytest.approx([0.9, 0.1])
    with pytest.raises(InputValidationError):
        certify_small_set(chain, 1, 1.0)


def test_certify_fails_without_minorization():
    # Q^m is a permutation for every m, so no two rows share mass
    chain = FiniteChain([[0.0, 1.0], [1.0, 0.0]], V=[math.e, math.e])
    with pytest.raises(CertificationFailure) as excinfo:
        certify(chain, max_m=4)
    assert 'lambda' in excinfo.value.best_attempt


def test_certify_coupling_reference(chain):
    kappa, eps = certify_coupling(chain, 1, 25.0)
    assert kappa == 1.0
    # copies started apart meet with probability 0.9 * 0.2 + 0.1 * 0.8
    assert eps == pytest.approx(0.26)


def test_certify_coupling_single_state_set(chain):
    kappa, eps = certify_coupling(chain, 1, 3.0)
    assert eps == EPS_CEILING


def test_certify_wasserstein_and_contraction(chain):
    cert = certify_wasserstein(chain)
    assert cert.kappa_K == 1.0
    rate = contraction_rate(cert, chain.pi_V)
    passed, worst = coupling_contraction_check(chain, rate, q=2, p=2, n_max=12)
    assert passed
    assert worst <= 1.0
    with pytest.raises(InputValidationError):
        coupling_contraction_check(chain, rate, q=1, p=3, n_max=3)


def test_pair_kernel(chain):
    K = chain.pair_kernel()
    assert K.sum(axis=1) == pytest.approx(np.ones(4))
    # a met pair stays met
    assert K[0, 0] == pytest.approx(0.9)
    assert K[0, 3] == pytest.approx(0.1)
    assert K[0, 1] == 0.0


def test_norms(chain):
    g_bar = chain.g_bar
    assert chain.v_norm(g_bar, 0.5) == pytest.approx(max(1 / math.sqrt(math.e), 2 / math.e ** 1.5))
    assert chain.w_norm(g_bar, 1.0) == pytest.approx(1.0)
    assert chain.wass_norm(g_bar, 0.25) >= chain.v_norm(g_bar, 0.25)
    with pytest.raises(InputValidationError):
        chain.wass_norm(g_bar, 0.25, weight='X')


def test_simulation_preserves_stationarity(chain, rng):
    states = chain.initial_states(20000, rng)
    for _ in range(5):
        states = chain.step(states, rng)
    assert np.mean(states == 1) == pytest.approx(1 / 3, abs=0.02)


def test_initial_state_and_coupling(chain, rng):
    states = chain.initial_states(10, rng, init=1)
    assert np.all(states == 1)
    x, y = chain.coupled_step(np.array([0, 1, 1]), np.array([0, 0, 1]), rng)
    assert x[0] == y[0]
    assert x[2] == y[2]
    assert chain.cost(np.array([0, 1]), np.array([0, 0])) == pytest.approx([0.0, 1.0])


def test_simulated_sums_match_exact_variance(chain, rng):
    sums = chain.simulate_sums(chain.observable(), 10, 40000, rng)
    exact = sum(2.0 * 0.7 ** abs(i - j) for i in range(10) for j in range(10))
    assert np.var(sums) == pytest.approx(exact, rel=0.05)


def test_random_chain_is_reproducible():
    first = random_certified_chain(np.random.default_rng(42), 5)
    second = random_certified_chain(np.random.default_rng(42), 5)
    assert np.array_equal(first.Q, second.Q)
    assert np.all(first.V >= math.e)
    certify(first).validate()
