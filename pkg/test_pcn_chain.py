#!/usr/bin/env python3
"""
Tests for the pCN chain and its Monte Carlo certified constants
"""
import math
import os
import sys

import numpy as np
import pytest

# Add src to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

from src.chains import PcnChain, PcnModel, pcn_constants
from src.chains.pcn_chain import BallMeasure
from src.constants import contraction_rate, geometric_rate
from src.errors import BudgetExceededError, InputValidationError
from src.services.acceptance_suite import drift_points

# P(|Z| <= r) = 3/4 for a standard Gaussian
GAUSSIAN_QUARTER_RADIUS = 1.1503


def test_model_defaults():
    model = PcnModel()
    assert model.cov_spectrum == [1.0]
    assert model.beta == pytest.approx(math.sqrt(0.99))
    assert model.lipschitz == 0.0
    assert PcnModel(dim=3).cov_spectrum == pytest.approx([1.0, 0.25, 1 / 9])


@pytest.mark.parametrize("fields", [
    dict(rho_H=1.0),
    dict(potential='cubic'),
    dict(a=0.5),
    dict(dim=2, cov_spectrum=[1.0]),
    dict(cov_spectrum=[-1.0]),
])
def test_invalid_models(fields):
    with pytest.raises(InputValidationError):
        PcnModel(**fields).validate()


def test_potentials():
    states = np.array([[0.0], [2.0]])
    assert PcnModel(potential='quadratic').phi(states) == pytest.approx([0.0, 2.0])
    assert PcnModel(potential='lipschitz', potential_scale=0.5).phi(states) == pytest.approx(
        [0.5, 0.5 * math.sqrt(5)])
    assert PcnModel(potential='lipschitz', potential_scale=0.5).lipschitz == 0.5


def test_zero_potential_always_accepts(rng):
    chain = PcnChain(PcnModel())
    states = rng.normal(size=(100, 1))
    z = rng.normal(size=(100, 1))
    assert np.all(chain.acceptance_probability(states, z) == 1.0)


def test_synchronous_coupling_zero_potential(rng):
    chain = PcnChain(PcnModel())
    x, y = chain.coupled_step(np.array([[1.0]]), np.array([[0.0]]), rng)
    assert (x - y)[0, 0] == pytest.approx(0.1)
    assert chain.cost(x, y)[0] == pytest.approx(0.1)


def test_lyapunov_is_at_least_e(rng):
    chain = PcnChain(PcnModel(dim=2))
    assert np.all(chain.lyapunov(rng.normal(size=(50, 2))) >= math.e)


def test_observable():
    chain = PcnChain(PcnModel())
    g, norm, gamma, _ = chain.observable()
    assert g(np.array([[0.0]]))[0] == 0.0
    assert (norm, gamma) == (2.0, 0.0)
    with pytest.raises(InputValidationError):
        chain.observable('linear')


def test_ball_measure_quantile(rng):
    measure = BallMeasure(PcnModel(), 200_000, rng, 0.999)
    tau = measure.quantile_radius(0.75)
    assert tau > GAUSSIAN_QUARTER_RADIUS - 0.01
    assert tau == pytest.approx(GAUSSIAN_QUARTER_RADIUS, abs=0.02)
    assert measure.lower(tau) >= 0.75
    small = BallMeasure(PcnModel(), 100, rng, 0.999)
    with pytest.raises(BudgetExceededError):
        small.quantile_radius(0.99)


def test_constants_zero_potential():
    constants = pcn_constants(PcnModel(), seed=5)
    assert constants.tau == pytest.approx(GAUSSIAN_QUARTER_RADIUS, abs=0.01)
    assert constants.eps_H == 1.0
    assert constants.p1 == 1.0
    assert constants.drift.m >= 1
    assert set(constants.measures) == set(constants.directions)
    assert 0 < geometric_rate(constants.drift).rho < 1
    assert 0 < contraction_rate(constants.coupling, math.e).varrho < 1


def test_constants_are_reproducible():
    first = pcn_constants(PcnModel(), mc_budget=20_000, seed=9)
    second = pcn_constants(PcnModel(), mc_budget=20_000, seed=9)
    assert first.to_dict() == second.to_dict()


def test_constants_reject_quadratic_potential_and_small_budget():
    with pytest.raises(InputValidationError):
        pcn_constants(PcnModel(potential='quadratic'))
    with pytest.raises(BudgetExceededError):
        pcn_constants(PcnModel(), mc_budget=50)


def test_posterior_variance():
    model = PcnModel(potential='quadratic')
    assert model.posterior_variance() == pytest.approx([0.5])
    with pytest.raises(InputValidationError):
        PcnModel().posterior_variance()


@pytest.mark.slow
def test_quadratic_posterior_is_sampled(rng):
    model = PcnModel(potential='quadratic', rho_H=0.5, burn_in=300)
    chain = PcnChain(model)
    states = chain.initial_states(20000, rng)
    for _ in range(20):
        states = chain.step(states, rng)
    assert np.var(states[:, 0]) == pytest.approx(0.5, abs=0.03)
    assert abs(np.mean(states[:, 0])) < 0.03


@pytest.fixture(scope="module")
def lipschitz_model():
    return PcnModel(potential='lipschitz', potential_scale=0.1)


@pytest.fixture(scope="module")
def lipschitz_constants(lipschitz_model):
    return pcn_constants(lipschitz_model, mc_budget=100_000, seed=5)


def test_constants_lipschitz_potential(lipschitz_constants):
    constants = lipschitz_constants
    # acceptance radius (2 r_bar / (1 - rho_H))^{1/(1-a)} = 1, so p1 = exp(-2 L (2 + 1))
    assert constants.p1 == pytest.approx(math.exp(-0.6))
    assert constants.eps_H == pytest.approx(min(1.0, constants.contraction_gamma / 0.2))
    assert constants.eps_H < 1.0
    assert constants.drift.m >= 1
    assert 0 < geometric_rate(constants.drift).rho < 1
    assert 0 < contraction_rate(constants.coupling, math.e).varrho < 1


def test_lipschitz_coupling_is_random(rng):
    chain = PcnChain(PcnModel(potential='lipschitz', potential_scale=0.5), eps_H=0.5)
    x, y = chain.coupled_step(np.full((5000, 1), 0.5), np.zeros((5000, 1)), rng)
    diff = np.abs((x - y)[:, 0])
    # both accept: rho_H * 0.5; both reject: 0.5; otherwise the copies separate
    both_accept = np.isclose(diff, 0.05)
    assert both_accept.mean() > 0.5
    assert not both_accept.all()
    assert len(np.unique(np.round(diff[~both_accept], 9))) > 2


def test_lipschitz_coupling_cost_contracts(lipschitz_model, lipschitz_constants, rng):
    chain = PcnChain(lipschitz_model, eps_H=lipschitz_constants.eps_H)
    x0 = np.full((20000, 1), 0.5)
    y0 = np.zeros((20000, 1))
    c0 = float(chain.cost(x0[:1], y0[:1])[0])
    m = lipschitz_constants.coupling.m
    costs = chain.coupled_costs(x0, y0, m, rng)
    assert costs.mean() <= (1 - lipschitz_constants.coupling.eps) * c0


def test_drift_inside_and_outside_ball(lipschitz_model, lipschitz_constants, rng):
    chain = PcnChain(lipschitz_model, eps_H=lipschitz_constants.eps_H)
    drift = lipschitz_constants.drift
    points = drift_points(np.zeros(1), lipschitz_constants.R, 10, rng)
    radii = np.linalg.norm(points, axis=1)
    assert (radii < lipschitz_constants.R).any() and (radii > lipschitz_constants.R).any()
    for x0 in points:
        values = chain.lyapunov(chain.step(np.tile(x0, (5000, 1)), rng))
        assert values.mean() <= drift.lam * float(chain.lyapunov(x0[None, :])[0]) + drift.b
