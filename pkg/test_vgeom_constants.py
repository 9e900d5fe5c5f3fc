#!/usr/bin/env python3
"""
Tests for the V-geometric ergodicity constants
"""
import math
import os
import sys

import numpy as np
import pytest

# Add src to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

from src.chains import certify, random_certified_chain
from src.constants import (
    cumulant_envelope,
    drift_intermediates,
    envelope_constants_v,
    geometric_rate,
    mixing_bound,
    mixing_time_scaling,
    resolve_pi_V,
    valpha_deviation,
    variance_upper,
)
from src.cumulants import exact_variance, v_norm_distance, v_norm_distances
from src.errors import CertificateInvalidError, InputValidationError
from src.models import DriftCertificate
from src.services.acceptance_suite import reference_chain


def test_drift_intermediates():
    lambda_bar, b_m, b_bar = drift_intermediates(0.5, 1.0, 9.0, 1)
    assert lambda_bar == pytest.approx(0.7)
    assert b_m == pytest.approx(1.0)
    assert b_bar == pytest.approx(9.5)


def test_drift_intermediates_two_steps():
    lambda_bar, b_m, b_bar = drift_intermediates(0.5, 1.0, 9.0, 2)
    assert b_m == pytest.approx(1.5)
    assert lambda_bar == pytest.approx(0.25 + 0.3)
    assert b_bar == pytest.approx(0.25 * 1.5 + 9.0)


def test_geometric_rate_reference(drift_certificate):
    rate = geometric_rate(drift_certificate)
    assert rate.rho == pytest.approx(0.927843, abs=1e-5)
    assert rate.c == pytest.approx(104.005, rel=1e-4)
    assert rate.log_rho == pytest.approx(math.log(rate.rho))
    assert rate.m == 1


def test_geometric_rate_worsens_with_smaller_eps(drift_certificate):
    weaker = DriftCertificate(lam=0.5, b=1.0, d=9.0, m=1, eps=0.2)
    assert geometric_rate(weaker).rho > geometric_rate(drift_certificate).rho


@pytest.mark.parametrize("fields,inequality", [
    (dict(lam=1.2, b=1.0, d=9.0, m=1, eps=0.5), "0 < lambda < 1"),
    (dict(lam=0.5, b=3.0, d=9.0, m=1, eps=0.5), "lambda + 2b/(1+d) < 1"),
    (dict(lam=0.5, b=1.0, d=9.0, m=0, eps=0.5), "m >= 1 integer"),
    (dict(lam=0.5, b=1.0, d=9.0, m=1, eps=1.0), "0 < eps < 1"),
    (dict(lam=0.5, b=1.0, d=9.0, m=1, eps=0.5, pi_V=2.0), "pi(V) >= e"),
])
def test_invalid_certificates(fields, inequality):
    with pytest.raises(CertificateInvalidError) as excinfo:
        geometric_rate(DriftCertificate(**fields))
    assert excinfo.value.inequality == inequality


def test_pi_V_upper_check():
    # b >= e (1 - lambda), so pi(V) must not exceed b/(1-lambda) = 4
    cert = DriftCertificate(lam=0.5, b=2.0, d=49.0, m=1, eps=0.5, pi_V=5.0)
    with pytest.raises(CertificateInvalidError):
        cert.validate()


def test_resolve_pi_V():
    assert resolve_pi_V(4.0, 0.5, 1.0) == (4.0, "exact")
    assert resolve_pi_V(None, 0.5, 1.0) == (pytest.approx(math.e), "drift-fallback")
    assert resolve_pi_V(None, 0.5, 3.0) == (pytest.approx(6.0), "drift-fallback")


def test_valpha_deviation_decreases(drift_certificate):
    rate = geometric_rate(drift_certificate)
    values = [valpha_deviation(rate, math.e, 0.5, math.e ** 3, n) for n in (0, 10, 100)]
    assert values[0] > values[1] > values[2]
    expected = 2 * math.sqrt(rate.c * rate.rho ** 10 * math.e * math.e ** 3)
    assert values[1] == pytest.approx(expected)


def test_valpha_deviation_rejects_alpha():
    rate = geometric_rate(DriftCertificate(lam=0.5, b=1.0, d=9.0, m=1, eps=0.5))
    with pytest.raises(InputValidationError):
        valpha_deviation(rate, math.e, 1.5, math.e, 1)


def test_valpha_deviation_dominates_finite_chain(chain):
    cert = chain.certify()
    rate = geometric_rate(cert)
    pi_V = chain.pi_V
    for n in (1, 5, 20):
        distance = v_norm_distance(chain, n, 1)
        assert distance <= valpha_deviation(rate, pi_V, 1.0, chain.V[1], n)


def test_variance_upper(drift_certificate):
    rate = geometric_rate(drift_certificate)
    assert variance_upper(0, rate, math.e, 1.0) == 0.0
    assert variance_upper(20, rate, math.e, 1.0) == pytest.approx(2 * variance_upper(10, rate, math.e, 1.0))


def test_envelope_constants(drift_certificate):
    rate = geometric_rate(drift_certificate)
    plain = envelope_constants_v(rate, math.e)
    assert plain.D == pytest.approx(2 * rate.c * math.e)
    assert plain.alpha == 0.0
    assert plain.rho_star == pytest.approx(math.sqrt(rate.rho))
    limit = envelope_constants_v(rate, math.e, gamma=0.0)
    assert limit.D == pytest.approx(plain.D)
    weighted = envelope_constants_v(rate, math.e, gamma=1.0)
    assert weighted.D == pytest.approx(4 * rate.c * math.e)
    assert weighted.alpha == 1.0


def test_cumulant_envelope(drift_certificate):
    env = envelope_constants_v(geometric_rate(drift_certificate), math.e)
    with pytest.raises(InputValidationError):
        cumulant_envelope(1, 10, env, 1.0)
    assert cumulant_envelope(3, 10, env, 0.0) == 0.0
    assert cumulant_envelope(3, 20, env, 1.0) == pytest.approx(2 * cumulant_envelope(3, 10, env, 1.0))


def test_mixing_time_scaling():
    assert mixing_time_scaling(1.0, math.exp(-1.0)) == 2
    assert mixing_time_scaling(2.0, math.exp(-1.0)) == 4


def certified_chains():
    rng = np.random.default_rng(3)
    return [reference_chain()] + [random_certified_chain(rng, int(rng.integers(2, 6)), model_id=f"r{i}")
                                  for i in range(6)]


def test_mixing_bound_dominates_finite_chains():
    for chain in certified_chains():
        cert = certify(chain)
        rate = geometric_rate(cert)
        for x in range(chain.n_states):
            V_x = float(chain.V[x])
            distances = v_norm_distances(chain, 40, x)
            bounds = [mixing_bound(rate, cert.pi_V, V_x, n) for n in range(41)]
            assert np.all(distances <= np.asarray(bounds))
            # tighter than the V-norm deviation bound since (V(x) + pi(V)) / 2 <= pi(V) V(x)
            assert bounds[10] <= valpha_deviation(rate, cert.pi_V, 1.0, V_x, 10)


def test_mixing_bound_formula(drift_certificate):
    rate = geometric_rate(drift_certificate)
    assert mixing_bound(rate, math.e, math.e ** 3, 4) == pytest.approx(
        rate.c * (math.e ** 3 + math.e) * rate.rho ** 4)
    with pytest.raises(InputValidationError):
        mixing_bound(rate, math.e, math.e, -1)


@pytest.mark.parametrize("alpha", [0.25, 0.5])
def test_valpha_deviation_dominates_for_fractional_alpha(alpha):
    for chain in certified_chains():
        cert = certify(chain)
        rate = geometric_rate(cert)
        for x in range(chain.n_states):
            distances = v_norm_distances(chain, 40, x, alpha)
            bounds = [valpha_deviation(rate, cert.pi_V, alpha, float(chain.V[x]), n) for n in range(41)]
            assert np.all(distances <= np.asarray(bounds))


def test_variance_upper_dominates_exact_variance():
    for chain in certified_chains():
        cert = certify(chain)
        rate = geometric_rate(cert)
        norm = chain.v_norm(chain.g_bar, 0.5)
        for n in range(1, 51):
            assert exact_variance(chain, chain.g, n) <= variance_upper(n, rate, cert.pi_V, norm)
