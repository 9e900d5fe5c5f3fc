#!/usr/bin/env python3
"""
Tests for the Wasserstein contraction constants
"""
import math
import os
import sys

import numpy as np
import pytest

# Add src to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

from src.constants import (
    check_monotone_bracketing,
    contraction_rate,
    coupling_contraction_factor,
    delta_star,
    envelope_constants_w,
    sup_log_power,
    wasser_mixing_bound,
)
from src.errors import CertificateInvalidError, InputValidationError
from src.models import WassCertificate
from src.services.acceptance_suite import quadratic_delta_star


def test_delta_star_reference(wass_certificate):
    root, residual = delta_star(wass_certificate)
    # root of delta^2 + 2.3 delta - 1.5
    assert root == pytest.approx((-2.3 + math.sqrt(2.3 ** 2 + 6.0)) / 2, abs=1e-10)
    assert residual < 1e-12


def test_delta_star_matches_closed_form(wass_certificate):
    root, _ = delta_star(wass_certificate)
    assert root == pytest.approx(quadratic_delta_star(wass_certificate), rel=1e-10)


@pytest.mark.parametrize("lam,b,d,eps", [
    (0.3, 2.0, 20.0, 0.2),
    (0.8, 1.0, 30.0, 0.05),
    (0.5, 4.0, 50.0, 0.4),
])
def test_delta_star_closed_form_grid(lam, b, d, eps):
    cert = WassCertificate(lam=lam, b=b, d=d, m=1, eps=eps)
    root, _ = delta_star(cert)
    assert root == pytest.approx(quadratic_delta_star(cert), rel=1e-9, abs=1e-12)


def test_delta_star_degenerate_branch():
    cert = WassCertificate(lam=0.5, b=1.0, d=9.0, m=1, eps=0.9)
    root, _ = delta_star(cert)
    assert root == 0.0
    assert contraction_rate(cert, math.e).degenerate


def test_delta_star_rejects_invalid_certificate():
    with pytest.raises(CertificateInvalidError):
        delta_star(WassCertificate(lam=0.5, b=1.0, d=9.0, m=1, eps=0.5, kappa_K=0.5))


def test_contraction_rate_reference(wass_certificate):
    rate = contraction_rate(wass_certificate, math.e)
    assert rate.varrho == pytest.approx(0.85368, abs=1e-4)
    assert rate.c_K == pytest.approx(2.2009, abs=1e-3)
    assert rate.zeta == pytest.approx(math.sqrt(math.e) * rate.c_K / math.sqrt(2))
    assert rate.C1 == pytest.approx(2 * math.sqrt(2) * rate.c_K * math.sqrt(math.e))
    assert not rate.degenerate
    assert rate.d_bar == pytest.approx(5.0)


def test_monotone_bracketing(wass_certificate):
    assert check_monotone_bracketing(wass_certificate)
    with pytest.raises(InputValidationError):
        check_monotone_bracketing(WassCertificate(lam=0.5, b=0.5, d=9.0, m=1, eps=0.5))


def test_monotone_bracketing_custom_grid(wass_certificate):
    assert check_monotone_bracketing(wass_certificate, grid=np.linspace(0.0, 10.0, 11))


def test_wasser_mixing_bound_decreases(wass_certificate):
    rate = contraction_rate(wass_certificate, math.e)
    values = [wasser_mixing_bound(rate, 1.0, 1, n, 2.0, 1.5) for n in (0, 5, 50)]
    assert values[0] > values[1] > values[2]
    assert values[0] == pytest.approx(rate.c_K * 3.5 / math.sqrt(2))
    with pytest.raises(InputValidationError):
        wasser_mixing_bound(rate, 1.0, 1, -1, 2.0, 1.5)


def test_coupling_contraction_factor(wass_certificate):
    rate = contraction_rate(wass_certificate, math.e)
    assert coupling_contraction_factor(rate, 2, 4, 0) == pytest.approx(rate.c_K)
    assert coupling_contraction_factor(rate, 2, 4, 3) == pytest.approx(rate.c_K * rate.varrho ** 3)


def test_envelope_constants_w(wass_certificate):
    rate = contraction_rate(wass_certificate, math.e)
    plain = envelope_constants_w(rate)
    assert plain.D == pytest.approx(4 * rate.zeta)
    assert plain.rho_star == pytest.approx(math.sqrt(rate.varrho))
    weighted = envelope_constants_w(rate, gamma=1.0)
    assert weighted.D == pytest.approx(16 * rate.zeta)


def test_sup_log_power():
    a_star, value = sup_log_power(1.0)
    assert a_star == pytest.approx(math.e)
    assert value == pytest.approx(1 / math.e)
    grid = np.geomspace(math.e, 1e8, 20000)
    assert np.max(np.log(grid) / grid ** 0.25) == pytest.approx(sup_log_power(0.25)[1], rel=1e-6)
    with pytest.raises(InputValidationError):
        sup_log_power(0.0)
