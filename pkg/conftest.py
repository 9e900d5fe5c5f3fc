"""
Shared fixtures for the ChainBound tests
"""
import math
import os
import sys

import numpy as np
import pytest

# Add src to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

from src.chains import SgdModel
from src.models import DriftCertificate, WassCertificate
from src.services.acceptance_suite import REFERENCE_SGD, reference_chain


@pytest.fixture
def chain():
    """Two-state chain Q = [[0.9, 0.1], [0.2, 0.8]], V = (e, e^3), g = (1, -2)"""
    return reference_chain()


@pytest.fixture
def drift_certificate():
    return DriftCertificate(lam=0.5, b=1.0, d=9.0, m=1, eps=0.5, pi_V=math.e)


@pytest.fixture
def wass_certificate():
    return WassCertificate(lam=0.5, b=1.0, d=9.0, m=1, eps=0.5, pi_V=math.e)


@pytest.fixture
def sgd_model():
    return SgdModel(**REFERENCE_SGD)


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)
