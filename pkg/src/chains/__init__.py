"""
Chain models: finite-state chains, constant-stepsize SGD and pCN
"""
from .base_chain import BaseChain, Observable
from .finite_chain import (
    FiniteChain,
    finite_stationary,
    certify,
    certify_drift,
    certify_small_set,
    certify_coupling,
    certify_wasserstein,
    coupling_contraction_check,
    random_certified_chain,
)
from .sgd_chain import SgdModel, SgdChain, SgdConstants, sgd_constants, bias_bound, sgd_polyak_ruppert
from .pcn_chain import PcnModel, PcnChain, PcnConstants, pcn_constants

# model name -> (parameter dataclass or None, chain class)
CHAIN_MODELS = {
    'finite': (None, FiniteChain),
    'sgd': (SgdModel, SgdChain),
    'pcn': (PcnModel, PcnChain),
}

__all__ = [
    'BaseChain',
    'Observable',
    'FiniteChain',
    'finite_stationary',
    'certify',
    'certify_drift',
    'certify_small_set',
    'certify_coupling',
    'certify_wasserstein',
    'coupling_contraction_check',
    'random_certified_chain',
    'SgdModel',
    'SgdChain',
    'SgdConstants',
    'sgd_constants',
    'bias_bound',
    'sgd_polyak_ruppert',
    'PcnModel',
    'PcnChain',
    'PcnConstants',
    'pcn_constants',
    'CHAIN_MODELS',
]
