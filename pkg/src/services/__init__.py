"""
Services module for ChainBound
"""
from .certification_service import CertificationService, CertifiedModel, NONSTATIONARY_THEOREMS, THEOREM_NORMS
from .acceptance_suite import AcceptanceSuite, CriterionResult, CRITERIA, reference_chain

__all__ = [
    'CertificationService',
    'CertifiedModel',
    'NONSTATIONARY_THEOREMS',
    'THEOREM_NORMS',
    'AcceptanceSuite',
    'CriterionResult',
    'CRITERIA',
    'reference_chain',
]
