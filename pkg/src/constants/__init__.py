"""
Ergodicity and contraction constants for ChainBound
"""
from .vgeom import (
    EnvelopeConstants,
    drift_intermediates,
    geometric_rate,
    mixing_bound,
    valpha_deviation,
    variance_upper,
    resolve_pi_V,
    envelope_constants_v,
    cumulant_envelope,
    mixing_time_scaling,
)
from .wasserstein import (
    delta_star,
    check_monotone_bracketing,
    contraction_rate,
    wasser_mixing_bound,
    coupling_contraction_factor,
    envelope_constants_w,
    sup_log_power,
)

__all__ = [
    'EnvelopeConstants',
    'drift_intermediates',
    'geometric_rate',
    'mixing_bound',
    'valpha_deviation',
    'variance_upper',
    'resolve_pi_V',
    'envelope_constants_v',
    'cumulant_envelope',
    'mixing_time_scaling',
    'delta_star',
    'check_monotone_bracketing',
    'contraction_rate',
    'wasser_mixing_bound',
    'coupling_contraction_factor',
    'envelope_constants_w',
    'sup_log_power',
]
