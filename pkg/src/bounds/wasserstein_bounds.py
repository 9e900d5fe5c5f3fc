"""
Moment and tail bounds for chains contracting in a Wasserstein semi-metric
"""
import logging
import math

from ..constants.wasserstein import sup_log_power
from ..errors import InputValidationError
from ..models import BoundInputs, BoundReport, LogValue, NormKind, WassRate
from .common import (
    GAMMA0_FLAG,
    exp_term,
    make_report,
    radius,
    require_norm,
    require_variance,
    rosenthal_kernel,
)
from .vgeom_bounds import bernstein_tail

logger = logging.getLogger(__name__)

W_MODES = ('T6', 'T7', 'T8', 'T9')

MODE_NORMS = {
    'T6': NormKind.WASS_V,
    'T7': NormKind.WASS_V,
    'T8': NormKind.WASS_W_GAMMA,
    'T9': NormKind.WASS_W_GAMMA,
}


def _wass(inputs: BoundInputs, theorem_id: str) -> WassRate:
    if not isinstance(inputs.rate, WassRate):
        raise InputValidationError(f"{theorem_id} needs a WassRate, got {type(inputs.rate).__name__}")
    return inputs.rate


def _start_sqrt(inputs: BoundInputs, theorem_id: str) -> float:
    if inputs.xi_sqrtV is None or inputs.pi_sqrtV is None:
        raise InputValidationError(f"{theorem_id} needs xi(V^(1/2)) and pi(V^(1/2))")
    return inputs.xi_sqrtV + inputs.pi_sqrtV


def d2_constant(rate: WassRate, q: int, gamma: float, start_sqrt: float) -> LogValue:
    """kappa^{m/2} c_K (xi + pi)(V^{1/2}) varrho^{-1} [(2 sqrt2 / log(1/varrho))^{4q} (4q-1)! + (8 q gamma/e)^{4 q gamma} / log(1/varrho)]"""
    log_l = math.log(rate.log_inv_varrho)
    first = LogValue(1, 4 * q * (1.5 * math.log(2.0) - log_l) + math.lgamma(4 * q))
    power = 4 * q * gamma
    log_gamma_part = power * (math.log(8 * q * gamma) - 1.0) if gamma > 0 else 0.0
    second = LogValue(1, log_gamma_part - log_l)
    log_prefactor = ((rate.m / 2) * math.log(rate.kappa_K) + math.log(rate.c_K)
                     + math.log(start_sqrt) - rate.log_varrho)
    return LogValue(1, log_prefactor) * (first + second)


def rosenthal_w_family(mode: str, inputs: BoundInputs) -> BoundReport:
    """
    Wasserstein-family moment bounds

    Args:
        mode: 'T6' / 'T8' stationary (N_{1/(4q),V} / N_{1,W^gamma} classes),
              'T7' / 'T9' their arbitrary-initial-law extensions
        inputs: BoundInputs with a WassRate
    """
    if mode not in W_MODES:
        raise InputValidationError(f"unknown Wasserstein mode {mode}")
    require_norm(inputs, MODE_NORMS[mode], mode)
    rate = _wass(inputs, mode)
    var_Sn = require_variance(inputs, mode)
    q = inputs.q
    with_gamma = mode in ('T8', 'T9')
    gamma = inputs.gamma if with_gamma else 0.0
    value, terms = rosenthal_kernel(q, inputs.n, var_Sn, rate.C1, inputs.norm_g, gamma,
                                    rate.log_varrho, with_gamma_factor=with_gamma)
    if mode in ('T6', 'T8'):
        return make_report(mode, inputs, value, terms)

    start = _start_sqrt(inputs, mode)
    scaled = LogValue(1, (2 * q - 1) * math.log(2.0)) * value
    norm_part = LogValue.from_float(inputs.norm_g) ** (2 * q)
    if mode == 'T7':
        log_extra = ((4 * q - 1) * math.log(2.0) + (rate.m / 2) * math.log(rate.kappa_K)
                     + math.log(rate.c_K) + math.log(start) + 2 * q * math.log(q)
                     - rate.log_varrho - 2 * q * math.log(rate.log_inv_varrho))
        extra = LogValue(1, log_extra) * norm_part
    else:
        extra = (LogValue(1, (2 * q - 1) * math.log(2.0)) * norm_part
                 * d2_constant(rate, q, inputs.gamma, start))
    return make_report(mode, inputs, scaled + extra, {'stationary': scaled, 'initial': extra})


def bernstein_constant_w(inputs: BoundInputs) -> float:
    """
    J_tilde = max(n varrho^{-1/2} log(1/varrho)^{-1} C_1^2 (2 gamma)^{4 gamma} N^2 / Var, 1) * 2 (2 gamma)^{2 gamma} C_1 N / log(1/varrho)
    """
    rate = _wass(inputs, 'J_tilde')
    gamma = inputs.gamma
    log_inv = rate.log_inv_varrho
    two_gamma = 2 * gamma
    inner_gamma = two_gamma ** (4 * gamma) if gamma > 0 else 1.0
    outer_gamma = two_gamma ** (2 * gamma) if gamma > 0 else 1.0
    scale = rate.varrho ** -0.5 / log_inv * rate.C1 ** 2 * inner_gamma * inputs.norm_g ** 2
    if inputs.f_min is not None:
        if inputs.f_min <= 0:
            raise InputValidationError(f"f_min must be > 0, got {inputs.f_min}")
        ratio = scale / inputs.f_min
    else:
        var_Sn = require_variance(inputs, 'J_tilde')
        if var_Sn == 0:
            raise InputValidationError("J_tilde is undefined for var_Sn = 0")
        ratio = inputs.n * scale / var_Sn
    return max(ratio, 1.0) * 2 * outer_gamma * rate.C1 * inputs.norm_g / log_inv


def bernstein_tail_w(t: float, inputs: BoundInputs) -> BoundReport:
    """Stationary tail bound for g in the N_{1,W^gamma} class"""
    require_norm(inputs, NormKind.WASS_W_GAMMA, 'T10')
    var_Sn = require_variance(inputs, 'T10')
    report = bernstein_tail(t, var_Sn, bernstein_constant_w(inputs), inputs.gamma, 'T10', inputs)
    if inputs.f_min is not None:
        report.flags.append('f_min-route')
    return report


def nonstationary_tail_w(t: float, inputs: BoundInputs) -> BoundReport:
    """
    Tail bound from an arbitrary initial law xi in the Wasserstein setting

    P_pi(|S_n| >= t/2) plus two exponential terms, the second one read as its
    gamma -> 0 limit when gamma = 0.
    """
    if t < 0:
        raise InputValidationError(f"t must be >= 0, got {t}")
    stationary = bernstein_tail_w(t / 2, inputs)
    rate = _wass(inputs, 'T11')
    gamma = inputs.gamma
    start = _start_sqrt(inputs, 'T11')
    varpi = 1.0 / (1.0 + gamma)
    upsilon = min(1.0, 1.0 / (2 * gamma)) if gamma > 0 else 1.0
    norm_g = inputs.norm_g
    coupling_mass = rate.kappa_K ** (rate.m / 2) * rate.c_K * start
    quarter = rate.varrho ** 0.25
    flags = []

    first_factor = 1 + (rate.log_inv_varrho / 4) * math.sqrt(coupling_mass) / (quarter * (1 - quarter))
    first = exp_term(math.log(first_factor),
                     rate.log_inv_varrho / (2.0 ** (3 + varpi) * varpi), t, norm_g, varpi)

    _, sup_value = sup_log_power(upsilon / 4)
    second_factor = 1 + upsilon * sup_value * coupling_mass ** upsilon / (1 - rate.varrho ** upsilon)
    if gamma > 0:
        second = exp_term(math.log(second_factor),
                          (1 + gamma) * upsilon / (2.0 ** (5 + varpi) * gamma), t, norm_g, varpi)
    else:
        second = exp_term(math.log(second_factor), math.inf, t, norm_g, varpi)
        flags.append(GAMMA0_FLAG)
        logger.debug("nonstationary_tail_w: gamma = 0, second exponential taken as its limit")

    stationary_part = LogValue.from_float(stationary.clamped)
    return make_report('T11', inputs, stationary_part + first + second,
                       {'stationary': stationary_part, 'coupling': first, 'drift': second},
                       t=t, flags=flags)


def deviation_radius_w(delta: float, inputs: BoundInputs) -> float:
    """High-probability radius with the Wasserstein constant J_tilde"""
    var_Sn = require_variance(inputs, 'HP-radius')
    return radius(delta, var_Sn, bernstein_constant_w(inputs), inputs.gamma)
