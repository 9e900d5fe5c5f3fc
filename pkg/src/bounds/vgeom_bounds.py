"""
Moment and tail bounds for V-geometrically ergodic chains
"""
import logging
import math
from typing import Dict, Optional, Sequence

from ..constants.vgeom import mixing_time_scaling, variance_upper
from ..errors import InputValidationError
from ..models import BoundInputs, BoundReport, GeomRate, LogValue, NormKind, VarianceProvenance
from .common import (
    GAMMA0_FLAG,
    bernstein_log_value,
    exp_term,
    make_report,
    radius,
    require_norm,
    require_variance,
    rosenthal_kernel,
)

logger = logging.getLogger(__name__)


def _geom(inputs: BoundInputs, theorem_id: str) -> GeomRate:
    if not isinstance(inputs.rate, GeomRate):
        raise InputValidationError(f"{theorem_id} needs a GeomRate, got {type(inputs.rate).__name__}")
    if inputs.pi_V is None:
        raise InputValidationError(f"{theorem_id} needs pi(V); resolve it with resolve_pi_V first")
    return inputs.rate


def _require_start(inputs: BoundInputs, theorem_id: str) -> float:
    if inputs.xi_V is None:
        raise InputValidationError(f"{theorem_id} needs xi(V) of the initial law")
    return inputs.xi_V + inputs.pi_V


def c0(rate: GeomRate, pi_V: float) -> float:
    """C_0 = 2 c pi(V)"""
    return 2.0 * rate.c * pi_V


def rosenthal_v(inputs: BoundInputs) -> BoundReport:
    """Stationary 2q-th moment bound for g in L_{V^{1/(2q)}}"""
    require_norm(inputs, NormKind.V_POWER, 'T1')
    rate = _geom(inputs, 'T1')
    var_Sn = require_variance(inputs, 'T1')
    value, terms = rosenthal_kernel(inputs.q, inputs.n, var_Sn, c0(rate, inputs.pi_V),
                                    inputs.norm_g, 0.0, rate.log_rho, with_gamma_factor=False)
    return make_report('T1', inputs, value, terms)


def rosenthal_v_shift(inputs: BoundInputs) -> BoundReport:
    """Moment bound from an arbitrary initial law, L_{V^{1/(2q)}} class"""
    stationary = rosenthal_v(inputs)
    rate = inputs.rate
    q = inputs.q
    start = _require_start(inputs, 'T2')
    log_extra = ((6 * q - 1) * math.log(2.0) + math.log(rate.c) + math.log(start)
                 + 2 * q * math.log(q) - rate.log_rho - 2 * q * math.log(rate.log_inv_rho))
    extra = LogValue(1, log_extra) * LogValue.from_float(inputs.norm_g) ** (2 * q)
    scaled = LogValue(1, (2 * q - 1) * math.log(2.0)) * stationary.log_value
    return make_report('T2', inputs, scaled + extra, {'stationary': scaled, 'initial': extra})


def rosenthal_logv(inputs: BoundInputs) -> BoundReport:
    """Stationary 2q-th moment bound for g in L_{W^gamma}, W = log V"""
    require_norm(inputs, NormKind.W_GAMMA, 'T3')
    rate = _geom(inputs, 'T3')
    var_Sn = require_variance(inputs, 'T3')
    value, terms = rosenthal_kernel(inputs.q, inputs.n, var_Sn, c0(rate, inputs.pi_V),
                                    inputs.norm_g, inputs.gamma, rate.log_rho, with_gamma_factor=True)
    return make_report('T3', inputs, value, terms)


def d1_constant(rate: GeomRate, q: int, gamma: float) -> LogValue:
    """e^{-1} rho^{-1} log(1/rho)^{1-4q} (4q-2)! + rho^{-1} log(1/rho)^{-1} (4 q gamma / e)^{4 q gamma}"""
    log_l = math.log(rate.log_inv_rho)
    first = LogValue(1, -1.0 - rate.log_rho + (1 - 4 * q) * log_l + math.lgamma(4 * q - 1))
    power = 4 * q * gamma
    log_gamma_part = power * (math.log(4 * q * gamma) - 1.0) if gamma > 0 else 0.0
    second = LogValue(1, -rate.log_rho - log_l + log_gamma_part)
    return first + second


def rosenthal_logv_shift(inputs: BoundInputs) -> BoundReport:
    """Moment bound from an arbitrary initial law, L_{W^gamma} class"""
    stationary = rosenthal_logv(inputs)
    rate = inputs.rate
    q = inputs.q
    start = _require_start(inputs, 'T4')
    log_extra = (4 * q - 2) * math.log(2.0) + math.log(rate.c) + math.log(start)
    extra = (LogValue(1, log_extra) * LogValue.from_float(inputs.norm_g) ** (2 * q)
             * d1_constant(rate, q, inputs.gamma))
    scaled = LogValue(1, (2 * q - 1) * math.log(2.0)) * stationary.log_value
    return make_report('T4', inputs, scaled + extra, {'stationary': scaled, 'initial': extra})


def bernstein_constant_v(inputs: BoundInputs) -> float:
    """
    B_tilde = max(n rho^{-1/2} log(1/rho)^{-1} C_0^2 norm^2 / Var, 1) * 2^{1+3 gamma} gamma^{3 gamma} C_0 norm / log(1/rho)

    When inputs.f_min is set, n/Var is replaced by 1/f_min and the constant no longer depends on n.
    """
    rate = _geom(inputs, 'B_tilde')
    gamma = inputs.gamma
    C0 = c0(rate, inputs.pi_V)
    log_inv = rate.log_inv_rho
    scale = rate.rho ** -0.5 / log_inv * C0 ** 2 * inputs.norm_g ** 2
    if inputs.f_min is not None:
        if inputs.f_min <= 0:
            raise InputValidationError(f"f_min must be > 0, got {inputs.f_min}")
        ratio = scale / inputs.f_min
    else:
        var_Sn = require_variance(inputs, 'B_tilde')
        if var_Sn == 0:
            raise InputValidationError("B_tilde is undefined for var_Sn = 0")
        ratio = inputs.n * scale / var_Sn
    gamma_pow = gamma ** (3 * gamma) if gamma > 0 else 1.0
    return max(ratio, 1.0) * 2.0 ** (1 + 3 * gamma) * gamma_pow * C0 * inputs.norm_g / log_inv


def bernstein_tail(t: float, var_Sn: float, bconst: float, gamma: float,
                   theorem_id: str = 'T5', inputs: Optional[BoundInputs] = None) -> BoundReport:
    """Bernstein-type tail 2 exp(-(t^2/2)/(Var + B^{1/(gamma+3)} t^{2-1/(gamma+3)}))"""
    value = bernstein_log_value(t, var_Sn, bconst, gamma)
    if inputs is None:
        return BoundReport(theorem_id=theorem_id,
                           inputs={'var_Sn': var_Sn, 'bconst': bconst, 'gamma': gamma},
                           log_value=value, terms={'tail': value}, t=t)
    return make_report(theorem_id, inputs, value, {'tail': value}, t=t)


def bernstein_tail_v(t: float, inputs: BoundInputs) -> BoundReport:
    """Stationary tail bound for g in L_{W^gamma}"""
    require_norm(inputs, NormKind.W_GAMMA, 'T5')
    var_Sn = require_variance(inputs, 'T5')
    bconst = bernstein_constant_v(inputs)
    report = bernstein_tail(t, var_Sn, bconst, inputs.gamma, 'T5', inputs)
    if inputs.f_min is not None:
        report.flags.append('f_min-route')
    return report


def deviation_radius(delta: float, var_Sn: float, bconst: float, gamma: float) -> float:
    """Radius r with P_pi(|S_n| >= r) <= delta"""
    return radius(delta, var_Sn, bconst, gamma)


def nonstationary_tail_v(t: float, inputs: BoundInputs) -> BoundReport:
    """
    Tail bound from an arbitrary initial law xi

    P_pi(|S_n| >= t/4) + [rho^{-1/2} e^{-...} + (1-rho)^{-1} e^{-...}] c (xi(V) + pi(V)),
    with the second exponential read as its gamma -> 0 limit when gamma = 0.
    """
    if t < 0:
        raise InputValidationError(f"t must be >= 0, got {t}")
    stationary = bernstein_tail_v(t / 4, inputs)
    rate = inputs.rate
    gamma = inputs.gamma
    start = _require_start(inputs, 'T-nonstat-V')
    varpi = 1.0 / (1.0 + gamma)
    norm_g = inputs.norm_g
    flags = []

    first = exp_term(-0.5 * rate.log_rho,
                     rate.log_inv_rho / (4.0 ** (1 + varpi) * varpi), t, norm_g, varpi)
    if gamma > 0:
        second = exp_term(-math.log1p(-rate.rho),
                          (1 + gamma) / (2.0 ** (1 + 2 * varpi) * gamma), t, norm_g, varpi)
    else:
        second = exp_term(-math.log1p(-rate.rho), math.inf, t, norm_g, varpi)
        flags.append(GAMMA0_FLAG)
        logger.debug("nonstationary_tail_v: gamma = 0, second exponential taken as its limit")

    initial = (first + second) * LogValue(1, math.log(rate.c) + math.log(start))
    stationary_part = LogValue.from_float(stationary.clamped)
    return make_report('T-nonstat-V', inputs, stationary_part + initial,
                       {'stationary': stationary_part, 'initial': initial}, t=t, flags=flags)


SCALING_RHOS = (0.8, 0.9, 0.95)


def homogeneous_scaling(q: int, kappa: float, c: float, pi_V: float, norm_g: float,
                        rhos: Sequence[float] = SCALING_RHOS) -> Dict[float, float]:
    """
    T1 at n = ceil(kappa rho^{-1/2} / log(1/rho)), divided by n^{2q}, for each rho

    c, pi(V) and the norm are shared across rates and the variance is its analytic
    upper bound, so the values depend on rho only through rounding of n and rho^{q-u}.
    """
    values = {}
    for rho in rhos:
        rate = GeomRate(rho=rho, log_rho=math.log(rho), c=c, lambda_bar_m=math.nan,
                        b_m=math.nan, b_bar_m=math.nan)
        n = mixing_time_scaling(kappa, rho)
        inputs = BoundInputs(q=q, n=n, norm_g=norm_g, norm_kind=NormKind.V_POWER, rate=rate, gamma=0.0,
                             var_Sn=variance_upper(n, rate, pi_V, norm_g),
                             var_provenance=VarianceProvenance.ANALYTIC_UPPER, pi_V=pi_V)
        values[rho] = math.exp(rosenthal_v(inputs).log_value.log_abs - 2 * q * math.log(n))
    logger.debug(f"homogeneous_scaling: q={q}, kappa={kappa}, values={values}")
    return values


def scaling_spread(values: Dict[float, float]) -> float:
    """max / min of the normalized bounds"""
    return max(values.values()) / min(values.values())
