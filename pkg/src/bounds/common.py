"""
Shared log-space kernels for the moment and tail bounds
"""
import logging
import math
from typing import Dict, List, Optional, Tuple

from ..combinatorics import gaussian_moment, b_coefficient, log_pow0
from ..errors import InputValidationError
from ..models import BoundInputs, BoundReport, LogValue, NormKind, log_sum

logger = logging.getLogger(__name__)

GAMMA0_FLAG = "gamma0-limit"


def require_norm(inputs: BoundInputs, expected: NormKind, theorem_id: str):
    if inputs.norm_kind != expected:
        raise InputValidationError(
            f"{theorem_id} expects norm {expected.value}, got {inputs.norm_kind.value}")


def require_variance(inputs: BoundInputs, theorem_id: str) -> float:
    if inputs.var_Sn is None:
        raise InputValidationError(f"{theorem_id} needs var_Sn with a provenance tag")
    return inputs.var_Sn


def leading_term(q: int, var_Sn: float) -> LogValue:
    """m_q Var(S_n)^q"""
    return LogValue.from_int(gaussian_moment(q)) * LogValue.from_float(var_Sn) ** q


def remainder_sum(q: int, n: int, gamma: float, log_rate: float) -> LogValue:
    """
    Sum over u = 1..q-1 of B_gamma(u, q) n^u / (r^{u/2} log^{2q-u}(1/r))

    Args:
        log_rate: log r with r the mixing rate (rho or varrho); must be negative
    """
    if not log_rate < 0:
        raise InputValidationError(f"mixing rate must lie in (0, 1), log rate={log_rate}")
    log_inv = -log_rate
    terms = []
    for u in range(1, q):
        log_term = (u * math.log(n) - 0.5 * u * log_rate - (2 * q - u) * math.log(log_inv))
        terms.append(b_coefficient(gamma, u, q) * LogValue(1, log_term))
    return log_sum(terms)


def rosenthal_kernel(q: int, n: int, var_Sn: float, scale: float, norm_g: float, gamma: float,
                     log_rate: float, with_gamma_factor: bool) -> Tuple[LogValue, Dict[str, LogValue]]:
    """m_q Var^q + scale^{2q} [(2 gamma)^{2 gamma q}] norm^{2q} * remainder_sum"""
    leading = leading_term(q, var_Sn)
    if q == 1:
        return leading, {'leading': leading, 'remainder': LogValue.zero()}
    log_prefactor = 2 * q * math.log(scale)
    if with_gamma_factor:
        log_prefactor += log_pow0(2 * gamma, 2 * gamma * q)
    remainder = (LogValue(1, log_prefactor) * LogValue.from_float(norm_g) ** (2 * q)
                 * remainder_sum(q, n, gamma, log_rate))
    return leading + remainder, {'leading': leading, 'remainder': remainder}


def bernstein_log_value(t: float, var_Sn: float, bconst: float, gamma: float) -> LogValue:
    """log of 2 exp(-(t^2/2) / (var + B^{1/(gamma+3)} t^{2 - 1/(gamma+3)}))"""
    if t < 0:
        raise InputValidationError(f"t must be >= 0, got {t}")
    if t == 0:
        return LogValue(1, math.log(2.0))
    exponent = 1.0 / (gamma + 3)
    denominator = var_Sn + bconst ** exponent * t ** (2 - exponent)
    if denominator == 0:
        return LogValue.zero()
    return LogValue(1, math.log(2.0) - 0.5 * t * t / denominator)


def radius(delta: float, var_Sn: float, bconst: float, gamma: float) -> float:
    """2 sqrt(var) sqrt(log(4/delta)) + 4^{gamma+3} B (log(4/delta))^{gamma+3}"""
    if not 0 < delta < 1:
        raise InputValidationError(f"delta must lie in (0, 1), got {delta}")
    log_term = math.log(4.0 / delta)
    return 2 * math.sqrt(var_Sn) * math.sqrt(log_term) + 4.0 ** (gamma + 3) * bconst * log_term ** (gamma + 3)


def exp_term(log_prefactor: float, rate: float, t: float, norm_g: float, varpi: float) -> LogValue:
    """prefactor * exp(-rate * (t / norm_g)^varpi) with the t = 0 and norm_g = 0 limits"""
    if t == 0:
        return LogValue(1, log_prefactor)
    if norm_g == 0 or math.isinf(rate):
        return LogValue.zero()
    return LogValue(1, log_prefactor - rate * (t / norm_g) ** varpi)


def make_report(theorem_id: str, inputs: BoundInputs, value: LogValue, terms: Dict[str, LogValue],
                t: Optional[float] = None, flags: Optional[List[str]] = None) -> BoundReport:
    flags = list(flags or [])
    if inputs.pi_V_source != "exact":
        flags.append(f"pi_V-{inputs.pi_V_source}")
    if inputs.var_provenance is not None:
        flags.append(f"var-{inputs.var_provenance.value}")
    report = BoundReport(theorem_id=theorem_id, inputs=inputs.echo(), log_value=value,
                         terms=terms, t=t, flags=flags)
    logger.debug(f"{theorem_id}: log value {value.log_abs:.6g} (t={t})")
    return report
