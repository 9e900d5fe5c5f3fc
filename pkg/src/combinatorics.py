"""
Exact and log-space combinatorics: Gaussian moments, compositions,
B_gamma(u, q) coefficients and the moment/cumulant transforms
"""
import logging
import math
from typing import List, Sequence, Iterator, Tuple

from scipy.special import comb, gammaln

from .config import Config
from .errors import InputValidationError, BudgetExceededError
from .models import LogValue, Composition

logger = logging.getLogger(__name__)

# c_1 = e^2 sqrt(2) in the scaling bound of B_0(u, q)
LOG_C1 = 2.0 + 0.5 * math.log(2.0)


def log_factorial(k: float) -> float:
    """log(k!) through the log-gamma function (real k allowed)"""
    if k < 0:
        raise InputValidationError(f"factorial of negative value {k}")
    return float(gammaln(k + 1.0))


def log_binomial(n: int, k: int) -> float:
    if k < 0 or k > n:
        return -math.inf
    return log_factorial(n) - log_factorial(k) - log_factorial(n - k)


def pow0(base: float, exponent: float) -> float:
    """base ** exponent with the convention 0^0 = 1"""
    if exponent == 0:
        return 1.0
    return base ** exponent


def log_pow0(base: float, exponent: float) -> float:
    """log(base ** exponent) with 0^0 = 1; -inf when base is 0 and exponent > 0"""
    if exponent == 0:
        return 0.0
    if base == 0:
        return -math.inf
    return exponent * math.log(base)


def gaussian_moment(q: int) -> int:
    """
    Moment E[Z^{2q}] of a standard Gaussian, exactly

    Args:
        q: Half the moment order, q >= 1

    Returns:
        (2q)! / (q! 2^q) as an integer
    """
    if int(q) != q or q < 1:
        raise InputValidationError(f"gaussian_moment needs an integer q >= 1, got {q}")
    q = int(q)
    return math.factorial(2 * q) // (math.factorial(q) * 2 ** q)


def _check_uq(u: int, q: int):
    if int(q) != q or q < 2:
        raise InputValidationError(f"q must be an integer >= 2, got {q}")
    if int(u) != u or not 1 <= u <= q - 1:
        raise InputValidationError(f"u must satisfy 1 <= u <= q-1, got u={u}, q={q}")


def _iter_parts(remaining: int, slots: int) -> Iterator[Tuple[int, ...]]:
    if slots == 1:
        if remaining >= 2:
            yield (remaining,)
        return
    for first in range(2, remaining - 2 * (slots - 1) + 1):
        for rest in _iter_parts(remaining - first, slots - 1):
            yield (first,) + rest


def compositions(u: int, q: int) -> List[Composition]:
    """
    Enumerate the ordered compositions of 2q into u parts, each part >= 2

    Returns:
        List of Composition, in lexicographic order; its length is binom(2q-u-1, u-1)
    """
    _check_uq(u, q)
    return [Composition(parts, u, q) for parts in _iter_parts(2 * q, u)]


def composition_count(u: int, q: int) -> int:
    _check_uq(u, q)
    return math.comb(2 * q - u - 1, u - 1)


def _exact_weight_sum(u: int, q: int, power: int) -> int:
    """Sum over compositions of prod (k_i!)^power, by convolution over parts"""
    total = 2 * q
    weights = [0, 0] + [math.factorial(k) ** power for k in range(2, total + 1)]
    layer = {0: 1}
    for _ in range(u):
        nxt = {}
        for s, acc in layer.items():
            for k in range(2, total - s + 1):
                nxt[s + k] = nxt.get(s + k, 0) + acc * weights[k]
        layer = nxt
    return layer.get(total, 0)


def _log_weight_sum(u: int, q: int, power: float) -> LogValue:
    total = 2 * q
    log_weights = [power * log_factorial(k) for k in range(total + 1)]
    layer = {0: LogValue(1, 0.0)}
    for _ in range(u):
        nxt = {}
        for s, acc in layer.items():
            for k in range(2, total - s + 1):
                term = acc * LogValue(1, log_weights[k])
                nxt[s + k] = nxt[s + k] + term if s + k in nxt else term
        layer = nxt
    return layer.get(total, LogValue.zero())


def b_coefficient_exact(gamma: int, u: int, q: int) -> int:
    """B_gamma(u, q) as an exact integer; gamma must be a non-negative integer"""
    _check_uq(u, q)
    if int(gamma) != gamma or gamma < 0:
        raise InputValidationError(f"exact B_gamma needs a non-negative integer gamma, got {gamma}")
    prefactor = math.factorial(2 * q) // math.factorial(u)
    return prefactor * _exact_weight_sum(u, q, int(gamma) + 2)


def b_coefficient(gamma: float, u: int, q: int) -> LogValue:
    """
    B_gamma(u, q) = (2q)!/u! * sum over compositions of prod (k_i!)^(gamma+2)

    The exact big-integer path is used for integer gamma when q is small enough,
    otherwise the log-gamma path.
    """
    _check_uq(u, q)
    if gamma < 0:
        raise InputValidationError(f"gamma must be >= 0, got {gamma}")
    if float(gamma).is_integer() and q <= Config.get_numerics('log_space_q_threshold'):
        return LogValue.from_int(b_coefficient_exact(int(gamma), u, q))
    log_prefactor = log_factorial(2 * q) - log_factorial(u)
    return LogValue(1, log_prefactor) * _log_weight_sum(u, q, gamma + 2.0)


def b_coefficient_log(gamma: float, u: int, q: int) -> LogValue:
    """Log-gamma path of B_gamma(u, q) regardless of gamma"""
    _check_uq(u, q)
    log_prefactor = log_factorial(2 * q) - log_factorial(u)
    return LogValue(1, log_prefactor) * _log_weight_sum(u, q, gamma + 2.0)


def b_coefficient_upper(gamma: float, u: int, q: int) -> LogValue:
    """(2q)!/u! * binom(2q-u-1, u-1) * ((2q-2u+2)!)^(2+gamma) * 2^((u-1)(2+gamma))"""
    _check_uq(u, q)
    if gamma < 0:
        raise InputValidationError(f"gamma must be >= 0, got {gamma}")
    if int(gamma) == gamma:
        power = int(gamma) + 2
        return LogValue.from_int(math.factorial(2 * q) // math.factorial(u) * math.comb(2 * q - u - 1, u - 1)
                                 * math.factorial(2 * q - 2 * u + 2) ** power * 2 ** ((u - 1) * power))
    log_value = (log_factorial(2 * q) - log_factorial(u)
                 + log_binomial(2 * q - u - 1, u - 1)
                 + (2 + gamma) * log_factorial(2 * q - 2 * u + 2)
                 + (u - 1) * (2 + gamma) * math.log(2.0))
    return LogValue(1, log_value)


def b0_scaling_bound(u: int, q: int) -> LogValue:
    """c_1 (2q)^{2q} (2q-u)^{2(2q-u)} e^{-(2q-u)}, dominating B_0(u, q)"""
    _check_uq(u, q)
    r = 2 * q - u
    return LogValue(1, LOG_C1 + 2 * q * math.log(2 * q) + 2 * r * math.log(r) - r)


def b0_uniform_bound(q: int) -> LogValue:
    """c_1 q^{6q} 2^{7q} e^{-2q}, dominating B_0(u, q) for every admissible u"""
    if int(q) != q or q < 2:
        raise InputValidationError(f"q must be an integer >= 2, got {q}")
    return LogValue(1, LOG_C1 + 6 * q * math.log(q) + 7 * q * math.log(2.0) - 2 * q)


def _check_transform_length(values: Sequence[float]):
    if len(values) == 0:
        raise InputValidationError("moment/cumulant sequence must be non-empty")
    cap = Config.get_numerics('partition_cap')
    if len(values) > cap:
        raise BudgetExceededError(f"transform order {len(values)} exceeds the cap of {cap}")


def moments_to_cumulants(moments: Sequence[float]) -> List[float]:
    """
    Raw moments (m_1, ..., m_k) to cumulants (k_1, ..., k_k)

    Uses k_n = m_n - sum_{j<n} binom(n-1, j-1) k_j m_{n-j}, which is the
    set-partition formula grouped by the block holding the first element.
    """
    _check_transform_length(moments)
    mnc = [1.0] + [float(m) for m in moments]
    kappa = [0.0]
    for n in range(1, len(mnc)):
        value = mnc[n]
        for j in range(1, n):
            value -= comb(n - 1, j - 1, exact=True) * kappa[j] * mnc[n - j]
        kappa.append(value)
    return kappa[1:]


def cumulants_to_moments(cumulants: Sequence[float]) -> List[float]:
    """Inverse of moments_to_cumulants"""
    _check_transform_length(cumulants)
    kappa = [0.0] + [float(k) for k in cumulants]
    mnc = [1.0]
    for n in range(1, len(kappa)):
        value = 0.0
        for j in range(1, n + 1):
            value += comb(n - 1, j - 1, exact=True) * kappa[j] * mnc[n - j]
        mnc.append(value)
    return mnc[1:]


def set_partitions(items: Sequence[int]) -> Iterator[List[List[int]]]:
    """All set partitions of items (Bell-number many; callers cap the size)"""
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for partition in set_partitions(rest):
        for i in range(len(partition)):
            yield partition[:i] + [[first] + partition[i]] + partition[i + 1:]
        yield [[first]] + partition
