"""
V-geometric ergodicity constants from a drift/minorization certificate
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

from ..errors import CertificateInvalidError, InputValidationError
from ..models import DriftCertificate, GeomRate

logger = logging.getLogger(__name__)


@dataclass
class EnvelopeConstants:
    """Constants (D, alpha, rho_star) of the centered-moment envelope"""
    D: float
    alpha: float
    rho_star: float


def drift_intermediates(lam: float, b: float, d: float, m: int) -> Tuple[float, float, float]:
    """Return (lambda_bar_m, b_m, b_bar_m) for an m-step drift"""
    lam_m = lam ** m
    b_m = b * (1 - lam_m) / (1 - lam)
    lambda_bar_m = lam_m + 2 * b_m / (1 + d)
    b_bar_m = lam_m * b_m + d
    return lambda_bar_m, b_m, b_bar_m


def geometric_rate(cert: DriftCertificate) -> GeomRate:
    """
    Compute the V-geometric rate (rho, c) of a certified chain

    Args:
        cert: Drift/minorization certificate (lambda, b, d, m, eps)

    Returns:
        GeomRate with rho, log rho, c and the m-step intermediates
    """
    cert.validate()
    lam, m, eps = cert.lam, int(cert.m), cert.eps
    lambda_bar_m, b_m, b_bar_m = drift_intermediates(lam, cert.b, cert.d, m)

    log_one_minus_eps = math.log1p(-eps)
    log_lambda_bar = math.log(lambda_bar_m)
    denominator = m * (log_one_minus_eps + log_lambda_bar - math.log(b_bar_m))
    if not denominator < 0:
        raise CertificateInvalidError(
            "b_bar_m > (1 - eps) lambda_bar_m",
            f"b_bar_m={b_bar_m}, lambda_bar_m={lambda_bar_m}, eps={eps}")
    log_rho = log_one_minus_eps * log_lambda_bar / denominator
    rho = math.exp(log_rho)
    if not 0 < rho < 1:
        raise CertificateInvalidError("0 < rho < 1", f"rho={rho}")

    lam_m = lam ** m
    c = (math.exp(-m * log_rho)
         * (lam_m + (1 - lam_m) / (1 - lam))
         * (1 + b_bar_m / ((1 - eps) * (1 - lambda_bar_m))))

    logger.debug(f"geometric_rate: rho={rho:.6g}, c={c:.6g}, lambda_bar_m={lambda_bar_m:.6g}")
    return GeomRate(rho=rho, log_rho=log_rho, c=c, lambda_bar_m=lambda_bar_m,
                    b_m=b_m, b_bar_m=b_bar_m, m=m)


def mixing_bound(rate: GeomRate, pi_V: float, V_x: float, n: int) -> float:
    """c {V(x) + pi(V)} rho^n, the bound on ||Q^n(x, .) - pi||_V"""
    if n < 0:
        raise InputValidationError(f"n must be >= 0, got {n}")
    return math.exp(math.log(rate.c) + math.log(V_x + pi_V) + n * rate.log_rho)


def valpha_deviation(rate: GeomRate, pi_V: float, alpha: float, V_x: float, n: int) -> float:
    """Upper bound 2 {c rho^n pi(V) V(x)}^alpha on ||Q^n(x, .) - pi||_{V^alpha}"""
    if not 0 < alpha <= 1:
        raise InputValidationError(f"alpha must lie in (0, 1], got {alpha}")
    if n < 0:
        raise InputValidationError(f"n must be >= 0, got {n}")
    log_inner = math.log(rate.c) + n * rate.log_rho + math.log(pi_V) + math.log(V_x)
    return 2.0 * math.exp(alpha * log_inner)


def variance_upper(n: int, rate: GeomRate, pi_V: float, norm_g: float) -> float:
    """Analytic upper bound on Var_pi(S_n); norm_g is ||g_bar||_{V^{1/2}} or a dominating norm"""
    if n <= 0:
        return 0.0
    return (5.0 * n * math.sqrt(rate.c) * math.exp(-0.5 * rate.log_rho) / rate.log_inv_rho
            * pi_V ** 1.5 * norm_g ** 2)


def resolve_pi_V(pi_V: Optional[float], lam: float, b: float) -> Tuple[float, str]:
    """
    Return (pi(V), source); falls back to the stationary bound b/(1-lambda)

    The bounds are increasing in pi(V), so the fallback keeps them valid.
    """
    if pi_V is not None:
        return float(pi_V), "exact"
    fallback = max(b / (1 - lam), math.e)
    logger.warning(f"pi(V) not supplied, using drift fallback b/(1-lambda) = {fallback:.6g}")
    return fallback, "drift-fallback"


def envelope_constants_v(rate: GeomRate, pi_V: float, gamma: Optional[float] = None) -> EnvelopeConstants:
    """
    Centered-moment envelope constants for the V-geometric case

    gamma=None selects the V^{1/(2q)} class (D = 2 c pi(V), alpha = 0);
    a number selects the W^gamma class (D = 2^{1+gamma} gamma^gamma c pi(V), alpha = gamma).
    """
    rho_star = math.sqrt(rate.rho)
    if gamma is None:
        return EnvelopeConstants(D=2.0 * rate.c * pi_V, alpha=0.0, rho_star=rho_star)
    gamma_pow = gamma ** gamma if gamma > 0 else 1.0
    return EnvelopeConstants(D=2.0 ** (1 + gamma) * gamma_pow * rate.c * pi_V,
                             alpha=float(gamma), rho_star=rho_star)


def cumulant_envelope(k: int, n: int, env: EnvelopeConstants, psi: float) -> float:
    """n rho_*^{-1} log^{1-k}(1/rho_*) D^k psi^k (k!)^{3+alpha}"""
    if k < 2:
        raise InputValidationError(f"cumulant envelope needs k >= 2, got {k}")
    log_inv = -math.log(env.rho_star)
    log_value = (math.log(n) - math.log(env.rho_star) + (1 - k) * math.log(log_inv)
                 + k * math.log(env.D) + (3 + env.alpha) * math.lgamma(k + 1))
    if psi == 0:
        return 0.0
    return math.exp(log_value + k * math.log(psi))


def mixing_time_scaling(kappa: float, rho: float) -> int:
    """n = ceil(kappa rho^{-1/2} / log(1/rho)) used by the homogeneous-scaling experiment"""
    return int(math.ceil(kappa * rho ** -0.5 / math.log(1 / rho)))
