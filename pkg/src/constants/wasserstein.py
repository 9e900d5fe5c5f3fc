"""
Wasserstein contraction constants: delta* root, varrho, c_K, zeta, C_1
"""
import logging
import math
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import bisect

from ..config import Config
from ..errors import InputValidationError, NumericalError
from ..models import WassCertificate, WassRate
from .vgeom import EnvelopeConstants, drift_intermediates

logger = logging.getLogger(__name__)


def _delta_sides(cert: WassCertificate):
    lambda_bar_m, b_m, _ = drift_intermediates(cert.lam, cert.b, cert.d, int(cert.m))
    d_bar = (cert.d + 1) / 2

    def lhs(delta):
        return (1 - cert.eps) * (lambda_bar_m + b_m + delta) / (1 + delta)

    def rhs(delta):
        return (lambda_bar_m * d_bar + delta) / (d_bar + delta)

    return lhs, rhs, lambda_bar_m, b_m, d_bar


def delta_star(cert: WassCertificate) -> Tuple[float, float]:
    """
    Root of (1-eps)(lambda_bar_m + b_m + delta)/(1+delta) = (lambda_bar_m d_bar + delta)/(d_bar + delta)

    Returns:
        (delta_star, residual); delta_star is 0 when
        (1-eps)(lambda_bar_m + b_m) <= lambda_bar_m
    """
    cert.validate()
    lhs, rhs, lambda_bar_m, b_m, _ = _delta_sides(cert)

    def gap(delta):
        return lhs(delta) - rhs(delta)

    if not (1 - cert.eps) * (lambda_bar_m + b_m) > lambda_bar_m:
        logger.debug("delta_star: degenerate branch, returning 0")
        return 0.0, abs(gap(0.0))

    tol = Config.get_numerics('bisection_tol')
    hi = 1.0
    for _ in range(Config.get_numerics('bracket_max_doublings')):
        if gap(hi) < 0:
            break
        hi *= 2.0
    else:
        raise NumericalError(f"delta_star: no sign change up to delta={hi}, gap(0)={gap(0.0)}")

    root = bisect(gap, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps,
                  maxiter=Config.get_numerics('bisection_max_iter'))
    residual = abs(gap(root))
    if residual >= tol:
        raise NumericalError(f"delta_star: residual {residual} above tolerance {tol}")
    logger.debug(f"delta_star: root={root:.15g}, bracket=[0, {hi}], residual={residual:.3g}")
    return float(root), residual


def check_monotone_bracketing(cert: WassCertificate, grid: Optional[np.ndarray] = None) -> bool:
    """
    Check that the left side of the delta equation decreases and the right side increases

    Requires b >= 1, the condition under which the left side is decreasing.
    """
    if cert.b < 1:
        raise InputValidationError(f"monotone bracketing needs b >= 1, got b={cert.b}")
    lhs, rhs, *_ = _delta_sides(cert)
    if grid is None:
        grid = np.concatenate([[0.0], np.geomspace(1e-6, 1e6, 400)])
    left = np.array([lhs(x) for x in grid])
    right = np.array([rhs(x) for x in grid])
    return bool(np.all(np.diff(left) < 0) and np.all(np.diff(right) > 0))


def contraction_rate(cert: WassCertificate, pi_V: float) -> WassRate:
    """
    Wasserstein contraction constants of a coupling certificate

    Args:
        cert: Certificate with kappa_K
        pi_V: pi(V) or an upper bound on it

    Returns:
        WassRate with delta*, varrho, c_K, zeta and C_1
    """
    root, residual = delta_star(cert)
    _, _, lambda_bar_m, b_m, d_bar = _delta_sides(cert)
    m = int(cert.m)

    ratio = (lambda_bar_m * d_bar + root) / (d_bar + root)
    log_varrho = math.log(ratio) / (2 * m)
    varrho = math.exp(log_varrho)
    c_K = math.sqrt(1 + cert.b / (1 - cert.lam) + root) / varrho ** m
    zeta = math.sqrt(pi_V) * c_K / math.sqrt(2)
    C1 = 2 * math.sqrt(2) * cert.kappa_K ** (m / 2) * c_K * math.sqrt(pi_V)

    logger.debug(f"contraction_rate: varrho={varrho:.6g}, c_K={c_K:.6g}, C1={C1:.6g}")
    return WassRate(delta_star=root, residual=residual, varrho=varrho, log_varrho=log_varrho,
                    c_K=c_K, zeta=zeta, C1=C1, lambda_bar_m=lambda_bar_m, b_m=b_m,
                    d_bar=d_bar, kappa_K=cert.kappa_K, m=m, degenerate=(root == 0.0))


def wasser_mixing_bound(rate: WassRate, kappa_K: float, m: int, n: int,
                        xi_sqrtV: float, pi_sqrtV: float) -> float:
    """(1/sqrt 2) kappa_K^{m/2} c_K varrho^n (xi(V^{1/2}) + pi(V^{1/2})), bounding W_c(xi Q^n, pi)"""
    if n < 0:
        raise InputValidationError(f"n must be >= 0, got {n}")
    return (kappa_K ** (m / 2) * rate.c_K * math.exp(n * rate.log_varrho)
            * (xi_sqrtV + pi_sqrtV) / math.sqrt(2))


def coupling_contraction_factor(rate: WassRate, q: int, p: int, n: int) -> float:
    """kappa_K^{m/2} c_K^{p/(2q)} varrho^{np/(2q)}, the multiplier of the contraction inequality"""
    return (rate.kappa_K ** (rate.m / 2) * rate.c_K ** (p / (2 * q))
            * math.exp(n * p / (2 * q) * rate.log_varrho))


def envelope_constants_w(rate: WassRate, gamma: Optional[float] = None) -> EnvelopeConstants:
    """
    Centered-moment envelope constants for the Wasserstein case

    gamma=None selects N_{1/(4q),V} (D = 4 kappa^{m/2} zeta, alpha = 0);
    a number selects N_{1,W^gamma} (D = 2^{2+2gamma} gamma^gamma kappa^{m/2} zeta, alpha = gamma).
    """
    kappa_part = rate.kappa_K ** (rate.m / 2)
    rho_star = math.sqrt(rate.varrho)
    if gamma is None:
        return EnvelopeConstants(D=4 * kappa_part * rate.zeta, alpha=0.0, rho_star=rho_star)
    gamma_pow = gamma ** gamma if gamma > 0 else 1.0
    return EnvelopeConstants(D=2.0 ** (2 + 2 * gamma) * gamma_pow * kappa_part * rate.zeta,
                             alpha=float(gamma), rho_star=rho_star)


def sup_log_power(s: float) -> Tuple[float, float]:
    """
    Supremum over a >= e of log(a) / a^s, for s in (0, 1]

    Returns:
        (maximizer, value); the stationary point is a = e^{1/s} with value 1/(s e)
    """
    if not 0 < s <= 1:
        raise InputValidationError(f"exponent must lie in (0, 1], got {s}")
    a_star = math.exp(1.0 / s)
    return a_star, 1.0 / (s * math.e)
