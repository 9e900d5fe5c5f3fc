"""
Preconditioned Crank-Nicolson Metropolis chain on R^d with a diagonal Gaussian reference
"""
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from ..config import Config
from ..errors import BudgetExceededError, InputValidationError, NumericalError
from ..harness import clopper_pearson
from ..models import DriftCertificate, NormKind, WassCertificate
from .base_chain import BaseChain, Observable

logger = logging.getLogger(__name__)

POTENTIALS = ('zero', 'quadratic', 'lipschitz')
M_FLOOR_FLAG = "m-floored-at-1"
MC_CHUNK = 100_000

# Fernique constant for a ball of reference mass 3/4
D_TAU = 0.75 * (3 ** (1 / 24) + 1 / (1 - 3 ** ((1 + math.sqrt(2)) ** 2 / 6 - 1)))


@dataclass
class PcnModel:
    """
    pCN target d pi / d mu proportional to exp(-Phi), mu = N(0, diag(cov_spectrum))

    Potentials: 'zero'; 'quadratic' Phi(x) = ||x||^2 / (2 scale); 'lipschitz'
    Phi(x) = scale * sqrt(1 + ||x||^2), Lipschitz with constant scale.
    alpha_bar, r_bar and a are the acceptance lower-bound parameters, taken as given.
    """
    dim: int = 1
    cov_spectrum: Optional[List[float]] = None
    rho_H: float = 0.1
    potential: str = 'zero'
    potential_scale: float = 1.0
    alpha_bar: float = 0.0
    r_bar: float = 0.45
    a: float = 0.9
    burn_in: int = 200

    def __post_init__(self):
        if self.cov_spectrum is None:
            self.cov_spectrum = [1.0 / (k + 1) ** 2 for k in range(self.dim)]

    @property
    def beta(self) -> float:
        return math.sqrt(1 - self.rho_H ** 2)

    @property
    def lipschitz(self) -> float:
        if self.potential == 'zero':
            return 0.0
        if self.potential == 'lipschitz':
            return self.potential_scale
        return math.inf

    @property
    def acceptance_radius(self) -> float:
        """Radius (2 r_bar / (1 - rho_H))^{1/(1-a)} beyond which the acceptance bound applies"""
        return (2 * self.r_bar / (1 - self.rho_H)) ** (1 / (1 - self.a))

    def validate(self) -> 'PcnModel':
        if self.dim < 1 or len(self.cov_spectrum) != self.dim:
            raise InputValidationError(f"cov_spectrum must have dim={self.dim} entries")
        if any(v <= 0 for v in self.cov_spectrum):
            raise InputValidationError("covariance eigenvalues must be positive")
        if not 0 < self.rho_H < 1:
            raise InputValidationError(f"rho_H must lie in (0, 1), got {self.rho_H}")
        if self.potential not in POTENTIALS:
            raise InputValidationError(f"unknown potential {self.potential}, expected one of {POTENTIALS}")
        if self.potential_scale <= 0:
            raise InputValidationError(f"potential_scale must be > 0, got {self.potential_scale}")
        if not 0.5 < self.a < 1:
            raise InputValidationError(f"a must lie in (1/2, 1), got {self.a}")
        if self.r_bar <= 0:
            raise InputValidationError(f"r_bar must be > 0, got {self.r_bar}")
        return self

    def phi(self, states: np.ndarray) -> np.ndarray:
        sq = np.sum(states ** 2, axis=1)
        if self.potential == 'zero':
            return np.zeros(len(states))
        if self.potential == 'quadratic':
            return sq / (2 * self.potential_scale)
        return self.potential_scale * np.sqrt(1 + sq)

    def posterior_variance(self) -> np.ndarray:
        """Per-coordinate target variance for the quadratic potential"""
        if self.potential != 'quadratic':
            raise InputValidationError("closed-form posterior needs the quadratic potential")
        return 1.0 / (1.0 / np.asarray(self.cov_spectrum) + 1.0 / self.potential_scale)

    def to_dict(self) -> Dict[str, Any]:
        return {'model': 'pcn', **asdict(self)}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'PcnModel':
        return cls(**{k: v for k, v in data.items() if k != 'model'})


@dataclass
class PcnConstants:
    tau: float
    alpha_tau: float
    C_tau_beta: float
    K1: float
    t_star: float
    b1: float
    b2: float
    R: float
    p1: float
    contraction_gamma: float
    eps_H: float
    R_m: float
    drift: DriftCertificate
    coupling: WassCertificate
    measures: Dict[str, float] = field(default_factory=dict)
    directions: Dict[str, str] = field(default_factory=dict)
    mc_samples: int = 0
    level: float = 0.0
    seed: int = 0
    flags: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        data = {k: v for k, v in asdict(self).items() if k not in ('drift', 'coupling')}
        data['drift'] = self.drift.to_dict()
        data['coupling'] = self.coupling.to_dict()
        return data


class BallMeasure:
    """Monte Carlo ball measures mu(B(0, r)) reported at the lower confidence endpoint"""

    def __init__(self, model: PcnModel, samples: int, rng: np.random.Generator, level: float):
        scale = np.sqrt(np.asarray(model.cov_spectrum))
        chunks = []
        remaining = samples
        while remaining > 0:
            size = min(MC_CHUNK, remaining)
            z = rng.normal(size=(size, model.dim)) * scale
            chunks.append(np.linalg.norm(z, axis=1))
            remaining -= size
        self.norms = np.sort(np.concatenate(chunks))
        self.samples = samples
        self.level = level

    def lower(self, radius: float) -> float:
        count = int(np.searchsorted(self.norms, radius, side='right'))
        return clopper_pearson(count, self.samples, self.level)[0]

    def quantile_radius(self, mass: float) -> float:
        """Smallest sampled radius whose lower-endpoint ball measure reaches mass"""
        N = self.samples
        if clopper_pearson(N, N, self.level)[0] < mass:
            raise BudgetExceededError(
                f"{N} samples cannot certify ball mass {mass} at level {self.level}")
        lo, hi = 1, N
        while lo < hi:
            mid = (lo + hi) // 2
            if clopper_pearson(mid, N, self.level)[0] >= mass:
                hi = mid
            else:
                lo = mid + 1
        return float(self.norms[lo - 1])


def _exp(log_value: float, name: str) -> float:
    try:
        return math.exp(log_value)
    except OverflowError:
        raise NumericalError(f"{name} overflows double precision (log={log_value:.6g}); "
                             f"reduce r_bar or rho_H")


def pcn_constants(model: PcnModel, mc_budget: Optional[int] = None, seed: Optional[int] = None,
                  level: Optional[float] = None) -> PcnConstants:
    """
    Drift and coupling certificates of the pCN chain

    Every Gaussian ball measure is replaced by its lower Clopper-Pearson endpoint,
    which enlarges lambda and shrinks the contraction constants. The certificate uses
    V(x) = e * exp(||x||), so b and d carry a factor e.
    """
    model.validate()
    L = model.lipschitz
    if math.isinf(L):
        raise InputValidationError(f"pcn_constants needs a Lipschitz potential, got {model.potential}")
    mc_budget = mc_budget or Config.MONTE_CARLO['ball_measure_samples']
    if mc_budget < Config.MONTE_CARLO['min_replicas']:
        raise BudgetExceededError(f"mc_budget {mc_budget} below the minimum "
                                  f"{Config.MONTE_CARLO['min_replicas']}")
    seed = Config.DEFAULT_SEED if seed is None else seed
    level = level or Config.CI_LEVEL
    measure = BallMeasure(model, int(mc_budget), np.random.default_rng(seed), level)

    rho, beta = model.rho_H, model.beta
    big_r = model.acceptance_radius
    tau = measure.quantile_radius(0.75)
    alpha_tau = math.log(3) / (24 * tau ** 2)
    C_tau_beta = D_TAU * (1 + math.sqrt(math.pi) * beta / (2 * math.sqrt(alpha_tau)))
    K1 = model.r_bar / beta

    mu_drift = measure.lower(K1 * model.r_bar ** model.a)
    lam = 1 - mu_drift * (1 - math.exp(-(1 - rho) * big_r / 2)) * math.exp(model.alpha_bar)
    if not 0 < lam < 1:
        raise NumericalError(f"pCN lambda={lam} outside (0, 1)")

    slope = beta * K1 + rho
    t_star = (slope / (2 * alpha_tau * K1 ** 2 * model.a)) ** (1 / (2 * model.a - 1))
    g_star = slope * t_star - alpha_tau * K1 ** 2 * t_star ** (2 * model.a)
    log_b1 = math.log(D_TAU) + big_r + beta ** 2 / (4 * alpha_tau)
    log_b2 = math.log(C_tau_beta) + g_star + beta * K1
    b1 = _exp(log_b1, "b1")
    b2 = _exp(log_b2, "b2")
    b = max(b1, b2)
    R = math.log(4 * b / (1 - lam) - 1)

    p1 = math.exp(-2 * L * (2 * big_r + 1))
    mu_inner = measure.lower(big_r / beta)
    mu_outer = measure.lower(K1 * big_r ** model.a)
    contraction_gamma = min(p1 * mu_inner, math.exp(model.alpha_bar) * mu_outer) * (1 - rho) / 2
    eps_H = 1.0 if L == 0 else min(1.0, contraction_gamma / (2 * L))

    flags = []
    m = math.ceil(math.log(eps_H / (4 * R)) / math.log(rho))
    if m < 1:
        logger.warning(f"pcn_constants: m={m} from the contraction formula, floored at 1")
        flags.append(M_FLOOR_FLAG)
        m = 1
    R_m = R / (m * beta)
    mu_m = measure.lower(R_m)
    eps = min(contraction_gamma, (p1 * mu_m) ** m / 2)

    # V = e exp(||x||) keeps V >= e; C_bar = B(0, R)^2 = {V <= e^{1+R}}^2
    b_cert = math.e * b
    d = _exp(1 + R, "d")
    drift = DriftCertificate(lam=lam, b=b_cert, d=d, m=m, eps=eps).validate()
    coupling = WassCertificate(lam=lam, b=b_cert, d=d, m=m, eps=eps, kappa_K=1.0).validate()

    measures = {'tau': tau, 'ball_K1_rbar_a': mu_drift, 'ball_R_over_beta': mu_inner,
                'ball_K1_R_a': mu_outer, 'ball_R_m': mu_m}
    directions = {'tau': 'upper (ball mass at lower endpoint)',
                  'ball_K1_rbar_a': 'lower (enlarges lambda)',
                  'ball_R_over_beta': 'lower (shrinks contraction_gamma)',
                  'ball_K1_R_a': 'lower (shrinks contraction_gamma)',
                  'ball_R_m': 'lower (shrinks eps)'}
    logger.info(f"pcn_constants: tau={tau:.6g}, lambda={lam:.6g}, log b={math.log(b):.6g}, "
                f"eps_H={eps_H:.6g}, m={m}, eps={eps:.6g}")
    return PcnConstants(tau=tau, alpha_tau=alpha_tau, C_tau_beta=C_tau_beta, K1=K1, t_star=t_star,
                        b1=b1, b2=b2, R=R, p1=p1, contraction_gamma=contraction_gamma, eps_H=eps_H,
                        R_m=R_m, drift=drift, coupling=coupling, measures=measures,
                        directions=directions, mc_samples=int(mc_budget), level=level, seed=seed,
                        flags=flags)


class PcnChain(BaseChain):
    """pCN Metropolis chain with synchronous coupling on (Z, U)"""

    def __init__(self, model: PcnModel, eps_H: float = 1.0, model_id: str = "pcn"):
        super().__init__(model_id)
        self.model = model.validate()
        self.eps_H = eps_H
        self.scale = np.sqrt(np.asarray(model.cov_spectrum, dtype=float))

    def reference_sample(self, replicas: int, rng: np.random.Generator) -> np.ndarray:
        return rng.normal(size=(replicas, self.model.dim)) * self.scale

    def _move(self, states: np.ndarray, z: np.ndarray, log_u: np.ndarray) -> np.ndarray:
        proposal = self.model.rho_H * states + self.model.beta * z
        log_alpha = np.minimum(0.0, self.model.phi(states) - self.model.phi(proposal))
        accept = log_u <= log_alpha
        return np.where(accept[:, None], proposal, states)

    def acceptance_probability(self, states: np.ndarray, z: np.ndarray) -> np.ndarray:
        proposal = self.model.rho_H * states + self.model.beta * z
        return np.exp(np.minimum(0.0, self.model.phi(states) - self.model.phi(proposal)))

    def initial_states(self, replicas: int, rng: np.random.Generator, init: Any = None) -> np.ndarray:
        """None draws from the reference measure and runs burn_in steps"""
        if init is not None:
            start = np.asarray(init, dtype=float).reshape(self.model.dim)
            return np.tile(start, (replicas, 1))
        states = self.reference_sample(replicas, rng)
        if self.model.potential == 'zero':
            return states
        for _ in range(self.model.burn_in):
            states = self.step(states, rng)
        return states

    def step(self, states: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        z = self.reference_sample(len(states), rng)
        return self._move(states, z, np.log(rng.random(len(states))))

    def coupled_step(self, states: np.ndarray, states_prime: np.ndarray,
                     rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
        z = self.reference_sample(len(states), rng)
        log_u = np.log(rng.random(len(states)))
        return self._move(states, z, log_u), self._move(states_prime, z, log_u)

    def cost(self, states: np.ndarray, states_prime: np.ndarray) -> np.ndarray:
        return np.minimum(1.0, np.linalg.norm(states - states_prime, axis=1) / self.eps_H)

    def lyapunov(self, states: np.ndarray) -> np.ndarray:
        return np.exp(1 + np.linalg.norm(states, axis=1))

    def observable(self, name: str = 'tanh') -> Tuple[Observable, float, float, NormKind]:
        """tanh of the first coordinate; centered for symmetric potentials, N_{1,W^0} <= 2"""
        if name != 'tanh':
            raise InputValidationError(f"unknown pCN observable {name}")
        return (lambda s: np.tanh(s[:, 0])), 2.0, 0.0, NormKind.WASS_W_GAMMA
