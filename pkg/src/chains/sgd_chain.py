"""
Constant-stepsize SGD on a strongly convex quadratic family
"""
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from scipy.stats import ortho_group

from ..errors import InputValidationError
from ..models import DriftCertificate, NormKind, WassCertificate
from .base_chain import BaseChain, Observable

logger = logging.getLogger(__name__)

SIGMA_TILDE_FACTOR = 2 * (math.e + 1) / (math.e - 1)
HESSIAN_FLAG = "hessian-lipschitz-assumed"


@dataclass
class SgdModel:
    """
    Sample field H_theta(Y) = A_Y (theta - theta*) + xi_Y

    A_Y = O diag(s) O^T with O Haar-orthogonal and s uniform on [mu, L)^dim, drawn
    afresh for every sample; xi is a Gaussian radially clipped at sigma sqrt(2 log 2),
    which makes it norm sub-Gaussian with variance factor sigma^2.
    """
    mu: float
    L: float
    sigma2: float
    gamma_step: float
    dim: int = 1
    theta_star: Optional[List[float]] = None
    hessian_lipschitz: float = 0.0
    burn_in: int = 500

    def __post_init__(self):
        if self.theta_star is None:
            self.theta_star = [0.0] * self.dim
        if len(self.theta_star) != self.dim:
            raise InputValidationError(f"theta_star must have {self.dim} entries")

    @property
    def kappa_f(self) -> float:
        return self.mu * self.L / (self.mu + self.L)

    @property
    def gamma_f(self) -> float:
        return min(0.5, self.kappa_f / 2, 1.0 / (self.mu + self.L))

    @property
    def sigma_tilde2(self) -> float:
        return self.sigma2 * SIGMA_TILDE_FACTOR

    @property
    def mean_curvature(self) -> float:
        """E[A_Y] = (mu + L) / 2 times the identity"""
        return (self.mu + self.L) / 2

    @property
    def noise_radius(self) -> float:
        return math.sqrt(self.sigma2 * 2 * math.log(2.0))

    def validate(self) -> 'SgdModel':
        if not 0 < self.mu < self.L:
            raise InputValidationError(f"need 0 < mu < L, got mu={self.mu}, L={self.L}")
        if self.sigma2 < 0:
            raise InputValidationError(f"sigma2 must be >= 0, got {self.sigma2}")
        if self.dim < 1:
            raise InputValidationError(f"dim must be >= 1, got {self.dim}")
        if not 0 < self.gamma_step <= self.gamma_f:
            raise InputValidationError(
                f"gamma_step must lie in (0, {self.gamma_f:.6g}], got {self.gamma_step}")
        return self

    def to_dict(self) -> Dict[str, Any]:
        return {'model': 'sgd', **asdict(self)}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'SgdModel':
        params = {k: v for k, v in data.items() if k != 'model'}
        return cls(**params)


@dataclass
class SgdConstants:
    sigma_tilde2: float
    kappa_f: float
    gamma_f: float
    drift: DriftCertificate
    coupling: WassCertificate
    R: float
    bias_bound: float
    flags: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {'sigma_tilde2': self.sigma_tilde2, 'kappa_f': self.kappa_f, 'gamma_f': self.gamma_f,
                'drift': self.drift.to_dict(), 'coupling': self.coupling.to_dict(),
                'R': self.R, 'bias_bound': self.bias_bound, 'flags': list(self.flags)}


def bias_bound(model: SgdModel) -> float:
    """gamma sigma^2 / [mu^2 (1 - gamma L)], a bound on ||theta* - theta_bar_gamma||"""
    if not model.gamma_step * model.L < 1:
        raise InputValidationError("bias bound needs gamma_step < 1/L")
    return model.gamma_step * model.sigma2 / (model.mu ** 2 * (1 - model.gamma_step * model.L))


def sgd_constants(model: SgdModel) -> SgdConstants:
    """Drift, coupling and bias constants of the SGD chain"""
    model.validate()
    gamma = model.gamma_step
    kappa = model.kappa_f
    s2 = model.sigma_tilde2
    lam = math.exp(-gamma * kappa / (2 * s2))
    b = (gamma * (1 / kappa + 2 * gamma + kappa / (2 * s2))
         * math.exp(2 + 1 / (2 * s2) + (2 * gamma * kappa + 1) / kappa ** 2))

    eps = 2 * model.mu * gamma * (1 - gamma * model.L / 2)
    R = math.log(4 * b / (1 - lam) - 1)
    m = math.ceil(math.log(4 * R * R) / -math.log1p(-eps) + 1)
    # C_bar = B(theta*, R)^2 is the level set {V <= d}^2
    d = math.exp(1 + R * R / s2)

    drift = DriftCertificate(lam=lam, b=b, d=d, m=m, eps=eps).validate()
    coupling = WassCertificate(lam=lam, b=b, d=d, m=m, eps=eps, kappa_K=1.0).validate()
    logger.info(f"sgd_constants: lambda={lam:.6g}, b={b:.6g}, R={R:.6g}, m={m}, eps={eps:.6g}")
    return SgdConstants(sigma_tilde2=s2, kappa_f=kappa, gamma_f=model.gamma_f, drift=drift,
                        coupling=coupling, R=R, bias_bound=bias_bound(model), flags=[HESSIAN_FLAG])


class SgdChain(BaseChain):
    """SGD recursion theta_{k+1} = theta_k - gamma H_{theta_k}(Y_{k+1})"""

    def __init__(self, model: SgdModel, model_id: str = "sgd"):
        super().__init__(model_id)
        self.model = model.validate()
        self.theta_star = np.asarray(model.theta_star, dtype=float)

    def curvature(self, replicas: int, rng: np.random.Generator) -> np.ndarray:
        """One sample curvature A_Y per replica, shape (replicas, dim, dim)"""
        dim = self.model.dim
        s = rng.uniform(self.model.mu, self.model.L, size=(replicas, dim))
        if dim == 1:
            return s[:, :, None]
        rotations = ortho_group.rvs(dim, size=replicas, random_state=rng).reshape(replicas, dim, dim)
        return np.einsum('rij,rj,rkj->rik', rotations, s, rotations)

    def sample_field(self, states: np.ndarray, curvature: np.ndarray, noise: np.ndarray) -> np.ndarray:
        """H_theta(Y) per replica; theta* is a zero of the noiseless field for every sample"""
        return np.einsum('rij,rj->ri', curvature, states - self.theta_star) + noise

    def noise(self, replicas: int, rng: np.random.Generator) -> np.ndarray:
        z = rng.normal(scale=math.sqrt(self.model.sigma2 / self.model.dim),
                       size=(replicas, self.model.dim))
        norms = np.linalg.norm(z, axis=1, keepdims=True)
        radius = self.model.noise_radius
        scale = np.minimum(1.0, np.divide(radius, norms, out=np.ones_like(norms), where=norms > 0))
        return z * scale

    def _move(self, states: np.ndarray, curvature: np.ndarray, noise: np.ndarray) -> np.ndarray:
        return states - self.model.gamma_step * self.sample_field(states, curvature, noise)

    def initial_states(self, replicas: int, rng: np.random.Generator, init: Any = None) -> np.ndarray:
        """None runs burn_in steps from theta*; otherwise every replica starts at init"""
        if init is not None:
            start = np.asarray(init, dtype=float).reshape(self.model.dim)
            return np.tile(start, (replicas, 1))
        states = np.tile(self.theta_star, (replicas, 1))
        for _ in range(self.model.burn_in):
            states = self.step(states, rng)
        return states

    def step(self, states: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        curvature = self.curvature(len(states), rng)
        return self._move(states, curvature, self.noise(len(states), rng))

    def coupled_step(self, states: np.ndarray, states_prime: np.ndarray,
                     rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
        """Synchronous coupling: both copies use the same sample (A_Y, xi_Y)"""
        curvature = self.curvature(len(states), rng)
        noise = self.noise(len(states), rng)
        return self._move(states, curvature, noise), self._move(states_prime, curvature, noise)

    def cost(self, states: np.ndarray, states_prime: np.ndarray) -> np.ndarray:
        return np.minimum(1.0, np.sum((states - states_prime) ** 2, axis=1))

    def lyapunov(self, states: np.ndarray) -> np.ndarray:
        return np.exp(1 + np.sum((states - self.theta_star) ** 2, axis=1) / self.model.sigma_tilde2)

    def co_coercivity_gap(self, rng: np.random.Generator, pairs: int = 100) -> float:
        """
        min over random pairs and samples of <H_x(Y) - H_y(Y), x - y> - ||H_x(Y) - H_y(Y)||^2 / L

        Each pair shares one sample Y; the gap is non-negative when every sample field is
        1/L co-coercive.
        """
        x = rng.normal(size=(pairs, self.model.dim))
        y = rng.normal(size=(pairs, self.model.dim))
        curvature = self.curvature(pairs, rng)
        noise = self.noise(pairs, rng)
        diff = self.sample_field(x, curvature, noise) - self.sample_field(y, curvature, noise)
        inner = np.sum(diff * (x - y), axis=1)
        return float(np.min(inner - np.sum(diff ** 2, axis=1) / self.model.L))

    def observable(self, name: str = 'tanh', direction: Optional[np.ndarray] = None) -> Tuple[Observable, float, float, NormKind]:
        """
        Observable centered under the stationary law, with a norm bound

        Returns:
            (g, norm bound, gamma, norm kind); 'tanh' is tanh(<h, theta - theta*>) with
            N_{1,W^0} <= 2, 'linear' is <h, theta - theta*> with N_{1,W^{1/2}} <= max(1, 2 sigma_tilde)
        """
        h = np.zeros(self.model.dim) if direction is None else np.asarray(direction, dtype=float)
        if direction is None:
            h[0] = 1.0
        h = h / np.linalg.norm(h)
        if name == 'tanh':
            return (lambda s: np.tanh((s - self.theta_star) @ h)), 2.0, 0.0, NormKind.WASS_W_GAMMA
        if name == 'linear':
            norm = max(1.0, 2 * math.sqrt(self.model.sigma_tilde2))
            return (lambda s: (s - self.theta_star) @ h), norm, 0.5, NormKind.WASS_W_GAMMA
        raise InputValidationError(f"unknown SGD observable {name}")


def sgd_polyak_ruppert(chain: SgdChain, n: int, rng: np.random.Generator,
                       replicas: int = 1, init: Any = None) -> np.ndarray:
    """Averaged iterates n^{-1} sum_{k<n} theta_k, one row per replica"""
    if n < 1:
        raise InputValidationError(f"n must be >= 1, got {n}")
    states = chain.initial_states(replicas, rng, init)
    total = np.zeros_like(states)
    for _ in range(n):
        total += states
        states = chain.step(states, rng)
    return total / n
