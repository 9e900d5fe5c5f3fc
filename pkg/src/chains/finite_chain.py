"""
Finite-state chains with exact stationary law and exact certification
"""
import logging
import math
from dataclasses import dataclass
from typing import Any, Optional, Tuple

import numpy as np
from scipy.sparse.csgraph import connected_components

from ..config import Config
from ..constants.wasserstein import coupling_contraction_factor
from ..errors import CertificationFailure, InputValidationError, NumericalError
from ..models import DriftCertificate, WassCertificate, WassRate
from .base_chain import BaseChain

logger = logging.getLogger(__name__)

# Minorization constants equal to 1 are reported just below 1
EPS_CEILING = 1.0 - 1e-9
LAMBDA_GRID = np.linspace(0.01, 0.99, 99)


def finite_stationary(Q: np.ndarray) -> np.ndarray:
    """
    Stationary vector of an irreducible row-stochastic matrix

    Grassmann-Taksar-Heyman elimination; no subtractions, so entries stay accurate
    even for nearly decomposable chains.
    """
    Q = np.asarray(Q, dtype=float)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
        raise InputValidationError(f"transition matrix must be square, got shape {Q.shape}")
    if np.any(Q < 0) or np.any(np.abs(Q.sum(axis=1) - 1) > 1e-14 * Q.shape[0]):
        raise InputValidationError("transition matrix rows must be non-negative and sum to 1")
    n_components, _ = connected_components(Q > 0, directed=True, connection='strong')
    if n_components != 1:
        raise InputValidationError(f"transition matrix is reducible ({n_components} classes)")

    N = Q.shape[0]
    P = Q.copy()
    for n in range(N - 1, 0, -1):
        s = P[n, :n].sum()
        P[:n, n] /= s
        P[:n, :n] += np.outer(P[:n, n], P[n, :n])
    pi = np.zeros(N)
    pi[0] = 1.0
    for n in range(1, N):
        pi[n] = pi[:n] @ P[:n, n]
    pi /= pi.sum()

    residual = np.abs(pi @ Q - pi).max()
    if residual > Config.get_numerics('stationary_residual'):
        raise NumericalError(f"stationary residual {residual:.3g} above tolerance")
    return pi


class FiniteChain(BaseChain):
    """Finite-state chain with drift function V >= e and an observable g"""

    def __init__(self, Q: np.ndarray, V: Optional[np.ndarray] = None, g: Optional[np.ndarray] = None,
                 model_id: str = "finite"):
        super().__init__(model_id)
        self.Q = np.asarray(Q, dtype=float)
        self.pi = finite_stationary(self.Q)
        self.n_states = self.Q.shape[0]
        self.V = np.full(self.n_states, math.e) if V is None else np.asarray(V, dtype=float)
        if self.V.shape != (self.n_states,):
            raise InputValidationError(f"V must have {self.n_states} entries")
        if np.any(self.V < math.e * (1 - 1e-15)):
            raise InputValidationError("V must be >= e entrywise")
        self.g = np.zeros(self.n_states) if g is None else np.asarray(g, dtype=float)
        self._cumulative = np.cumsum(self.Q, axis=1)

    @property
    def pi_V(self) -> float:
        return math.fsum(self.pi * self.V)

    @property
    def pi_sqrtV(self) -> float:
        return math.fsum(self.pi * np.sqrt(self.V))

    @property
    def g_bar(self) -> np.ndarray:
        return self.g - math.fsum(self.pi * self.g)

    def observable(self, g: Optional[np.ndarray] = None):
        """Vectorized centered observable state -> g_bar(state)"""
        values = self.g_bar if g is None else np.asarray(g, dtype=float) - math.fsum(self.pi * g)
        return lambda states: values[states]

    def matrix_power(self, m: int) -> np.ndarray:
        return np.linalg.matrix_power(self.Q, m)

    # Norms
    def v_norm(self, f: np.ndarray, power: float) -> float:
        """sup |f| / V^power"""
        return float(np.max(np.abs(f) / self.V ** power))

    def w_norm(self, f: np.ndarray, gamma: float) -> float:
        """sup |f| / W^gamma with W = log V >= 1"""
        return float(np.max(np.abs(f) / np.log(self.V) ** gamma))

    def wass_norm(self, f: np.ndarray, beta: float, weight: str = 'V', gamma: float = 1.0) -> float:
        """
        N_{beta, weight}(f) for the discrete cost c(x, x') = 1{x != x'}

        Args:
            weight: 'V' for the drift function, 'W' for W^gamma = (log V)^gamma
        """
        if weight == 'V':
            w = self.V
        elif weight == 'W':
            w = np.log(self.V) ** gamma
        else:
            raise InputValidationError(f"unknown weight {weight}")
        f = np.asarray(f, dtype=float)
        level = float(np.max(np.abs(f) / w ** beta))
        diffs = np.abs(f[:, None] - f[None, :])
        w_bar = (w[:, None] + w[None, :]) / 2
        off_diagonal = ~np.eye(self.n_states, dtype=bool)
        if not off_diagonal.any():
            return level
        return max(level, float(np.max(diffs[off_diagonal] / w_bar[off_diagonal] ** beta)))

    # Simulation
    def initial_states(self, replicas: int, rng: np.random.Generator, init: Any = None) -> np.ndarray:
        if init is None:
            return rng.choice(self.n_states, size=replicas, p=self.pi)
        if isinstance(init, (int, np.integer)):
            return np.full(replicas, int(init))
        return rng.choice(self.n_states, size=replicas, p=np.asarray(init, dtype=float))

    def _draw(self, states: np.ndarray, uniforms: np.ndarray) -> np.ndarray:
        nxt = (uniforms[:, None] > self._cumulative[states]).sum(axis=1)
        return np.minimum(nxt, self.n_states - 1)

    def step(self, states: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        return self._draw(states, rng.random(len(states)))

    def coupled_step(self, states: np.ndarray, states_prime: np.ndarray,
                     rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
        """Independent moves until the two copies meet, then a shared move"""
        u = rng.random(len(states))
        u_prime = rng.random(len(states))
        met = states == states_prime
        nxt = self._draw(states, u)
        nxt_prime = np.where(met, nxt, self._draw(states_prime, u_prime))
        return nxt, nxt_prime

    def cost(self, states: np.ndarray, states_prime: np.ndarray) -> np.ndarray:
        return (states != states_prime).astype(float)

    def lyapunov(self, states: np.ndarray) -> np.ndarray:
        return self.V[states]

    # Exact coupling kernel
    def pair_kernel(self) -> np.ndarray:
        """Transition matrix of the coupling on pairs, pair (x, x') indexed as x * S + x'"""
        S = self.n_states
        K = np.einsum('ac,bd->abcd', self.Q, self.Q)
        for x in range(S):
            K[x, x] = 0.0
            K[x, x, np.arange(S), np.arange(S)] = self.Q[x]
        return K.reshape(S * S, S * S)

    def to_dict(self):
        return {'model': 'finite', 'model_id': self.model_id, 'Q': self.Q.tolist(),
                'V': self.V.tolist(), 'g': self.g.tolist(), 'pi': self.pi.tolist()}


@dataclass
class DriftFit:
    lam: float
    b: float
    witness: int
    QV: np.ndarray


@dataclass
class SmallSetFit:
    eps: float
    nu: np.ndarray
    small_set: np.ndarray


def _drift_b(QV: np.ndarray, V: np.ndarray, lam: float) -> Tuple[float, int]:
    excess = QV - lam * V
    witness = int(np.argmax(excess))
    return max(float(excess[witness]), 0.0), witness


def certify_drift(chain: FiniteChain, target_lambda: Optional[float] = None) -> DriftFit:
    """
    Fit QV <= lambda V + b exactly

    With target_lambda, b = max_x (QV - lambda V)^+. Without it, lambda is picked on a
    grid to minimize b / (1 - lambda), the quantity that sets the smallest admissible d.
    """
    QV = chain.Q @ chain.V
    if target_lambda is not None:
        if not 0 < target_lambda < 1:
            raise InputValidationError(f"target_lambda must lie in (0, 1), got {target_lambda}")
        b, witness = _drift_b(QV, chain.V, target_lambda)
        return DriftFit(lam=float(target_lambda), b=b, witness=witness, QV=QV)

    best = None
    for lam in LAMBDA_GRID:
        b, witness = _drift_b(QV, chain.V, lam)
        score = b / (1 - lam)
        if best is None or score < best[0]:
            best = (score, float(lam), b, witness)
    _, lam, b, witness = best
    chain.logger.debug(f"certify_drift: lambda={lam:.4g}, b={b:.6g}, witness={witness}")
    return DriftFit(lam=lam, b=b, witness=witness, QV=QV)


def certify_small_set(chain: FiniteChain, m: int, d: float) -> SmallSetFit:
    """Doeblin minorization eps = sum_y min_{x in C} Q^m(x, y) on C = {V <= d}"""
    if int(m) != m or m < 1:
        raise InputValidationError(f"m must be an integer >= 1, got {m}")
    small_set = np.flatnonzero(chain.V <= d)
    if small_set.size == 0:
        raise InputValidationError(f"level set {{V <= {d}}} is empty")
    Qm = chain.matrix_power(int(m))
    floor = Qm[small_set].min(axis=0)
    eps = float(floor.sum())
    if eps <= 0:
        raise CertificationFailure(f"no ({m}, eps)-minorization on {{V <= {d}}}",
                                   best_attempt={'m': int(m), 'd': d, 'eps': 0.0})
    return SmallSetFit(eps=eps, nu=floor / eps, small_set=small_set)


def _level(fit: DriftFit, chain: FiniteChain) -> float:
    """Smallest d covering every state that keeps lambda + 2b/(1+d) < 1"""
    return max(float(chain.V.max()), 2 * fit.b / (1 - fit.lam))


def certify(chain: FiniteChain, m: Optional[int] = None, target_lambda: Optional[float] = None,
            max_m: int = 10) -> DriftCertificate:
    """
    Drift and minorization certificate for a finite chain

    With m=None the smallest m <= max_m giving a positive minorization is used.
    """
    fit = certify_drift(chain, target_lambda)
    d = _level(fit, chain)
    candidates = [int(m)] if m is not None else range(1, max_m + 1)
    best_attempt = {'lambda': fit.lam, 'b': fit.b, 'd': d}
    for mm in candidates:
        try:
            small = certify_small_set(chain, mm, d)
        except CertificationFailure:
            continue
        cert = DriftCertificate(lam=fit.lam, b=fit.b, d=d, m=mm,
                                eps=min(small.eps, EPS_CEILING), pi_V=chain.pi_V)
        cert.validate()
        chain.logger.info(f"certified: lambda={cert.lam:.4g}, b={cert.b:.6g}, d={d:.6g}, "
                          f"m={mm}, eps={cert.eps:.6g}")
        return cert
    raise CertificationFailure(f"no minorization found for m in {list(candidates)}", best_attempt)


def certify_coupling(chain: FiniteChain, m: int, d: float) -> Tuple[float, float]:
    """
    (kappa_K, eps) for the independent-until-meeting coupling and cost 1{x != x'}

    eps = 1 - max over distinct pairs in {V <= d}^2 of P(X_m != X'_m), from the exact m-step pair kernel.
    """
    S = chain.n_states
    K = chain.pair_kernel()
    cost = (~np.eye(S, dtype=bool)).astype(float).ravel()
    one_step = K @ cost
    kappa = max(1.0, float(np.max(np.divide(one_step, cost, out=np.zeros_like(cost), where=cost > 0))))
    m_step = np.linalg.matrix_power(K, int(m)) @ cost
    inside = np.flatnonzero(chain.V <= d)
    pairs = [x * S + y for x in inside for y in inside if x != y]
    if not pairs:
        return kappa, EPS_CEILING
    eps = 1.0 - float(m_step[pairs].max())
    if eps <= 0:
        raise CertificationFailure(f"coupling does not contract on {{V <= {d}}}^2 in {m} steps",
                                   best_attempt={'m': int(m), 'd': d, 'eps': eps})
    return kappa, min(eps, EPS_CEILING)


def certify_wasserstein(chain: FiniteChain, m: Optional[int] = None,
                        target_lambda: Optional[float] = None, max_m: int = 10) -> WassCertificate:
    """Drift plus coupling certificate for the discrete cost"""
    fit = certify_drift(chain, target_lambda)
    d = _level(fit, chain)
    candidates = [int(m)] if m is not None else range(1, max_m + 1)
    for mm in candidates:
        try:
            kappa, eps = certify_coupling(chain, mm, d)
        except CertificationFailure:
            continue
        cert = WassCertificate(lam=fit.lam, b=fit.b, d=d, m=mm, eps=eps,
                               pi_V=chain.pi_V, kappa_K=kappa)
        return cert.validate()
    raise CertificationFailure(f"coupling certificate not found for m in {list(candidates)}",
                               {'lambda': fit.lam, 'b': fit.b, 'd': d})


def coupling_contraction_check(chain: FiniteChain, rate: WassRate, q: int, p: int,
                               n_max: int) -> Tuple[bool, float]:
    """
    Check E^K_{x,x'}[c^{1/2} V_bar^{p/(4q)}(X_n, X'_n)] <= factor(n) c^{1/2} V_bar^{p/(4q)}(x, x')
    exactly for m <= n <= n_max

    Returns:
        (passed, worst ratio of left side to right side)
    """
    if not 1 <= p <= 2 * q:
        raise InputValidationError(f"p must lie in [1, 2q], got p={p}, q={q}")
    S = chain.n_states
    K = chain.pair_kernel()
    cost = (~np.eye(S, dtype=bool)).astype(float)
    v_bar = (chain.V[:, None] + chain.V[None, :]) / 2
    F = (np.sqrt(cost) * v_bar ** (p / (4 * q))).ravel()
    off = F > 0
    worst = 0.0
    propagated = F.copy()
    for n in range(1, n_max + 1):
        propagated = K @ propagated
        if n < rate.m:
            continue
        rhs = coupling_contraction_factor(rate, q, p, n) * F
        if np.any(propagated[~off] > 0):
            return False, math.inf
        worst = max(worst, float(np.max(propagated[off] / rhs[off])))
    return worst <= 1.0, worst


def random_certified_chain(rng: np.random.Generator, n_states: int, model_id: str = "random") -> FiniteChain:
    """Random chain with positive entries, a random V >= e and a random observable"""
    if n_states < 1:
        raise InputValidationError(f"n_states must be >= 1, got {n_states}")
    rows = rng.dirichlet(np.ones(n_states), size=n_states)
    Q = 0.7 * rows + 0.3 / n_states
    Q /= Q.sum(axis=1, keepdims=True)
    V = np.exp(1.0 + rng.uniform(0.0, 2.0, size=n_states))
    g = rng.normal(size=n_states)
    return FiniteChain(Q, V, g, model_id=model_id)
