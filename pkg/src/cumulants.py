"""
Exact moments, centered moments and cumulants of additive functionals on finite chains
"""
import itertools
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import comb

from .combinatorics import compositions, gaussian_moment, moments_to_cumulants, set_partitions
from .config import Config
from .constants.vgeom import envelope_constants_v, geometric_rate
from .errors import BudgetExceededError, InputValidationError
from .models import GeomRate

logger = logging.getLogger(__name__)

MAX_TUPLE_ORDER = 8

InitLaw = Union[None, int, Sequence[float], np.ndarray]


@dataclass(frozen=True)
class IndexTuple:
    """Times (t_1, ..., t_k) paired with per-state observables (h_1, ..., h_k)"""
    times: Tuple[int, ...]
    observables: Tuple[np.ndarray, ...]

    def __post_init__(self):
        object.__setattr__(self, 'times', tuple(int(t) for t in self.times))
        object.__setattr__(self, 'observables',
                           tuple(np.asarray(h, dtype=float) for h in self.observables))
        if len(self.times) != len(self.observables):
            raise InputValidationError(
                f"{len(self.times)} times but {len(self.observables)} observables")
        if len(self.times) == 0:
            raise InputValidationError("index tuple must be non-empty")
        if min(self.times) < 0:
            raise InputValidationError(f"times must be >= 0, got {self.times}")

    def __len__(self) -> int:
        return len(self.times)

    @property
    def is_sorted(self) -> bool:
        return all(a <= b for a, b in zip(self.times, self.times[1:]))

    @property
    def gap(self) -> int:
        """Largest gap between consecutive times; 0 for a single time"""
        if len(self.times) < 2:
            return 0
        return max(b - a for a, b in zip(self.times, self.times[1:]))

    def permuted(self, order: Sequence[int]) -> 'IndexTuple':
        return IndexTuple(tuple(self.times[i] for i in order),
                          tuple(self.observables[i] for i in order))


@dataclass
class CheckResult:
    """Two sides of an exact identity and whether they agree"""
    lhs: float
    rhs: float
    relative_error: float
    passed: bool

    def to_dict(self):
        return {'lhs': self.lhs, 'rhs': self.rhs,
                'relative_error': self.relative_error, 'passed': self.passed}


@dataclass
class LeonovDecomposition(CheckResult):
    """Leonov-Shiryaev assembly of E_pi[S_n^{2q}] next to the exact DP value"""
    leading: float = 0.0
    remainder: float = 0.0
    reduced: float = 0.0


@dataclass
class SpectralDensity:
    lambda_grid: np.ndarray
    values: np.ndarray
    truncation: int
    slack: float
    f_min: float


def _relative_error(lhs: float, rhs: float) -> float:
    scale = max(abs(lhs), abs(rhs))
    if scale == 0:
        return 0.0
    return abs(lhs - rhs) / scale


def _agree(lhs: float, rhs: float, rtol: float, atol: float = 1e-15) -> bool:
    return abs(lhs - rhs) <= rtol * max(abs(lhs), abs(rhs)) + atol


def _expect(pi: np.ndarray, f: np.ndarray) -> float:
    """pi(f) with compensated summation"""
    return math.fsum(pi * f)


def _propagate(Q: np.ndarray, f: np.ndarray, steps: int) -> np.ndarray:
    """Q^steps f"""
    for _ in range(steps):
        f = Q @ f
    return f


def _law(chain, init: InitLaw) -> np.ndarray:
    if init is None:
        return chain.pi.copy()
    if isinstance(init, (int, np.integer)):
        if not 0 <= init < chain.n_states:
            raise InputValidationError(f"initial state {init} outside 0..{chain.n_states - 1}")
        law = np.zeros(chain.n_states)
        law[int(init)] = 1.0
        return law
    law = np.asarray(init, dtype=float)
    if law.shape != (chain.n_states,) or np.any(law < 0) or abs(law.sum() - 1) > 1e-12:
        raise InputValidationError("initial law must be a probability vector over the states")
    return law


def _check_order(tup: IndexTuple):
    if len(tup) > MAX_TUPLE_ORDER:
        raise InputValidationError(f"tuple order {len(tup)} exceeds {MAX_TUPLE_ORDER}")


def centered_moment(chain, tup: IndexTuple) -> float:
    """
    Exact centered moment E_pi-bar[h_1(X_{t_1}), ..., h_k(X_{t_k})]

    The backward recursion Z_l = h_l Z_{l+1} - E_pi[h_l Z_{l+1}] is carried as
    functions of the state at time t_{l-1}: phi_l = h_l psi_{l+1} - pi(h_l psi_{l+1})
    and psi_l = Q^{t_l - t_{l-1}} phi_l.
    """
    _check_order(tup)
    if not tup.is_sorted:
        raise InputValidationError(f"centered moments need nondecreasing times, got {tup.times}")
    Q, pi = chain.Q, chain.pi
    k = len(tup)
    psi = np.ones(chain.n_states)
    for ell in range(k - 1, 0, -1):
        weighted = tup.observables[ell] * psi
        phi = weighted - _expect(pi, weighted)
        psi = _propagate(Q, phi, tup.times[ell] - tup.times[ell - 1])
    return _expect(pi, tup.observables[0] * psi)


def markov_reduction_check(chain, tup: IndexTuple, rtol: float = 1e-12) -> CheckResult:
    """
    Compare the centered moment with its reduced form where h_k is replaced by
    Q^{t_k - t_{k-1}} h_k - pi(h_k) and merged into h_{k-1}
    """
    if len(tup) < 2:
        raise InputValidationError("markov reduction needs k >= 2")
    lhs = centered_moment(chain, tup)
    h_last = tup.observables[-1]
    reduced_last = (_propagate(chain.Q, h_last, tup.times[-1] - tup.times[-2])
                    - _expect(chain.pi, h_last))
    merged = IndexTuple(tup.times[:-1],
                        tup.observables[:-2] + (tup.observables[-2] * reduced_last,))
    rhs = centered_moment(chain, merged)
    return CheckResult(lhs=lhs, rhs=rhs, relative_error=_relative_error(lhs, rhs),
                       passed=_agree(lhs, rhs, rtol))


def _raw_joint_moment(chain, times: Sequence[int], observables: Sequence[np.ndarray]) -> float:
    """E_pi[prod_j h_j(X_{t_j})] for times in any order"""
    order = sorted(range(len(times)), key=lambda i: times[i])
    psi = np.ones(chain.n_states)
    for pos in range(len(order) - 1, -1, -1):
        i = order[pos]
        psi = observables[i] * psi
        if pos > 0:
            psi = _propagate(chain.Q, psi, times[i] - times[order[pos - 1]])
    return _expect(chain.pi, psi)


def joint_cumulant(chain, tup: IndexTuple) -> float:
    """Joint cumulant Gamma(h_1(X_{t_1}), ..., h_k(X_{t_k})) through set partitions"""
    _check_order(tup)
    total = 0.0
    for partition in set_partitions(range(len(tup))):
        r = len(partition)
        product = 1.0
        for block in partition:
            product *= _raw_joint_moment(chain, [tup.times[i] for i in block],
                                         [tup.observables[i] for i in block])
        total += (-1) ** (r - 1) * math.factorial(r - 1) * product
    return total


def centered_observable(chain, g: np.ndarray) -> np.ndarray:
    g = np.asarray(g, dtype=float)
    if g.shape != (chain.n_states,):
        raise InputValidationError(f"observable must have {chain.n_states} entries, got {g.shape}")
    return g - _expect(chain.pi, g)


def exact_sn_moments_from(chain, g: np.ndarray, n: int, max_power: int,
                          init: InitLaw = None) -> List[float]:
    """
    Exact E_xi[S_n^j], j = 0..max_power, with S_n = sum_{l<n} (g(X_l) - pi(g))

    Propagates the table E[S_t^j 1{X_t = x}] one step at a time with the binomial
    expansion of (S_t + g_bar(X_t))^j.

    Args:
        init: None for the stationary law, a state index, or a probability vector
    """
    if n < 1:
        raise InputValidationError(f"n must be >= 1, got {n}")
    if max_power < 0:
        raise InputValidationError(f"max_power must be >= 0, got {max_power}")
    S = chain.n_states
    cost = n * (max_power + 1) ** 2 * S * S
    budget = Config.get_numerics('dp_budget')
    if cost > budget:
        raise BudgetExceededError(f"moment DP needs ~{cost:.3g} operations, budget is {budget:.3g}")

    g_bar = centered_observable(chain, g)
    powers = np.vstack([g_bar ** j for j in range(max_power + 1)])
    binom = np.array([[comb(j, i, exact=True) for i in range(max_power + 1)]
                      for j in range(max_power + 1)], dtype=float)
    table = np.zeros((max_power + 1, S))
    table[0] = _law(chain, init)
    for _ in range(n):
        shifted = np.empty_like(table)
        for j in range(max_power + 1):
            shifted[j] = np.sum(binom[j, :j + 1, None] * powers[j::-1] * table[:j + 1], axis=0)
        table = shifted @ chain.Q
    return [math.fsum(row) for row in table]


def exact_sn_moments(chain, g: np.ndarray, n: int, max_power: int) -> List[float]:
    """Exact E_pi[S_n^j], j = 0..max_power"""
    return exact_sn_moments_from(chain, g, n, max_power, init=None)


def exact_variance(chain, g: np.ndarray, n: int) -> float:
    """Var_pi(S_n); S_n is centered under pi, so this is its second moment"""
    return exact_sn_moments(chain, g, n, 2)[2]


def autocovariance(chain, g: np.ndarray, lag: int) -> float:
    """Stationary autocovariance Cov_pi(g(X_0), g(X_lag))"""
    g_bar = centered_observable(chain, g)
    return _expect(chain.pi, g_bar * _propagate(chain.Q, g_bar, abs(int(lag))))


def sn_cumulants(chain, g: np.ndarray, n: int, k_max: int) -> List[float]:
    """Exact cumulants Gamma_{pi,1..k_max}(S_n)"""
    if k_max < 1:
        raise InputValidationError(f"k_max must be >= 1, got {k_max}")
    moments = exact_sn_moments(chain, g, n, k_max)
    return moments_to_cumulants(moments[1:])


def leonov_check(chain, g: np.ndarray, n: int, q: int, rtol: float = 1e-10) -> LeonovDecomposition:
    """
    Assemble E_pi[S_n^{2q}] from the cumulants of S_n and compare with the moment DP

    The full sum runs over all compositions of 2q; the reduced form keeps parts >= 2
    only, whose u = q term is m_q Var_pi(S_n)^q.
    """
    if int(q) != q or q < 1:
        raise InputValidationError(f"q must be an integer >= 1, got {q}")
    power = 2 * q
    cumulants = sn_cumulants(chain, g, n, power)
    exact = exact_sn_moments(chain, g, n, power)[power]
    kappa = [0.0] + cumulants

    full_terms = []
    for u in range(1, power + 1):
        for cut in itertools.combinations(range(1, power), u - 1):
            bounds = (0,) + cut + (power,)
            parts = [bounds[i + 1] - bounds[i] for i in range(u)]
            coeff = math.factorial(power) / (math.factorial(u) * math.prod(math.factorial(k) for k in parts))
            full_terms.append(coeff * math.prod(kappa[k] for k in parts))
    assembled = math.fsum(full_terms)

    leading = gaussian_moment(q) * kappa[2] ** q
    remainder_terms = []
    for u in range(1, q):
        for composition in compositions(u, q):
            coeff = math.factorial(power) / (math.factorial(u)
                                             * math.prod(math.factorial(k) for k in composition.parts))
            remainder_terms.append(coeff * math.prod(kappa[k] for k in composition.parts))
    remainder = math.fsum(remainder_terms)
    reduced = leading + remainder

    relative = max(_relative_error(exact, assembled), _relative_error(exact, reduced))
    passed = _agree(exact, assembled, rtol) and _agree(exact, reduced, rtol)
    if not passed:
        logger.warning(f"leonov_check: n={n}, q={q}, exact={exact:.17g}, assembled={assembled:.17g}")
    return LeonovDecomposition(lhs=exact, rhs=assembled, relative_error=relative, passed=passed,
                               leading=leading, remainder=remainder, reduced=reduced)


def _chain_rate(chain, rate: Optional[GeomRate], pi_V: Optional[float]) -> Tuple[GeomRate, float]:
    if rate is not None:
        return rate, pi_V if pi_V is not None else _expect(chain.pi, chain.V)
    from .chains.finite_chain import certify
    cert = certify(chain)
    return geometric_rate(cert), cert.pi_V


def spectral_density(chain, g: np.ndarray, lambda_grid: Sequence[float],
                     rate: Optional[GeomRate] = None, pi_V: Optional[float] = None) -> SpectralDensity:
    """
    Truncated spectral density f(g, lambda) with a certified truncation slack

    The lag sum stops at the smallest L with c pi(V) rho^{L/2} < 1e-12 Var_pi(g);
    the slack bounds the dropped lags by the V-geometric decay of Q^l g_bar.
    f_min is the grid minimum minus the slack, floored at 0.
    """
    grid = np.asarray(lambda_grid, dtype=float)
    g_bar = centered_observable(chain, g)
    var = _expect(chain.pi, g_bar * g_bar)
    if var == 0:
        return SpectralDensity(grid, np.zeros_like(grid), 0, 0.0, 0.0)

    rate, pi_V = _chain_rate(chain, rate, pi_V)
    target = math.log(1e-12 * var) - math.log(rate.c * pi_V)
    truncation = max(0, math.ceil(2 * target / rate.log_rho) + 1) if target < 0 else 0
    budget = Config.get_numerics('dp_budget')
    if truncation * chain.n_states ** 2 > budget:
        raise BudgetExceededError(f"spectral truncation L={truncation} exceeds the DP budget")

    covariances = np.empty(truncation + 1)
    propagated = g_bar.copy()
    for lag in range(truncation + 1):
        covariances[lag] = _expect(chain.pi, g_bar * propagated)
        propagated = chain.Q @ propagated
    lags = np.arange(1, truncation + 1)
    values = (covariances[0] + 2 * np.cos(np.outer(grid, lags)) @ covariances[1:]) / (2 * math.pi)

    # |cov(l)| <= c ||g_bar||_V pi(|g_bar| (V + pi(V))) rho^l
    weight = _expect(chain.pi, np.abs(g_bar) * (chain.V + pi_V))
    amplitude = rate.c * chain.v_norm(g_bar, 1.0) * weight
    tail = amplitude * math.exp((truncation + 1) * rate.log_rho) / (1 - rate.rho)
    slack = 2 * tail / (2 * math.pi)

    f_min = float(values.min()) - slack
    if f_min <= 0:
        logger.warning(f"spectral_density: slack {slack:.3g} exceeds the grid minimum, f_min set to 0")
        f_min = 0.0
    logger.debug(f"spectral_density: L={truncation}, slack={slack:.3g}, f_min={f_min:.6g}")
    return SpectralDensity(grid, values, truncation, slack, f_min)


def envelope_check(chain, tup: IndexTuple, rate: GeomRate, pi_V: float, q: int,
                   gamma: Optional[float] = None) -> Tuple[float, float]:
    """
    (|centered moment|, D^k (k!)^alpha prod Psi(h_j) rho_*^{gap})

    Psi is the V^{1/(2q)} norm, or the W^gamma norm when gamma is given.
    """
    env = envelope_constants_v(rate, pi_V, gamma)
    k = len(tup)
    lhs = abs(centered_moment(chain, tup))
    if gamma is None:
        norms = [chain.v_norm(h, 1.0 / (2 * q)) for h in tup.observables]
    else:
        norms = [chain.w_norm(h, gamma) for h in tup.observables]
    rhs = (env.D ** k * math.factorial(k) ** env.alpha * math.prod(norms)
           * env.rho_star ** tup.gap)
    return lhs, rhs


def v_norm_distance(chain, n: int, x: int, alpha: float = 1.0) -> float:
    """||delta_x Q^n - pi||_{V^alpha} computed exactly"""
    if n < 0:
        raise InputValidationError(f"n must be >= 0, got {n}")
    return float(v_norm_distances(chain, n, x, alpha)[-1])


def v_norm_distances(chain, n_max: int, x: int, alpha: float = 1.0) -> np.ndarray:
    """||delta_x Q^n - pi||_{V^alpha} for n = 0..n_max"""
    if n_max < 0:
        raise InputValidationError(f"n_max must be >= 0, got {n_max}")
    weights = chain.V ** alpha
    row = _law(chain, int(x))
    distances = np.empty(n_max + 1)
    for n in range(n_max + 1):
        distances[n] = math.fsum(np.abs(row - chain.pi) * weights)
        row = row @ chain.Q
    return distances


def _fraction_chain(chain):
    Q = [[Fraction(float(p)) for p in row] for row in chain.Q]
    pi = [Fraction(float(p)) for p in chain.pi]
    return Q, pi


def _enumerate_paths(chain, length: int, init: InitLaw):
    """Yield (path, probability) over all paths of the given length in exact rationals"""
    cap = Config.get_numerics('path_enumeration_cap')
    count = chain.n_states ** length
    if count > cap:
        raise BudgetExceededError(f"{count} paths exceed the enumeration cap of {cap}")
    Q, pi = _fraction_chain(chain)
    start = pi if init is None else [Fraction(float(p)) for p in _law(chain, init)]
    for path in itertools.product(range(chain.n_states), repeat=length):
        prob = start[path[0]]
        for a, b in zip(path, path[1:]):
            if prob == 0:
                break
            prob *= Q[a][b]
        if prob != 0:
            yield path, prob


def path_enumeration_moment(chain, g: np.ndarray, n: int, power: int, init: InitLaw = None) -> float:
    """E_xi[S_n^power] by summing over every path, in exact rationals"""
    _, pi = _fraction_chain(chain)
    g_frac = [Fraction(float(v)) for v in g]
    mean = sum(p * v for p, v in zip(pi, g_frac))
    g_bar = [v - mean for v in g_frac]
    total = Fraction(0)
    for path, prob in _enumerate_paths(chain, n, init):
        total += prob * sum(g_bar[x] for x in path) ** power
    return float(total)


def path_enumeration_centered_moment(chain, tup: IndexTuple) -> float:
    """Centered moment from the exact joint law of (X_{t_1}, ..., X_{t_k}), in rationals"""
    if not tup.is_sorted:
        raise InputValidationError(f"centered moments need nondecreasing times, got {tup.times}")
    paths = list(_enumerate_paths(chain, tup.times[-1] + 1, None))
    h = [[Fraction(float(v)) for v in obs] for obs in tup.observables]
    values = [[h[j][path[t]] for j, t in enumerate(tup.times)] for path, _ in paths]
    probs = [prob for _, prob in paths]
    z = [Fraction(1)] * len(paths)
    for ell in range(len(tup) - 1, 0, -1):
        products = [row[ell] * zi for row, zi in zip(values, z)]
        mean = sum(p * v for p, v in zip(probs, products))
        z = [v - mean for v in products]
    return float(sum(p * row[0] * zi for p, row, zi in zip(probs, values, z)))
