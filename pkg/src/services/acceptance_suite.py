"""
Acceptance suite: exact and statistical checks that the bounds dominate the truth

Every check becomes one row of the harness report table. Theorem checks carry the
theorem id; identity and constant checks carry a short check id and a tolerance in
place of the bound.
"""
import hashlib
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..bounds import evaluate, homogeneous_scaling, scaling_spread
from ..chains import (
    FiniteChain,
    PcnChain,
    PcnModel,
    SgdChain,
    SgdModel,
    certify,
    certify_wasserstein,
    coupling_contraction_check,
    pcn_constants,
    random_certified_chain,
    sgd_constants,
    sgd_polyak_ruppert,
)
from ..combinatorics import (
    b0_scaling_bound,
    b0_uniform_bound,
    b_coefficient_exact,
    b_coefficient_log,
    b_coefficient_upper,
    composition_count,
    compositions,
)
from ..config import Config
from ..constants import (
    contraction_rate,
    delta_star,
    drift_intermediates,
    geometric_rate,
    mixing_bound,
    resolve_pi_V,
    valpha_deviation,
)
from ..cumulants import (
    IndexTuple,
    exact_sn_moments,
    exact_sn_moments_from,
    exact_variance,
    leonov_check,
    markov_reduction_check,
    v_norm_distances,
)
from ..errors import ChainboundError
from ..harness import (
    REPORT_COLUMNS,
    bootstrap_ci,
    compare,
    mc_coupling_cost,
    mc_tail,
    verdict_row,
)
from ..models import (
    BoundInputs,
    BoundReport,
    LogValue,
    McEstimate,
    NormKind,
    VarianceProvenance,
    Verdict,
    WassCertificate,
)
from ..run_config import RunConfig, config_hash
from ..storage import FLOAT_FORMAT
from .certification_service import CertificationService

logger = logging.getLogger(__name__)

REFERENCE_Q = [[0.9, 0.1], [0.2, 0.8]]
REFERENCE_V = [math.e, math.e ** 3]
REFERENCE_G = [1.0, -2.0]
REFERENCE_SGD = {'mu': 1.0, 'L': 3.0, 'sigma2': 1.0, 'gamma_step': 0.1}
SGD_CHECK_DIM = 3
PCN_CHECK_MODEL = {'potential': 'lipschitz', 'potential_scale': 0.1}

DRIFT_LEVEL = 0.99
COUPLING_LEVEL = 0.99
IDENTITY_RTOL = 1e-10
DELTA_TOL = 1e-10
CLOSED_FORM_RTOL = 1e-6
VALPHA_GRID = (0.25, 0.5, 1.0)
SCALING_KAPPAS = (1.0, 10.0)
SCALING_SPREAD = 4.0
# t grid in units of sd(S_n)
TAIL_MULTIPLIERS = (0.5, 1.0, 2.0, 4.0)

# number -> (name, time budget in seconds)
CRITERIA = {
    1: ("exact Rosenthal domination", 60),
    2: ("cumulant expansion exactness", 30),
    3: ("Markov reduction", 10),
    4: ("mixing-rate domination", 10),
    5: ("delta* correctness", 5),
    6: ("Bernstein tail domination", 300),
    7: ("non-stationary envelopes", 300),
    8: ("coupling contraction and pCN drift", 180),
    9: ("combinatorial coefficients", 5),
    10: ("SGD end to end", 120),
    11: ("determinism", 300),
}


@dataclass(frozen=True)
class SuiteSizes:
    chains: int = 20
    max_states: int = 5
    n_max: int = 40
    leonov_instances: int = 50
    tuples: int = 100
    mixing_n: int = 100
    random_certificates: int = 200
    tail_replicas: int = 100_000
    tail_n: int = 100
    nonstat_chains: int = 5
    nonstat_n: int = 30
    coupling_replicas: int = 20_000
    drift_replicas: int = 20_000
    determinism_replicas: int = 20_000
    variance_batches: int = 400
    pcn_mc_budget: int = 1_000_000
    drift_points: int = 50
    pcn_drift_points: int = 20
    drift_point_replicas: int = 2_000


FULL_SIZES = SuiteSizes()
QUICK_SIZES = SuiteSizes(chains=4, n_max=12, leonov_instances=8, tuples=20, mixing_n=40,
                         random_certificates=40, tail_replicas=5_000, tail_n=50, nonstat_chains=2,
                         nonstat_n=10, coupling_replicas=2_000, drift_replicas=2_000,
                         determinism_replicas=2_000, variance_batches=200, pcn_mc_budget=100_000,
                         drift_point_replicas=500)


def reference_chain() -> FiniteChain:
    """Two-state chain with pi = (2/3, 1/3) used across the suite"""
    return FiniteChain(np.asarray(REFERENCE_Q), np.asarray(REFERENCE_V), np.asarray(REFERENCE_G),
                       model_id="reference")


def quadratic_delta_star(cert: WassCertificate) -> float:
    """Positive root of eps d^2 - a1 d - a0 = 0, the closed form of delta*"""
    lambda_bar, b_m, _ = drift_intermediates(cert.lam, cert.b, cert.d, cert.m)
    d_bar = (cert.d + 1) / 2
    A = lambda_bar + b_m
    keep = 1 - cert.eps
    a1 = keep * (A + d_bar) - (lambda_bar * d_bar + 1)
    a0 = keep * A * d_bar - lambda_bar * d_bar
    return (a1 + math.sqrt(a1 * a1 + 4 * cert.eps * a0)) / (2 * cert.eps)


def table_digest(table: pd.DataFrame) -> str:
    """sha256 of the CSV bytes a report table is written as"""
    text = table.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
    return hashlib.sha256(text.encode('utf-8')).hexdigest()


def drift_points(center: np.ndarray, radius: float, count: int, rng: np.random.Generator) -> np.ndarray:
    """count points at distances evenly spread over [0, 2 radius] from center, random directions"""
    center = np.asarray(center, dtype=float)
    directions = rng.normal(size=(count, center.size))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    distances = np.linspace(0.0, 2.0 * radius, count)
    return center + distances[:, None] * directions


@dataclass
class CriterionResult:
    number: int
    name: str
    rows: List[Dict[str, Any]] = field(default_factory=list)
    elapsed: float = 0.0
    budget: float = 0.0

    @property
    def passed(self) -> bool:
        return bool(self.rows) and all(r['status'] not in ('violated', 'error') for r in self.rows)

    def counts(self) -> Dict[str, int]:
        counts: Dict[str, int] = {}
        for row in self.rows:
            counts[row['status']] = counts.get(row['status'], 0) + 1
        return counts


class AcceptanceSuite:
    """Runs the acceptance criteria and collects one report table"""

    def __init__(self, seed: Optional[int] = None, quick: bool = False, workers: Optional[int] = None,
                 level: Optional[float] = None):
        self.seed = Config.DEFAULT_SEED if seed is None else int(seed)
        self.quick = quick
        self.workers = workers or Config.WORKERS
        self.level = level or Config.CI_LEVEL
        self.sizes = QUICK_SIZES if quick else FULL_SIZES
        self.config_hash = config_hash({'suite': 'acceptance', 'seed': self.seed, 'quick': quick,
                                        'level': self.level})
        self.logger = logging.getLogger(f"{__name__}.{'quick' if quick else 'full'}")

    # Seeds
    def _rng(self, criterion: int) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence([self.seed, criterion]))

    def _stream(self, criterion: int, index: int) -> int:
        state = np.random.SeedSequence([self.seed, criterion, index]).generate_state(1, np.uint64)
        return int(state[0])

    # Rows
    def _record(self, rows: List[Dict[str, Any]], model_id: str, report: BoundReport, estimate):
        report.config_hash = self.config_hash
        if isinstance(estimate, McEstimate):
            estimate.config_hash = self.config_hash
        verdict = compare(report, estimate, self.config_hash)
        rows.append(verdict_row(report, verdict, model_id, self.seed))

    def _record_check(self, rows: List[Dict[str, Any]], model_id: str, check_id: str, passed: bool,
                      value: float, tolerance: float, n: Optional[int] = None, q: Optional[int] = None,
                      gamma: Optional[float] = None):
        report = BoundReport(theorem_id=check_id, inputs={'n': n, 'q': q, 'gamma': gamma},
                             log_value=LogValue.from_float(tolerance), config_hash=self.config_hash)
        verdict = Verdict(bound_value=tolerance, estimate=float(value),
                          status='dominates' if passed else 'violated')
        if not passed:
            self.logger.warning(f"{model_id} {check_id}: value {value:.6g} against tolerance {tolerance:.6g}")
        rows.append(verdict_row(report, verdict, model_id, self.seed))

    def _error_row(self, rows: List[Dict[str, Any]], model_id: str, check_id: str):
        rows.append({'config_hash': self.config_hash, 'theorem_id': check_id, 'model_id': model_id,
                     'status': 'error', 'seed': self.seed})

    def _random_chain(self, rng: np.random.Generator, index: int) -> FiniteChain:
        states = int(rng.integers(2, self.sizes.max_states + 1))
        return random_certified_chain(rng, states, model_id=f"random-{index:02d}")

    def _service(self, model: Dict[str, Any], **extra) -> CertificationService:
        data = {'model': model, 'seed': self.seed, 'ci_level': self.level, 'workers': self.workers, **extra}
        return CertificationService(RunConfig.from_dict(data))

    # Criteria
    def criterion_1(self, rows: List[Dict[str, Any]]):
        """T1 and T3 against exact stationary moments"""
        rng = self._rng(1)
        for i in range(self.sizes.chains):
            chain = self._random_chain(rng, i)
            cert = certify(chain)
            rate = geometric_rate(cert)
            g_bar = chain.g_bar
            model_id = f"c1/{chain.model_id}"
            for n in range(2, self.sizes.n_max + 1):
                moments = exact_sn_moments(chain, chain.g, n, 6)
                # S_n is centered, so E[S_n^2] is its variance
                var = moments[2]
                for q in (1, 2, 3):
                    for theorem, kind, norm in (('T1', NormKind.V_POWER, chain.v_norm(g_bar, 1 / (2 * q))),
                                                ('T3', NormKind.W_GAMMA, chain.w_norm(g_bar, 0.0))):
                        inputs = BoundInputs(q=q, n=n, norm_g=norm, norm_kind=kind, rate=rate, gamma=0.0,
                                             var_Sn=var, var_provenance=VarianceProvenance.EXACT,
                                             pi_V=cert.pi_V)
                        self._record(rows, model_id, evaluate(theorem, inputs), moments[2 * q])

    def criterion_2(self, rows: List[Dict[str, Any]]):
        """Moments reassembled from cumulants match the moment recursion"""
        rng = self._rng(2)
        for i in range(self.sizes.leonov_instances):
            chain = self._random_chain(rng, i)
            n = int(rng.integers(1, self.sizes.n_max + 1))
            q = int(rng.integers(1, 4))
            result = leonov_check(chain, chain.g, n, q, rtol=IDENTITY_RTOL)
            self._record_check(rows, f"c2/{chain.model_id}", 'leonov', result.passed,
                               result.relative_error, IDENTITY_RTOL, n=n, q=q)

    def criterion_3(self, rows: List[Dict[str, Any]]):
        """Centered moments survive the one-step Markov reduction"""
        rng = self._rng(3)
        for i in range(self.sizes.tuples):
            chain = self._random_chain(rng, i)
            k = int(rng.integers(2, 5))
            times = np.sort(rng.integers(0, 7, size=k))
            observables = [rng.normal(size=chain.n_states) for _ in range(k)]
            result = markov_reduction_check(chain, IndexTuple(tuple(times), tuple(observables)))
            self._record_check(rows, f"c3/{chain.model_id}", 'markov-reduction', result.passed,
                               result.relative_error, 1e-12, n=int(times[-1]))

    def _record_worst(self, rows: List[Dict[str, Any]], model_id: str, check_id: str,
                      distances: np.ndarray, bounds: np.ndarray):
        """One row for the n where distance / bound is largest"""
        worst = int(np.argmax(distances / bounds))
        report = BoundReport(theorem_id=check_id, inputs={'n': worst},
                             log_value=LogValue.from_float(float(bounds[worst])))
        self._record(rows, model_id, report, float(distances[worst]))

    def criterion_4(self, rows: List[Dict[str, Any]]):
        """Exact V^alpha distances to pi under the mixing bounds; homogeneous scaling of T1"""
        rng = self._rng(4)
        chains = [reference_chain()] + [self._random_chain(rng, i) for i in range(self.sizes.chains)]
        steps = range(self.sizes.mixing_n + 1)
        for chain in chains:
            cert = certify(chain)
            rate = geometric_rate(cert)
            for x in range(chain.n_states):
                V_x = float(chain.V[x])
                model_id = f"c4/{chain.model_id}/x{x}"
                bounds = np.array([mixing_bound(rate, cert.pi_V, V_x, n) for n in steps])
                self._record_worst(rows, model_id, 'mixing',
                                   v_norm_distances(chain, self.sizes.mixing_n, x), bounds)
                for alpha in VALPHA_GRID:
                    bounds = np.array([valpha_deviation(rate, cert.pi_V, alpha, V_x, n) for n in steps])
                    self._record_worst(rows, model_id, f"valpha-{alpha:g}",
                                       v_norm_distances(chain, self.sizes.mixing_n, x, alpha), bounds)

        reference = reference_chain()
        cert = certify(reference)
        rate = geometric_rate(cert)
        for q in (2, 3):
            norm = reference.v_norm(reference.g_bar, 1 / (2 * q))
            for kappa in SCALING_KAPPAS:
                spread = scaling_spread(homogeneous_scaling(q, kappa, rate.c, cert.pi_V, norm))
                self._record_check(rows, f"c4/scaling/kappa{kappa:g}", 'homogeneous-scaling',
                                   spread < SCALING_SPREAD, spread, SCALING_SPREAD, q=q)

    def criterion_5(self, rows: List[Dict[str, Any]]):
        """delta* against its closed form, the degenerate root and varrho < 1"""
        cert = WassCertificate(lam=0.5, b=1.0, d=9.0, m=1, eps=0.5).validate()
        root, _ = delta_star(cert)
        gap = abs(root - quadratic_delta_star(cert))
        self._record_check(rows, "c5/reference", 'delta-star', gap <= DELTA_TOL, gap, DELTA_TOL)

        degenerate = WassCertificate(lam=0.5, b=1.0, d=9.0, m=1, eps=0.9).validate()
        root, _ = delta_star(degenerate)
        self._record_check(rows, "c5/degenerate", 'delta-star-zero', root == 0.0, root, 0.0)

        rng = self._rng(5)
        for i in range(self.sizes.random_certificates):
            lam = float(rng.uniform(0.05, 0.95))
            b = float(rng.uniform(0.1, 5.0))
            d = 2 * b / (1 - lam) * float(rng.uniform(1.1, 5.0))
            m = int(rng.integers(1, 6))
            eps = float(rng.uniform(0.01, 0.99))
            random_cert = WassCertificate(lam=lam, b=b, d=d, m=m, eps=eps).validate()
            pi_V, _ = resolve_pi_V(None, lam, b)
            rate = contraction_rate(random_cert, pi_V)
            self._record_check(rows, f"c5/cert-{i:03d}", 'varrho', rate.varrho < 1.0, rate.varrho, 1.0)

    def _tail_grid(self, var: float) -> List[float]:
        return [k * math.sqrt(var) for k in TAIL_MULTIPLIERS]

    def criterion_6(self, rows: List[Dict[str, Any]]):
        """Bernstein tails against Clopper-Pearson tail estimates"""
        n = self.sizes.tail_n
        replicas = self.sizes.tail_replicas
        chain = reference_chain()
        cert = certify(chain)
        rate = geometric_rate(cert)
        var = exact_variance(chain, chain.g, n)
        inputs = BoundInputs(q=1, n=n, norm_g=chain.w_norm(chain.g_bar, 0.0), norm_kind=NormKind.W_GAMMA,
                             rate=rate, gamma=0.0, var_Sn=var, var_provenance=VarianceProvenance.EXACT,
                             pi_V=cert.pi_V)
        for k, t in enumerate(self._tail_grid(var)):
            estimate = mc_tail(chain, chain.observable(), n, t, replicas, self._stream(6, k),
                               level=self.level, workers=self.workers)
            self._record(rows, "c6/reference", evaluate('T5', inputs, t), estimate)

        service = self._service({'type': 'sgd', **REFERENCE_SGD},
                                variance={'source': 'empirical-upper', 'batches': self.sizes.variance_batches})
        certified = service.certify()
        inputs = service.bound_inputs(certified, 'T10', q=1, n=n, gamma=0.0, seed=self._stream(6, 100))
        for k, t in enumerate(self._tail_grid(inputs.var_Sn)):
            estimate = mc_tail(certified.chain, certified.observable, n, t, replicas,
                               self._stream(6, 200 + k), level=self.level, workers=self.workers)
            self._record(rows, "c6/sgd", evaluate('T10', inputs, t), estimate)

    def criterion_7(self, rows: List[Dict[str, Any]]):
        """Shifted moment bounds from every start state and non-stationary tails"""
        rng = self._rng(7)
        for i in range(self.sizes.nonstat_chains):
            chain = self._random_chain(rng, i)
            cert = certify(chain)
            rate = geometric_rate(cert)
            g_bar = chain.g_bar
            for n in range(2, self.sizes.nonstat_n + 1):
                var = exact_variance(chain, chain.g, n)
                for x in range(chain.n_states):
                    moments = exact_sn_moments_from(chain, chain.g, n, 4, init=x)
                    for q in (1, 2):
                        for theorem, kind, norm in (('T2', NormKind.V_POWER, chain.v_norm(g_bar, 1 / (2 * q))),
                                                    ('T4', NormKind.W_GAMMA, chain.w_norm(g_bar, 0.0))):
                            inputs = BoundInputs(q=q, n=n, norm_g=norm, norm_kind=kind, rate=rate, gamma=0.0,
                                                 var_Sn=var, var_provenance=VarianceProvenance.EXACT,
                                                 pi_V=cert.pi_V, xi_V=float(chain.V[x]))
                            self._record(rows, f"c7/{chain.model_id}/x{x}", evaluate(theorem, inputs),
                                         moments[2 * q])

        reference = reference_chain()
        worst = int(np.argmax(reference.V))
        service = self._service({'type': 'finite', 'Q': REFERENCE_Q, 'V': REFERENCE_V, 'g': REFERENCE_G,
                                 'init_state': worst})
        certified = service.certify()
        n = self.sizes.tail_n
        nonstat_v = service.bound_inputs(certified, 'T-nonstat-V', q=1, n=n)
        nonstat_w = service.bound_inputs(certified, 'T11', q=1, n=n)
        for k, t in enumerate(self._tail_grid(nonstat_v.var_Sn)):
            estimate = mc_tail(certified.chain, certified.observable, n, t, self.sizes.tail_replicas,
                               self._stream(7, k), init=worst, level=self.level, workers=self.workers)
            self._record(rows, f"c7/reference/x{worst}", evaluate('T-nonstat-V', nonstat_v, t), estimate)
            self._record(rows, f"c7/reference/x{worst}", evaluate('T11', nonstat_w, t), estimate)

    def _coupling_rows(self, rows: List[Dict[str, Any]], chain, coupling: WassCertificate,
                       pairs: Sequence[Tuple[str, np.ndarray, np.ndarray]], stream_base: int):
        """One-step cost against kappa_K c and m-step cost against (1 - eps) c; pairs lie in C_bar"""
        for j, (label, x, y) in enumerate(pairs):
            c0 = float(chain.cost(x[None, :], y[None, :])[0])
            checks = [('coupling-1step', 1, coupling.kappa_K * c0),
                      ('coupling-mstep', coupling.m, (1 - coupling.eps) * c0)]
            for k, (check_id, steps, bound) in enumerate(checks):
                estimate = mc_coupling_cost(chain, steps, x, y, self.sizes.coupling_replicas,
                                            self._stream(8, stream_base + 10 * j + k), level=COUPLING_LEVEL,
                                            workers=self.workers)
                report = BoundReport(theorem_id=check_id, inputs={'n': steps},
                                     log_value=LogValue.from_float(bound))
                self._record(rows, f"c8/{chain.model_id}/{label}", report, estimate)

    def _drift_rows(self, rows: List[Dict[str, Any]], chain, drift, points: np.ndarray, label: str,
                    criterion: int, rng: np.random.Generator):
        """E[V(X_1)] from each point against lambda V(x) + b, bootstrap interval at DRIFT_LEVEL"""
        replicas = self.sizes.drift_point_replicas
        for k, x0 in enumerate(points):
            values = chain.lyapunov(chain.step(np.tile(x0, (replicas, 1)), rng))
            lo, hi = bootstrap_ci(values, DRIFT_LEVEL, Config.BOOTSTRAP_RESAMPLES, rng)
            point = float(np.mean(values))
            estimate = McEstimate(point, min(lo, point), max(hi, point), DRIFT_LEVEL, replicas,
                                  self._stream(criterion, k), method="bootstrap")
            bound = drift.lam * float(chain.lyapunov(x0[None, :])[0]) + drift.b
            report = BoundReport(theorem_id='drift', inputs={'n': 1}, log_value=LogValue.from_float(bound))
            self._record(rows, f"{label}/point{k:02d}", report, estimate)

    def criterion_8(self, rows: List[Dict[str, Any]]):
        """Exact coupling contraction on finite chains, simulated coupling costs for SGD and pCN"""
        rng = self._rng(8)
        chains = [reference_chain()] + [self._random_chain(rng, i) for i in range(3)]
        for chain in chains:
            coupling = certify_wasserstein(chain)
            rate = contraction_rate(coupling, chain.pi_V)
            for q in (1, 2):
                for p in sorted({1, 2 * q}):
                    passed, worst = coupling_contraction_check(chain, rate, q, p, n_max=30)
                    self._record_check(rows, f"c8/{chain.model_id}/p{p}", 'coupling-contraction',
                                       passed, worst, 1.0, n=30, q=q)

        model = SgdModel(**REFERENCE_SGD, dim=SGD_CHECK_DIM)
        consts = sgd_constants(model)
        sgd = SgdChain(model)
        star = sgd.theta_star
        e1 = np.eye(model.dim)[0]
        pairs = [('far', star + consts.R / 2 * e1, star.copy()), ('near', star + 0.5 * e1, star.copy())]
        self._coupling_rows(rows, sgd, consts.coupling, pairs, 0)

        pcn_model = PcnModel(**PCN_CHECK_MODEL)
        pconsts = pcn_constants(pcn_model, mc_budget=self.sizes.pcn_mc_budget, seed=self._stream(8, 500),
                                level=self.level)
        pcn = PcnChain(pcn_model, eps_H=pconsts.eps_H)
        f1 = np.eye(pcn_model.dim)[0]
        pairs = [('far', pconsts.R / 2 * f1, -pconsts.R / 2 * f1), ('near', 0.5 * f1, 0 * f1)]
        self._coupling_rows(rows, pcn, pconsts.coupling, pairs, 1000)
        # inside and outside B(0, R)
        points = drift_points(np.zeros(pcn_model.dim), pconsts.R, self.sizes.pcn_drift_points, rng)
        self._drift_rows(rows, pcn, pconsts.drift, points, "c8/pcn", 8, rng)

    def criterion_9(self, rows: List[Dict[str, Any]]):
        """B_gamma(u, q) against direct enumeration and its upper bounds"""
        for q in range(2, 7):
            for u in range(1, q):
                parts_list = compositions(u, q)
                count = composition_count(u, q)
                expected = math.comb(2 * q - u - 1, u - 1)
                self._record_check(rows, f"c9/u{u}", 'composition-count',
                                   len(parts_list) == count == expected, abs(len(parts_list) - expected), 0.0, q=q)
                for gamma in (0, 1, 2):
                    enumerated = (math.factorial(2 * q) // math.factorial(u)) * sum(
                        math.prod(math.factorial(k) ** (gamma + 2) for k in c.parts) for c in parts_list)
                    exact = b_coefficient_exact(gamma, u, q)
                    model_id = f"c9/u{u}"
                    self._record_check(rows, model_id, 'B-exact', exact == enumerated,
                                       abs(exact - enumerated), 0.0, q=q, gamma=gamma)
                    log_gap = abs(b_coefficient_log(gamma, u, q).log_abs - math.log(enumerated))
                    self._record_check(rows, model_id, 'B-log', log_gap <= IDENTITY_RTOL * math.log(enumerated),
                                       log_gap, IDENTITY_RTOL * math.log(enumerated), q=q, gamma=gamma)
                    upper = BoundReport(theorem_id='B-upper', inputs={'q': q, 'gamma': gamma},
                                        log_value=b_coefficient_upper(gamma, u, q))
                    self._record(rows, model_id, upper, enumerated)
                    if gamma == 0:
                        for check_id, bound in (('B0-scaling', b0_scaling_bound(u, q)),
                                                ('B0-uniform', b0_uniform_bound(q))):
                            report = BoundReport(theorem_id=check_id, inputs={'q': q, 'gamma': 0},
                                                 log_value=bound)
                            self._record(rows, model_id, report, enumerated)

    def criterion_10(self, rows: List[Dict[str, Any]]):
        """SGD closed forms, empirical drift and Polyak-Ruppert bias"""
        model = SgdModel(**REFERENCE_SGD, dim=SGD_CHECK_DIM)
        consts = sgd_constants(model)
        closed_forms = (
            ('sigma-tilde2', consts.sigma_tilde2, 2 * model.sigma2 / math.tanh(0.5)),
            ('kappa-f', consts.kappa_f, 0.75),
            ('gamma-f', consts.gamma_f, 0.25),
            ('bias-bound', consts.bias_bound, 0.1 / 0.7),
        )
        for check_id, value, expected in closed_forms:
            rel = abs(value - expected) / abs(expected)
            self._record_check(rows, "c10/sgd", check_id, rel <= CLOSED_FORM_RTOL, rel, CLOSED_FORM_RTOL)

        chain = SgdChain(model)
        rng = self._rng(10)
        e1 = np.eye(model.dim)[0]
        points = drift_points(chain.theta_star, consts.R, self.sizes.drift_points, rng)
        self._drift_rows(rows, chain, consts.drift, points, "c10/sgd", 10, rng)

        gap = chain.co_coercivity_gap(rng)
        self._record_check(rows, "c10/sgd", 'co-coercivity', gap >= -1e-12, -gap, 0.0)

        n = self.sizes.tail_n
        averages = sgd_polyak_ruppert(chain, n, rng, replicas=self.sizes.drift_replicas)
        deviations = (averages - chain.theta_star) @ e1
        lo, hi = bootstrap_ci(deviations, DRIFT_LEVEL, Config.BOOTSTRAP_RESAMPLES, rng)
        point = abs(float(np.mean(deviations)))
        abs_low = 0.0 if lo <= 0 <= hi else min(abs(lo), abs(hi))
        abs_high = max(abs(lo), abs(hi))
        estimate = McEstimate(point, min(abs_low, point), max(abs_high, point), DRIFT_LEVEL,
                              len(deviations), self._stream(10, 99), method="bootstrap")
        report = BoundReport(theorem_id='pr-bias', inputs={'n': n},
                             log_value=LogValue.from_float(consts.bias_bound))
        self._record(rows, "c10/sgd", report, estimate)

    def _determinism_table(self, workers: int) -> pd.DataFrame:
        chain = reference_chain()
        rate = geometric_rate(certify(chain))
        n = self.sizes.tail_n
        var = exact_variance(chain, chain.g, n)
        inputs = BoundInputs(q=1, n=n, norm_g=chain.w_norm(chain.g_bar, 0.0), norm_kind=NormKind.W_GAMMA,
                             rate=rate, gamma=0.0, var_Sn=var, var_provenance=VarianceProvenance.EXACT,
                             pi_V=chain.pi_V)
        rows: List[Dict[str, Any]] = []
        for k, t in enumerate(self._tail_grid(var)):
            estimate = mc_tail(chain, chain.observable(), n, t, self.sizes.determinism_replicas,
                               self._stream(11, k), level=self.level, workers=workers)
            self._record(rows, "c11/reference", evaluate('T5', inputs, t), estimate)
        return pd.DataFrame(rows, columns=REPORT_COLUMNS)

    def criterion_11(self, rows: List[Dict[str, Any]]):
        """Identical CSV bytes across repeated runs and worker counts"""
        first = table_digest(self._determinism_table(1))
        again = table_digest(self._determinism_table(1))
        parallel = table_digest(self._determinism_table(4))
        self.logger.info(f"determinism digests: {first[:12]} {again[:12]} {parallel[:12]}")
        self._record_check(rows, "c11/reference", 'determinism-repeat', first == again,
                           float(first != again), 0.0)
        self._record_check(rows, "c11/reference", 'determinism-workers', first == parallel,
                           float(first != parallel), 0.0)

    def run(self, criteria: Optional[Sequence[int]] = None) -> Tuple[pd.DataFrame, List[CriterionResult]]:
        """
        Run the selected criteria in order

        Args:
            criteria: Criterion numbers; None runs all of them

        Returns:
            (report table, per-criterion results)
        """
        selected = sorted(criteria) if criteria else sorted(CRITERIA)
        results = []
        for number in selected:
            if number not in CRITERIA:
                raise ValueError(f"unknown acceptance criterion {number}")
            name, budget = CRITERIA[number]
            result = CriterionResult(number=number, name=name, budget=budget)
            self.logger.info(f"criterion {number}: {name}")
            start = time.perf_counter()
            try:
                getattr(self, f"criterion_{number}")(result.rows)
            except (ChainboundError, ArithmeticError, ValueError) as e:
                self.logger.error(f"criterion {number} aborted: {e}", exc_info=True)
                self._error_row(result.rows, f"c{number}", 'aborted')
            result.elapsed = time.perf_counter() - start
            if result.elapsed > budget:
                self.logger.warning(f"criterion {number} took {result.elapsed:.1f}s, budget {budget}s")
            self.logger.info(f"criterion {number}: {'PASS' if result.passed else 'FAIL'} {result.counts()} "
                             f"in {result.elapsed:.2f}s")
            results.append(result)
        table = pd.DataFrame([row for r in results for row in r.rows], columns=REPORT_COLUMNS)
        return table, results
