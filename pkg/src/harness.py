"""
Monte Carlo estimation, bound-vs-truth comparison and parameter sweeps
"""
import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy.stats import beta, chi2, norm

from .config import Config
from .errors import ChainboundError, InputValidationError, ProvenanceError
from .models import BoundReport, LogValue, McEstimate, Verdict
from .storage import FLOAT_FORMAT

logger = logging.getLogger(__name__)

REPORT_COLUMNS = ['config_hash', 'theorem_id', 'model_id', 'n', 'q', 'gamma', 't', 'bound_log',
                  'bound_clamped', 'est_point', 'ci_low', 'ci_high', 'status', 'seed']

BOOTSTRAP_STREAM = 0xB007


def clopper_pearson(successes: int, trials: int, level: float) -> Tuple[float, float]:
    """Exact two-sided binomial interval at the given level"""
    if trials < 1:
        raise InputValidationError(f"trials must be >= 1, got {trials}")
    if not 0 <= successes <= trials:
        raise InputValidationError(f"successes must lie in [0, {trials}], got {successes}")
    if not 0 < level < 1:
        raise InputValidationError(f"level must lie in (0, 1), got {level}")
    alpha = 1 - level
    lo = 0.0 if successes == 0 else float(beta.ppf(alpha / 2, successes, trials - successes + 1))
    hi = 1.0 if successes == trials else float(beta.ppf(1 - alpha / 2, successes + 1, trials - successes))
    return lo, hi


def bootstrap_ci(samples: np.ndarray, level: float, resamples: int,
                 rng: np.random.Generator) -> Tuple[float, float]:
    """Percentile bootstrap interval for the mean"""
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise InputValidationError("bootstrap needs at least one sample")
    means = np.empty(resamples)
    chunk = max(1, 2_000_000 // samples.size)
    for start in range(0, resamples, chunk):
        size = min(chunk, resamples - start)
        idx = rng.integers(0, samples.size, size=(size, samples.size))
        means[start:start + size] = samples[idx].mean(axis=1)
    alpha = 1 - level
    lo, hi = np.quantile(means, [alpha / 2, 1 - alpha / 2])
    return float(lo), float(hi)


def hoeffding_ci(samples: np.ndarray, level: float) -> Tuple[float, float]:
    """Distribution-free interval for the mean of [0, 1]-valued samples"""
    point = float(np.mean(samples))
    half = math.sqrt(math.log(2 / (1 - level)) / (2 * len(samples)))
    return max(0.0, point - half), min(1.0, point + half)


def block_plan(seed: int, replicas: int, block_size: Optional[int] = None) -> List[Tuple[int, int]]:
    """(block_index, size) pairs covering the replicas in fixed order"""
    block_size = block_size or Config.BLOCK_SIZE
    return [(i, min(block_size, replicas - start))
            for i, start in enumerate(range(0, replicas, block_size))]


def run_blocks(simulate: Callable[[np.random.Generator, int], np.ndarray], seed: int, replicas: int,
               workers: Optional[int] = None, block_size: Optional[int] = None) -> np.ndarray:
    """
    Run simulate(rng, size) on replica blocks and concatenate in block order

    Block i draws from SeedSequence([seed, i]), so the result does not depend on workers.
    """
    workers = workers or Config.WORKERS
    plan = block_plan(seed, replicas, block_size)

    def run(block):
        index, size = block
        rng = np.random.default_rng(np.random.SeedSequence([seed, index]))
        return simulate(rng, size)

    if workers <= 1 or len(plan) == 1:
        results = [run(block) for block in plan]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, plan))
    logger.debug(f"run_blocks: seed={seed}, {len(plan)} blocks, workers={workers}")
    return np.concatenate(results) if results else np.empty(0)


def _check_replicas(replicas: int):
    minimum = Config.MONTE_CARLO['min_replicas']
    if replicas < minimum:
        raise InputValidationError(f"replicas must be >= {minimum}, got {replicas}")


def simulate_sums(model, g, n: int, replicas: int, seed: int, init: Any = None, center: float = 0.0,
                  workers: Optional[int] = None) -> np.ndarray:
    return run_blocks(lambda rng, size: model.simulate_sums(g, n, size, rng, init, center),
                      seed, replicas, workers)


def mc_tail(model, g, n: int, t: float, replicas: int, seed: int, init: Any = None,
            center: float = 0.0, level: Optional[float] = None,
            workers: Optional[int] = None) -> McEstimate:
    """P(|S_n| >= t) with a Clopper-Pearson interval"""
    _check_replicas(replicas)
    if t < 0:
        raise InputValidationError(f"t must be >= 0, got {t}")
    level = level or Config.CI_LEVEL
    if t == 0:
        return McEstimate(1.0, 1.0, 1.0, level, replicas, seed, method="exact")
    sums = simulate_sums(model, g, n, replicas, seed, init, center, workers)
    successes = int(np.count_nonzero(np.abs(sums) >= t))
    lo, hi = clopper_pearson(successes, replicas, level)
    return McEstimate(successes / replicas, lo, hi, level, replicas, seed)


def mc_moment(model, g, n: int, power: int, replicas: int, seed: int, init: Any = None,
              center: float = 0.0, level: Optional[float] = None, method: str = "bootstrap",
              workers: Optional[int] = None) -> McEstimate:
    """
    E[S_n^power] with a percentile bootstrap or normal interval

    Even powers estimate E|S_n|^power; odd powers keep the sign.
    """
    _check_replicas(replicas)
    level = level or Config.MOMENT_CI_LEVEL
    if power == 0:
        return McEstimate(1.0, 1.0, 1.0, level, replicas, seed, method="exact")
    values = simulate_sums(model, g, n, replicas, seed, init, center, workers) ** power
    point = float(np.mean(values))
    if method == "bootstrap":
        rng = np.random.default_rng(np.random.SeedSequence([seed, BOOTSTRAP_STREAM]))
        lo, hi = bootstrap_ci(values, level, Config.BOOTSTRAP_RESAMPLES, rng)
    elif method == "normal":
        half = float(norm.ppf(0.5 + level / 2) * np.std(values, ddof=1) / math.sqrt(len(values)))
        lo, hi = point - half, point + half
    else:
        raise InputValidationError(f"unknown moment interval method {method}")
    return McEstimate(point, min(lo, point), max(hi, point), level, replicas, seed, method=method)


def batch_means_variance(model, g, n: int, batches: int, seed: int, level: Optional[float] = None,
                         init: Any = None, center: float = 0.0,
                         workers: Optional[int] = None) -> Tuple[float, float]:
    """
    Sample variance of S_n over independent batches and its chi-square upper endpoint

    Returns:
        (point, upper) with upper = (B - 1) s^2 / chi2_{1-level}(B - 1)
    """
    if batches < 2:
        raise InputValidationError(f"batches must be >= 2, got {batches}")
    level = level or Config.CI_LEVEL
    sums = simulate_sums(model, g, n, batches, seed, init, center, workers)
    point = float(np.var(sums, ddof=1))
    upper = (batches - 1) * point / float(chi2.ppf(1 - level, batches - 1))
    return point, upper


def mc_coupling_cost(model, n: int, start: np.ndarray, start_prime: np.ndarray, replicas: int,
                     seed: int, level: Optional[float] = None,
                     workers: Optional[int] = None) -> McEstimate:
    """E[c(X_n, X'_n)] under the coupling kernel from one starting pair, Hoeffding interval"""
    _check_replicas(replicas)
    level = level or Config.CI_LEVEL

    def simulate(rng, size):
        x = np.repeat(np.asarray(start)[None, ...], size, axis=0)
        y = np.repeat(np.asarray(start_prime)[None, ...], size, axis=0)
        return model.coupled_costs(x, y, n, rng)

    costs = run_blocks(simulate, seed, replicas, workers)
    lo, hi = hoeffding_ci(costs, level)
    point = float(np.mean(costs))
    return McEstimate(point, min(lo, point), max(hi, point), level, replicas, seed, method="hoeffding")


def _exact_dominates(report: BoundReport, value: Union[int, float]) -> bool:
    """value <= bound; integers enter log space exactly and tails compare against the clamp"""
    if report.is_tail:
        return float(value) <= report.value
    exact = LogValue.from_int(value) if isinstance(value, int) else LogValue.from_float(float(value))
    return exact <= report.log_value


def compare(report: BoundReport, estimate: Union[McEstimate, float],
            config_hash: Optional[str] = None) -> Verdict:
    """
    Verdict of a bound against an exact value or a Monte Carlo estimate

    Exact values dominate only when value <= bound, compared in log space with no slack;
    estimates are violated only when ci_low > bound and dominate only when ci_high <= bound.
    """
    est_hash = estimate.config_hash if isinstance(estimate, McEstimate) else config_hash
    if report.config_hash and est_hash and report.config_hash != est_hash:
        raise ProvenanceError(f"config hash mismatch: bound {report.config_hash}, estimate {est_hash}")
    bound = report.value
    if isinstance(estimate, McEstimate):
        if estimate.ci_low > bound:
            status = 'violated'
        elif estimate.ci_high <= bound:
            status = 'dominates'
        else:
            status = 'inconclusive'
    else:
        status = 'dominates' if _exact_dominates(report, estimate) else 'violated'
    if status == 'violated':
        logger.warning(f"{report.theorem_id}: bound {bound:.6g} violated by {estimate}")
    return Verdict(bound_value=bound, estimate=estimate, status=status)


def verdict_row(report: BoundReport, verdict: Verdict, model_id: str, seed: int) -> Dict[str, Any]:
    row = report.to_row()
    row['model_id'] = model_id
    row['seed'] = seed
    if isinstance(verdict.estimate, McEstimate):
        row.update(est_point=verdict.estimate.point, ci_low=verdict.estimate.ci_low,
                   ci_high=verdict.estimate.ci_high)
    else:
        value = float(verdict.estimate)
        row.update(est_point=value, ci_low=value, ci_high=value)
    row['status'] = verdict.status
    return row


CellResult = Tuple[BoundReport, Union[McEstimate, float]]


def _stream_row(csv_path: str, row: Dict[str, Any]):
    pd.DataFrame([row], columns=REPORT_COLUMNS).to_csv(csv_path, mode='a', header=False, index=False,
                                                      float_format=FLOAT_FORMAT, lineterminator='\n')


def sweep(grid: Dict[str, Sequence[Any]], evaluate_cell: Callable[[Dict[str, Any]], CellResult],
          model_id: str, seed: int, config_hash: Optional[str] = None,
          csv_path: Optional[str] = None, append: bool = False) -> pd.DataFrame:
    """
    Evaluate one bound and one estimate per cell of the cross product of the grids

    Cells are visited in the declared axis order; a failing cell is recorded with
    status 'error' and the sweep moves on.

    Args:
        csv_path: When set, each row is appended to this CSV as soon as its cell finishes
        append: Continue an existing CSV instead of starting it with a header
    """
    axes = list(grid.keys())
    rows = []
    if csv_path and not append:
        pd.DataFrame(columns=REPORT_COLUMNS).to_csv(csv_path, index=False, lineterminator='\n')
    for values in itertools.product(*(grid[axis] for axis in axes)):
        cell = dict(zip(axes, values))
        try:
            report, estimate = evaluate_cell(cell)
            report.config_hash = config_hash
            if isinstance(estimate, McEstimate):
                estimate.config_hash = config_hash
            verdict = compare(report, estimate, config_hash)
            rows.append(verdict_row(report, verdict, model_id, seed))
        except (ChainboundError, ArithmeticError, ValueError) as e:
            logger.error(f"sweep cell {cell} failed: {e}")
            rows.append({'config_hash': config_hash, 'theorem_id': cell.get('theorem'),
                         'model_id': model_id, 'n': cell.get('n'), 'q': cell.get('q'),
                         'gamma': cell.get('gamma'), 't': cell.get('t'), 'status': 'error',
                         'seed': seed})
        else:
            logger.debug(f"sweep cell {cell}: {rows[-1]['status']}")
        if csv_path:
            _stream_row(csv_path, rows[-1])
    return pd.DataFrame(rows, columns=REPORT_COLUMNS)


def summarize(table: pd.DataFrame) -> Dict[str, int]:
    """Count verdicts per status"""
    counts = table['status'].value_counts().to_dict() if len(table) else {}
    return {status: int(counts.get(status, 0)) for status in ('dominates', 'violated', 'inconclusive', 'error')}
