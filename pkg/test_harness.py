#!/usr/bin/env python3
"""
Tests for the Monte Carlo harness: intervals, reproducibility, verdicts and sweeps
"""
import math
import os
import sys

import numpy as np
import pandas as pd
import pytest
from scipy.stats import binom

# Add src to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

from src.combinatorics import b_coefficient_exact, b_coefficient_upper
from src.errors import InputValidationError, ProvenanceError
from src.harness import (
    REPORT_COLUMNS,
    batch_means_variance,
    block_plan,
    bootstrap_ci,
    clopper_pearson,
    compare,
    hoeffding_ci,
    mc_coupling_cost,
    mc_moment,
    mc_tail,
    run_blocks,
    summarize,
    sweep,
    verdict_row,
)
from src.models import BoundReport, LogValue, McEstimate


def make_report(value, theorem_id='T1', t=None, config_hash=None):
    return BoundReport(theorem_id=theorem_id, inputs={'n': 10, 'q': 2, 'gamma': 0.0},
                       log_value=LogValue.from_float(value), t=t, config_hash=config_hash)


def estimate(point, lo, hi, config_hash=None):
    return McEstimate(point, lo, hi, 0.999, 1000, 1, config_hash=config_hash)


def test_clopper_pearson_edges():
    lo, hi = clopper_pearson(0, 10, 0.95)
    assert lo == 0.0
    assert hi == pytest.approx(1 - 0.025 ** 0.1)
    lo, hi = clopper_pearson(10, 10, 0.95)
    assert lo == pytest.approx(0.025 ** 0.1)
    assert hi == 1.0


@pytest.mark.parametrize("args", [(1, 0, 0.95), (11, 10, 0.95), (5, 10, 1.0)])
def test_clopper_pearson_rejects_bad_input(args):
    with pytest.raises(InputValidationError):
        clopper_pearson(*args)


@pytest.mark.parametrize("p", [0.02, 0.3, 0.5, 0.9])
def test_clopper_pearson_coverage(p):
    trials, level = 50, 0.95
    coverage = 0.0
    for k in range(trials + 1):
        lo, hi = clopper_pearson(k, trials, level)
        if lo <= p <= hi:
            coverage += binom.pmf(k, trials, p)
    assert coverage >= level - 1e-12


def test_hoeffding_and_bootstrap(rng):
    samples = rng.random(2000)
    lo, hi = hoeffding_ci(samples, 0.99)
    assert 0.0 <= lo <= samples.mean() <= hi <= 1.0
    assert hi - lo == pytest.approx(2 * math.sqrt(math.log(200) / 4000))
    b_lo, b_hi = bootstrap_ci(samples, 0.95, 500, rng)
    assert b_lo <= samples.mean() <= b_hi
    with pytest.raises(InputValidationError):
        bootstrap_ci(np.array([]), 0.95, 10, rng)


def test_block_plan():
    assert block_plan(1, 25000, 10000) == [(0, 10000), (1, 10000), (2, 5000)]
    assert block_plan(1, 0, 10000) == []


def test_run_blocks_independent_of_workers():
    draw = lambda rng, size: rng.random(size)
    serial = run_blocks(draw, 17, 2500, workers=1, block_size=400)
    threaded = run_blocks(draw, 17, 2500, workers=4, block_size=400)
    assert np.array_equal(serial, threaded)
    assert len(serial) == 2500
    assert not np.array_equal(serial, run_blocks(draw, 18, 2500, workers=1, block_size=400))


def test_mc_tail_reference(chain):
    g = chain.observable()
    # |g_bar(X_0)| >= 1.5 exactly when X_0 = 1
    result = mc_tail(chain, g, 1, 1.5, 20000, seed=3)
    assert result.ci_low <= 1 / 3 <= result.ci_high
    assert result.method == "clopper-pearson"


def test_mc_tail_edge_cases(chain):
    g = chain.observable()
    exact = mc_tail(chain, g, 5, 0.0, 200, seed=3)
    assert (exact.point, exact.ci_low, exact.ci_high, exact.method) == (1.0, 1.0, 1.0, "exact")
    with pytest.raises(InputValidationError):
        mc_tail(chain, g, 5, 1.0, 50, seed=3)
    with pytest.raises(InputValidationError):
        mc_tail(chain, g, 5, -1.0, 200, seed=3)


def test_mc_moment(chain):
    g = chain.observable()
    assert mc_moment(chain, g, 3, 0, 200, seed=1).point == 1.0
    second = mc_moment(chain, g, 1, 2, 20000, seed=4, level=0.9999, method="normal")
    assert second.ci_low <= 2.0 <= second.ci_high
    boot = mc_moment(chain, g, 1, 2, 2000, seed=4)
    assert boot.method == "bootstrap"
    assert boot.ci_low <= boot.point <= boot.ci_high
    with pytest.raises(InputValidationError):
        mc_moment(chain, g, 1, 2, 200, seed=4, method="jackknife")


def test_mc_results_are_reproducible(chain):
    g = chain.observable()
    first = mc_tail(chain, g, 10, 3.0, 5000, seed=8, workers=1)
    second = mc_tail(chain, g, 10, 3.0, 5000, seed=8, workers=3)
    assert first == second


def test_batch_means_variance(chain):
    point, upper = batch_means_variance(chain, chain.observable(), 1, 4000, seed=2)
    assert point == pytest.approx(2.0, rel=0.1)
    assert upper > point
    with pytest.raises(InputValidationError):
        batch_means_variance(chain, chain.observable(), 1, 1, seed=2)


def test_mc_coupling_cost(chain):
    # copies started apart disagree after one step with probability 1 - 0.26
    result = mc_coupling_cost(chain, 1, 0, 1, 20000, seed=6)
    assert result.ci_low <= 0.74 <= result.ci_high
    assert result.method == "hoeffding"


@pytest.mark.parametrize("bound,est,status", [
    (12.0, 10.0, 'dominates'),
    (10.0, 12.0, 'violated'),
    (10.0, 10.0, 'dominates'),
    (10.0, 10.0 * (1 + 1e-13), 'violated'),
])
def test_compare_exact(bound, est, status):
    assert compare(make_report(bound), est).status == status


def test_compare_exact_integers_are_strict():
    value = math.factorial(30) ** 3
    report = BoundReport(theorem_id='B-upper', inputs={'q': 15}, log_value=LogValue.from_int(value))
    assert compare(report, value).status == 'dominates'
    assert compare(report, value + value // 10 ** 9).status == 'violated'


def test_b_upper_is_tight_at_u1_under_strict_compare():
    for q in range(2, 7):
        for gamma in (0, 1, 2):
            enumerated = b_coefficient_exact(gamma, 1, q)
            report = BoundReport(theorem_id='B-upper', inputs={'q': q, 'gamma': gamma},
                                 log_value=b_coefficient_upper(gamma, 1, q))
            assert compare(report, enumerated).status == 'dominates'


@pytest.mark.parametrize("interval,status", [
    ((0.32, 0.30, 0.35), 'violated'),
    ((0.2, 0.15, 0.25), 'inconclusive'),
    ((0.1, 0.05, 0.15), 'dominates'),
])
def test_compare_monte_carlo(interval, status):
    report = make_report(0.2, theorem_id='T5', t=1.0)
    verdict = compare(report, estimate(*interval))
    assert verdict.status == status
    assert not verdict.exact


def test_compare_uses_clamped_tail():
    report = make_report(3.0, theorem_id='T5', t=0.5)
    assert report.value == 1.0
    assert compare(report, estimate(1.0, 0.99, 1.0)).status == 'dominates'


def test_compare_provenance():
    report = make_report(1.0, config_hash='aaa')
    with pytest.raises(ProvenanceError):
        compare(report, estimate(0.5, 0.4, 0.6, config_hash='bbb'))
    with pytest.raises(ProvenanceError):
        compare(report, 0.5, config_hash='bbb')
    assert compare(report, 0.5, config_hash='aaa').status == 'dominates'


def test_estimate_must_contain_point():
    with pytest.raises(InputValidationError):
        McEstimate(0.5, 0.6, 0.7, 0.99, 100, 1)


def test_verdict_row():
    report = make_report(0.2, theorem_id='T5', t=1.0)
    row = verdict_row(report, compare(report, estimate(0.1, 0.05, 0.15)), 'chain', 9)
    assert set(row) == set(REPORT_COLUMNS)
    assert row['model_id'] == 'chain'
    assert row['ci_high'] == 0.15


def test_sweep_empty_grid():
    table = sweep({'n': [], 'q': [1, 2]}, lambda cell: (make_report(1.0), 0.5), 'm', 1)
    assert list(table.columns) == REPORT_COLUMNS
    assert len(table) == 0
    assert summarize(table) == {'dominates': 0, 'violated': 0, 'inconclusive': 0, 'error': 0}


def test_sweep_grid_order_and_errors():
    def cell_result(cell):
        if cell['q'] == 3:
            raise InputValidationError("q too large for this cell")
        return make_report(10.0 * cell['n']), float(cell['n'])

    table = sweep({'n': [1, 2, 3], 'q': [1, 2, 3]}, cell_result, 'm', 7, config_hash='abc')
    assert len(table) == 9
    assert list(table['n']) == [1, 1, 1, 2, 2, 2, 3, 3, 3]
    assert summarize(table) == {'dominates': 6, 'violated': 0, 'inconclusive': 0, 'error': 3}
    assert set(table['config_hash']) == {'abc'}
    assert isinstance(table, pd.DataFrame)


def test_sweep_streams_rows_as_cells_finish(tmp_path):
    csv_path = str(tmp_path / 'stream.csv')
    seen = []

    def cell_result(cell):
        # every earlier cell is already on disk when the next one starts
        seen.append(len(pd.read_csv(csv_path)))
        if cell['n'] == 2:
            raise InputValidationError("bad cell")
        return make_report(10.0 * cell['n']), float(cell['n'])

    table = sweep({'n': [1, 2, 3]}, cell_result, 'm', 7, config_hash='abc', csv_path=csv_path)
    assert seen == [0, 1, 2]
    streamed = pd.read_csv(csv_path)
    assert list(streamed.columns) == REPORT_COLUMNS
    assert list(streamed['status']) == list(table['status']) == ['dominates', 'error', 'dominates']
    assert list(streamed['n']) == [1, 2, 3]

    sweep({'n': [4]}, cell_result, 'm', 7, config_hash='abc', csv_path=csv_path, append=True)
    assert list(pd.read_csv(csv_path)['n']) == [1, 2, 3, 4]


def test_sweep_empty_grid_streams_header_only(tmp_path):
    csv_path = tmp_path / 'empty.csv'
    sweep({'n': []}, lambda cell: (make_report(1.0), 0.5), 'm', 1, csv_path=str(csv_path))
    assert csv_path.read_text() == ','.join(REPORT_COLUMNS) + '\n'
