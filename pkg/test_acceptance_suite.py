#!/usr/bin/env python3
"""
Tests for the acceptance suite runner
"""
import os
import sys

import numpy as np
import pytest

# Add src to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

from src.harness import REPORT_COLUMNS
from src.services.acceptance_suite import (
    CRITERIA,
    AcceptanceSuite,
    CriterionResult,
    TAIL_MULTIPLIERS,
    drift_points,
    quadratic_delta_star,
    table_digest,
)


def test_cheap_criteria_pass():
    table, results = AcceptanceSuite(quick=True).run([9, 5])
    assert [r.number for r in results] == [5, 9]
    assert all(r.passed for r in results)
    assert list(table.columns) == REPORT_COLUMNS
    assert len(table) == sum(len(r.rows) for r in results)


def test_markov_reduction_criterion():
    _, results = AcceptanceSuite(quick=True).run([3])
    assert results[0].passed
    assert results[0].counts() == {'dominates': len(results[0].rows)}


def test_unknown_criterion():
    with pytest.raises(ValueError):
        AcceptanceSuite(quick=True).run([99])


def test_same_seed_same_table():
    first, _ = AcceptanceSuite(seed=11, quick=True).run([5])
    second, _ = AcceptanceSuite(seed=11, quick=True).run([5])
    assert table_digest(first) == table_digest(second)


def test_empty_result_does_not_pass():
    assert not CriterionResult(number=1, name='empty').passed
    failing = CriterionResult(number=1, name='x', rows=[{'status': 'dominates'}, {'status': 'violated'}])
    assert not failing.passed
    assert failing.counts() == {'dominates': 1, 'violated': 1}


def test_every_criterion_has_a_method():
    suite = AcceptanceSuite(quick=True)
    for number in CRITERIA:
        assert callable(getattr(suite, f"criterion_{number}"))


def test_quadratic_delta_star_reference(wass_certificate):
    assert quadratic_delta_star(wass_certificate) == pytest.approx(0.53003, abs=1e-4)


@pytest.mark.slow
def test_quick_suite_passes():
    _, results = AcceptanceSuite(quick=True).run()
    failed = [(r.number, r.counts()) for r in results if not r.passed]
    assert failed == []


def test_drift_points_straddle_the_ball(rng):
    center = np.array([1.0, -1.0, 0.5])
    points = drift_points(center, 2.0, 50, rng)
    distances = np.linalg.norm(points - center, axis=1)
    assert points.shape == (50, 3)
    assert distances == pytest.approx(np.linspace(0.0, 4.0, 50))
    assert np.sum(distances < 2.0) == 25
    assert np.sum(distances > 2.0) == 25


def test_tail_grid_starts_below_one_standard_deviation():
    suite = AcceptanceSuite(quick=True)
    assert suite._tail_grid(4.0) == pytest.approx([1.0, 2.0, 4.0, 8.0])
    assert TAIL_MULTIPLIERS[0] == 0.5


def test_mixing_criterion_covers_each_bound():
    _, results = AcceptanceSuite(quick=True).run([4])
    result = results[0]
    assert result.passed
    checks = {row['theorem_id'] for row in result.rows}
    assert checks == {'mixing', 'valpha-0.25', 'valpha-0.5', 'valpha-1', 'homogeneous-scaling'}
    scaling = [row for row in result.rows if row['theorem_id'] == 'homogeneous-scaling']
    assert len(scaling) == 4


def test_sgd_criterion_checks_drift_at_fifty_points():
    _, results = AcceptanceSuite(quick=True).run([10])
    result = results[0]
    assert result.passed
    drift = [row for row in result.rows if row['theorem_id'] == 'drift']
    assert len(drift) == 50
    assert all(row['status'] == 'dominates' for row in drift)


@pytest.mark.slow
def test_coupling_criterion_checks_pcn_drift():
    _, results = AcceptanceSuite(quick=True).run([8])
    result = results[0]
    assert result.passed
    pcn_drift = [row for row in result.rows
                 if row['theorem_id'] == 'drift' and row['model_id'].startswith('c8/pcn')]
    assert len(pcn_drift) == 20
