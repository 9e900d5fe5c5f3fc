#!/usr/bin/env python3
"""
Tests for the command line runner: outputs and exit codes
"""
import json
import os
import sys

import pandas as pd
import pytest

# Add src to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

from run import EXIT_CONFIG, EXIT_OK, main
from src.services.acceptance_suite import REFERENCE_G, REFERENCE_Q, REFERENCE_V

FINITE = {'type': 'finite', 'Q': REFERENCE_Q, 'V': REFERENCE_V, 'g': REFERENCE_G}
RAW = {'type': 'certificate', 'lambda': 0.5, 'b': 1.0, 'd': 9.0, 'm': 1, 'eps': 0.5}


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def write_config(workdir, data, name='run.json'):
    path = workdir / name
    path.write_text(json.dumps(data))
    return str(path)


def test_constants_for_raw_certificate(workdir):
    config = write_config(workdir, {'model': RAW, 'output': {'name': 'raw'}})
    assert main(['--config', config, '--output-dir', str(workdir / 'out'), 'constants']) == EXIT_OK
    data = json.loads((workdir / 'out' / 'raw_constants.json').read_text())
    assert data['geometric_rate']['rho'] == pytest.approx(0.927843, abs=1e-5)
    assert 'pi_V-fallback' in data['flags']
    assert len(data['config_hash']) == 64


def test_output_dir_does_not_change_the_hash(workdir):
    config = write_config(workdir, {'model': RAW})
    assert main(['--config', config, '--output-dir', str(workdir / 'a'), 'constants']) == EXIT_OK
    assert main(['--config', config, '--output-dir', str(workdir / 'b'), 'constants']) == EXIT_OK
    first = json.loads((workdir / 'a' / 'report_constants.json').read_text())
    second = json.loads((workdir / 'b' / 'report_constants.json').read_text())
    assert first == second


def test_config_errors_exit_2(workdir):
    broken = workdir / 'broken.json'
    broken.write_text('{"model": ')
    assert main(['--config', str(broken), 'constants']) == EXIT_CONFIG
    assert main(['--config', str(workdir / 'absent.json'), 'constants']) == EXIT_CONFIG
    assert main(['constants']) == EXIT_CONFIG
    assert main([]) == EXIT_CONFIG


def test_invalid_certificate_exits_2(workdir):
    config = write_config(workdir, {'model': {**RAW, 'lambda': 1.2}})
    assert main(['--config', config, 'constants']) == EXIT_CONFIG


def test_set_override_can_invalidate(workdir):
    config = write_config(workdir, {'model': RAW})
    assert main(['--config', config, '--set', 'replicas=10', 'constants']) == EXIT_CONFIG


def test_bound_writes_table(workdir):
    config = write_config(workdir, {'model': FINITE, 'theorems': ['T1', 'T5'],
                                    'grids': {'n': [10], 'q': [1], 't': [2.0]}, 'output': {'name': 'ref'}})
    assert main(['--config', config, '--output-dir', str(workdir), 'bound']) == EXIT_OK
    table = pd.read_csv(workdir / 'ref_bounds.csv')
    assert list(table['theorem_id']) == ['T1', 'T5']
    assert table['bound_clamped'].iloc[1] <= 1.0
    assert (workdir / 'ref_bounds.json').exists()


def test_tail_bound_without_t_grid_exits_2(workdir):
    config = write_config(workdir, {'model': FINITE, 'theorems': ['T5']})
    assert main(['--config', config, '--output-dir', str(workdir), 'bound']) == EXIT_CONFIG


def test_raw_certificate_without_norm_exits_2(workdir):
    config = write_config(workdir, {'model': RAW, 'theorems': ['T1']})
    assert main(['--config', config, '--output-dir', str(workdir), 'bound']) == EXIT_CONFIG


def test_sweep_on_reference_chain(workdir):
    config = write_config(workdir, {'model': FINITE, 'theorems': ['T1', 'T3'],
                                    'grids': {'n': [5], 'q': [1, 2]}, 'output': {'name': 'ref'}})
    assert main(['--config', config, '--output-dir', str(workdir), 'sweep']) == EXIT_OK
    table = pd.read_csv(workdir / 'ref_sweep.csv')
    assert len(table) == 4
    assert set(table['status']) == {'dominates'}
    assert (workdir / 'ref_sweep.parquet').exists()


def test_verify_config_sweep(workdir):
    config = write_config(workdir, {'model': FINITE, 'theorems': ['T1'],
                                    'grids': {'n': [3, 6], 'q': [1, 2, 3]}, 'output': {'name': 'ref'}})
    assert main(['--config', config, '--output-dir', str(workdir), 'verify']) == EXIT_OK
    assert len(pd.read_csv(workdir / 'ref_verify.csv')) == 6


def test_simulate_writes_trajectory(workdir):
    config = write_config(workdir, {'model': FINITE, 'replicas': 200,
                                    'grids': {'n': [5], 'q': [1], 't': [1.0]}, 'output': {'name': 'ref'}})
    assert main(['--config', config, '--output-dir', str(workdir), 'simulate', '--steps', '8']) == EXIT_OK
    trajectory = pd.read_csv(workdir / 'ref_trajectory.csv')
    assert trajectory['step'].tolist() == list(range(9))
    assert set(trajectory['x0']) <= {0.0, 1.0}
    estimates = pd.read_csv(workdir / 'ref_simulate.csv')
    assert sorted(estimates['kind']) == ['moment', 'tail']


def test_simulate_is_deterministic(workdir):
    config = write_config(workdir, {'model': FINITE, 'replicas': 200,
                                    'grids': {'n': [5], 'q': [1], 't': [1.0]}})
    main(['--config', config, '--output-dir', str(workdir / 'a'), 'simulate'])
    main(['--config', config, '--output-dir', str(workdir / 'b'), 'simulate'])
    first = (workdir / 'a' / 'report_simulate.csv').read_bytes()
    second = (workdir / 'b' / 'report_simulate.csv').read_bytes()
    assert first == second


def test_acceptance_criteria_subset(workdir):
    code = main(['--output-dir', str(workdir), 'verify', '--suite', 'acceptance', '--quick',
                 '--criteria', '5', '9'])
    assert code == EXIT_OK
    table = pd.read_csv(workdir / 'acceptance.csv')
    assert len(table) > 0
    assert not table['status'].isin(['violated', 'error']).any()
