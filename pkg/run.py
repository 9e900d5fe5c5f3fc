"""
Main runner script for ChainBound
"""
import sys
import os
import argparse
import hashlib
import json
import logging
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

# Add src to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

from src.bounds import TAIL_EVALUATORS, evaluate
from src.chains import FiniteChain
from src.config import Config
from src.cumulants import exact_sn_moments_from
from src.errors import CertificateInvalidError, ConfigError, InputValidationError
from src.harness import mc_moment, mc_tail, summarize, sweep
from src.run_config import RunConfig, RunConfigManager
from src.services import (
    CRITERIA,
    NONSTATIONARY_THEOREMS,
    AcceptanceSuite,
    CertificationService,
    CertifiedModel,
)
from src.storage import ReportStorage

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_CONFIG = 2
EXIT_INTERNAL = 3

TRAJECTORY_STREAM = 0x7EA


def setup_logging(level: str = "INFO", log_file: Optional[str] = None):
    """Setup logging configuration"""
    logging.basicConfig(
        level=getattr(logging, level.upper()),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=[
            logging.StreamHandler(),
            logging.FileHandler(log_file or Config.LOG_FILE)
        ]
    )


def load_run(args) -> RunConfig:
    """Read --config, apply --set, --workers and --output-dir, and validate"""
    if not args.config:
        raise ConfigError("this command needs --config")
    overrides = list(args.set or [])
    if args.workers:
        overrides.append(f"workers={args.workers}")
    if args.output_dir:
        overrides.append(f"output.dir={json.dumps(args.output_dir)}")
    return RunConfigManager().load(args.config, overrides)


def _cell_seed(seed: int, cell: Dict[str, Any]) -> int:
    digest = hashlib.sha256(json.dumps(cell, sort_keys=True).encode('utf-8')).digest()
    state = np.random.SeedSequence([seed, int.from_bytes(digest[:8], 'little')]).generate_state(1, np.uint64)
    return int(state[0])


def _init_for(theorem_id: str, certified: CertifiedModel):
    return certified.init if theorem_id in NONSTATIONARY_THEOREMS else None


def show_constants(run: RunConfig, storage: ReportStorage) -> int:
    """Certificates and rates for the configured model"""
    logger = logging.getLogger(__name__)
    service = CertificationService(run)
    certified = service.certify()

    print(f"\n📐 Constants for '{certified.model_id}' ({run.config_hash[:12]})")
    print("=" * 50)
    for label, cert in (("Drift", certified.drift), ("Coupling", certified.coupling)):
        if cert is not None:
            print(f"{label}: " + ", ".join(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}"
                                           for k, v in cert.to_dict().items()))
    print(f"pi(V): {certified.pi_V:.6g} ({certified.pi_V_source})")
    if certified.geom is not None:
        print(f"Geometric rate: rho={certified.geom.rho:.6g}, c={certified.geom.c:.6g}")
    if certified.wass is not None:
        wass = certified.wass
        branch = " (delta* = 0 branch)" if wass.degenerate else ""
        print(f"Wasserstein rate: delta*={wass.delta_star:.6g}{branch}, varrho={wass.varrho:.6g}, "
              f"c_K={wass.c_K:.6g}, C1={wass.C1:.6g}")
    if certified.flags:
        print(f"Flags: {', '.join(certified.flags)}")

    payload = {'config_hash': run.config_hash, **certified.to_dict()}
    storage.save_json(payload, f"{run.output_name}_constants")
    logger.info(f"constants written for {certified.model_id}")
    return EXIT_OK


def evaluate_bounds(run: RunConfig, storage: ReportStorage) -> int:
    """Evaluate every selected theorem on the configured grids"""
    service = CertificationService(run)
    certified = service.certify()
    reports = []
    rows = []
    for theorem_id in run.theorems:
        tail = theorem_id in TAIL_EVALUATORS
        ts = run.grid('t') if tail else [None]
        if tail and not ts:
            raise ConfigError(f"{theorem_id} is a tail bound and needs grids.t")
        for n in run.grid('n'):
            for q in run.grid('q'):
                for gamma in run.grid('gamma'):
                    inputs = service.bound_inputs(certified, theorem_id, int(q), int(n), float(gamma))
                    for t in ts:
                        report = evaluate(theorem_id, inputs, t)
                        report.config_hash = run.config_hash
                        reports.append(report)
                        row = report.to_row()
                        row.update(model_id=certified.model_id, bound_raw=report.raw,
                                   flags=';'.join(report.flags))
                        rows.append(row)

    print(f"\n📈 Bounds for '{certified.model_id}' ({run.config_hash[:12]})")
    print("=" * 50)
    for report in reports:
        where = f"n={report.inputs['n']}, q={report.inputs['q']}, gamma={report.inputs['gamma']}"
        if report.t is not None:
            print(f"  {report.theorem_id} [{where}, t={report.t:g}]: {report.value:.6g} (raw {report.raw:.6g})")
        else:
            print(f"  {report.theorem_id} [{where}]: {report.value:.6g}")

    storage.save_report_table(pd.DataFrame(rows), f"{run.output_name}_bounds")
    storage.save_json({'config_hash': run.config_hash, 'reports': reports}, f"{run.output_name}_bounds")
    return EXIT_OK


def simulate_chain(run: RunConfig, storage: ReportStorage, steps: Optional[int] = None) -> int:
    """Dump one trajectory and Monte Carlo tail and moment estimates"""
    service = CertificationService(run)
    certified = service.certify()
    chain = certified.chain
    if chain is None:
        raise ConfigError("simulate needs a finite, sgd or pcn model")
    steps = steps or max(run.grid('n'))
    rng = np.random.default_rng(np.random.SeedSequence([run.seed, TRAJECTORY_STREAM]))
    storage.save_trajectory(chain.trajectory(int(steps), rng, certified.init), f"{run.output_name}_trajectory")

    rows = []
    for n in run.grid('n'):
        for t in run.grid('t'):
            cell = {'kind': 'tail', 'n': n, 't': t}
            estimate = mc_tail(chain, certified.observable, int(n), float(t), run.replicas,
                               _cell_seed(run.seed, cell), init=certified.init, level=run.ci_level,
                               workers=run.workers)
            rows.append({**cell, 'q': None, **estimate.to_dict()})
        for q in run.grid('q'):
            cell = {'kind': 'moment', 'n': n, 'q': q}
            estimate = mc_moment(chain, certified.observable, int(n), 2 * int(q), run.replicas,
                                 _cell_seed(run.seed, cell), init=certified.init, workers=run.workers)
            rows.append({**cell, 't': None, **estimate.to_dict()})
    table = pd.DataFrame(rows)
    if len(table):
        table['config_hash'] = run.config_hash
    storage.save_report_table(table, f"{run.output_name}_simulate")

    print(f"\n🎲 Simulation of '{certified.model_id}': {steps} steps, {len(rows)} estimates")
    for row in rows:
        label = f"P(|S_n| >= {row['t']:g})" if row['kind'] == 'tail' else f"E S_n^{2 * int(row['q'])}"
        print(f"  n={row['n']} {label}: {row['point']:.6g} [{row['ci_low']:.6g}, {row['ci_high']:.6g}]")
    return EXIT_OK


def _exact_or_mc(run: RunConfig, certified: CertifiedModel, cell: Dict[str, Any]):
    """The truth a sweep cell is compared with: exact moments on finite chains, Monte Carlo otherwise"""
    theorem_id = cell['theorem']
    n = int(cell['n'])
    init = _init_for(theorem_id, certified)
    chain = certified.chain
    if theorem_id in TAIL_EVALUATORS:
        return mc_tail(chain, certified.observable, n, float(cell['t']), run.replicas,
                       _cell_seed(run.seed, cell), init=init, level=run.ci_level, workers=run.workers)
    power = 2 * int(cell['q'])
    if isinstance(chain, FiniteChain):
        return exact_sn_moments_from(chain, chain.g, n, power, init=init)[power]
    return mc_moment(chain, certified.observable, n, power, run.replicas, _cell_seed(run.seed, cell),
                     init=init, workers=run.workers)


def sweep_grid(run: RunConfig, csv_path: Optional[str] = None) -> pd.DataFrame:
    """Bound-vs-truth table over theorems x n x q x gamma (x t for tails); rows stream to csv_path if set"""
    logger = logging.getLogger(__name__)
    service = CertificationService(run)
    certified = service.certify()
    if certified.chain is None:
        raise ConfigError("sweeps need a finite, sgd or pcn model to compare against")

    def evaluate_cell(cell):
        inputs = service.bound_inputs(certified, cell['theorem'], int(cell['q']), int(cell['n']),
                                      float(cell['gamma']))
        return evaluate(cell['theorem'], inputs, cell['t']), _exact_or_mc(run, certified, cell)

    tables = []
    for theorem_id in run.theorems:
        tail = theorem_id in TAIL_EVALUATORS
        if tail and not run.grid('t'):
            raise ConfigError(f"{theorem_id} is a tail bound and needs grids.t")
        grid = {'theorem': [theorem_id], 'n': run.grid('n'), 'q': run.grid('q'),
                'gamma': run.grid('gamma'), 't': run.grid('t') if tail else [None]}
        tables.append(sweep(grid, evaluate_cell, certified.model_id, run.seed, run.config_hash,
                            csv_path=csv_path, append=bool(tables)))
        logger.info(f"sweep {theorem_id}: {summarize(tables[-1])}")
    return pd.concat(tables, ignore_index=True) if tables else pd.DataFrame()


def print_summary(title: str, counts: Dict[str, int]):
    print(f"\n✅ {title}" if counts['violated'] == 0 and counts['error'] == 0 else f"\n❌ {title}")
    print("=" * 50)
    for status, count in counts.items():
        print(f"  {status}: {count}")


def run_sweep(run: RunConfig, storage: ReportStorage) -> int:
    name = f"{run.output_name}_sweep"
    table = sweep_grid(run, storage.table_path(name))
    storage.save_report_table(table, name, write_csv=False)
    print_summary(f"Sweep of {len(table)} cells", summarize(table))
    return EXIT_OK


def run_verify(args) -> int:
    """Acceptance suite, or a config-driven sweep that must not be violated"""
    if args.suite == 'acceptance':
        suite = AcceptanceSuite(seed=args.seed, quick=args.quick, workers=args.workers)
        table, results = suite.run(args.criteria)
        storage = ReportStorage(args.output_dir)
        storage.save_report_table(table, 'acceptance')

        print(f"\n🧪 Acceptance suite ({'quick' if args.quick else 'full'}, seed {suite.seed})")
        print("=" * 50)
        for result in results:
            mark = "✅" if result.passed else "❌"
            print(f"  {mark} {result.number:2d}. {result.name}: {result.counts()} "
                  f"({result.elapsed:.1f}s of {result.budget}s)")
        return EXIT_OK if all(r.passed for r in results) else EXIT_VERIFY_FAILED

    run = load_run(args)
    storage = ReportStorage(args.output_dir or run.output_dir)
    name = f"{run.output_name}_verify"
    table = sweep_grid(run, storage.table_path(name))
    storage.save_report_table(table, name, write_csv=False)
    counts = summarize(table)
    print_summary(f"Verification of {len(table)} cells", counts)
    return EXIT_OK if counts['violated'] == 0 and counts['error'] == 0 else EXIT_VERIFY_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="ChainBound - Rosenthal and Bernstein bounds for Markov chains")
    parser.add_argument("--log-level", default=Config.LOG_LEVEL, choices=["DEBUG", "INFO", "WARNING", "ERROR"],
                        help="Set logging level")
    parser.add_argument("--config", help="Run configuration (JSON)")
    parser.add_argument("--set", action="append", default=[], metavar="KEY.PATH=VALUE",
                        help="Override a config field; may be repeated")
    parser.add_argument("--output-dir", help=f"Output directory (default: {Config.OUTPUT_DIR})")
    parser.add_argument("--workers", type=int, help="Worker threads for Monte Carlo blocks")

    subparsers = parser.add_subparsers(dest="command", help="Available commands")

    # Constants command
    subparsers.add_parser("constants", help="Certificates and mixing/contraction rates")

    # Bound command
    subparsers.add_parser("bound", help="Evaluate the selected theorem bounds")

    # Simulate command
    simulate_parser = subparsers.add_parser("simulate", help="Trajectory dump and Monte Carlo estimates")
    simulate_parser.add_argument("--steps", type=int, help="Trajectory length (default: largest n)")

    # Verify command
    verify_parser = subparsers.add_parser("verify", help="Check bounds against exact or simulated truth")
    verify_parser.add_argument("--suite", choices=["acceptance"], help="Run a built-in verification suite")
    verify_parser.add_argument("--quick", action="store_true", help="Shrink the suite for smoke runs")
    verify_parser.add_argument("--criteria", type=int, nargs="+", choices=sorted(CRITERIA),
                               help="Acceptance criteria to run (default: all)")
    verify_parser.add_argument("--seed", type=int, help="Suite seed")

    # Sweep command
    subparsers.add_parser("sweep", help="Bound-vs-truth table over the configured grids")

    return parser


def dispatch(args) -> int:
    if args.command == "verify":
        return run_verify(args)

    run = load_run(args)
    storage = ReportStorage(args.output_dir or run.output_dir)

    if args.command == "constants":
        return show_constants(run, storage)

    elif args.command == "bound":
        return evaluate_bounds(run, storage)

    elif args.command == "simulate":
        return simulate_chain(run, storage, args.steps)

    elif args.command == "sweep":
        return run_sweep(run, storage)

    raise ConfigError(f"unknown command {args.command}")


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point"""
    parser = build_parser()
    args = parser.parse_args(argv)

    # Setup logging
    setup_logging(args.log_level)
    logger = logging.getLogger(__name__)

    if not args.command:
        parser.print_help()
        return EXIT_CONFIG

    try:
        return dispatch(args)
    except (ConfigError, InputValidationError, CertificateInvalidError) as e:
        logger.error(f"{args.command}: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as e:
        logger.error(f"{args.command} failed: {e}", exc_info=True)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
