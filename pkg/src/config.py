"""
Configuration management for ChainBound
"""
import os
from dotenv import load_dotenv
from typing import Any

# Load environment variables
load_dotenv()


class Config:
    """Configuration class for ChainBound"""

    # Output and logging
    OUTPUT_DIR = os.getenv('CHAINBOUND_OUTPUT_DIR', './reports')
    LOG_LEVEL = os.getenv('LOG_LEVEL', 'INFO')
    LOG_FILE = os.getenv('CHAINBOUND_LOG_FILE', 'chainbound.log')

    # Monte Carlo defaults
    DEFAULT_SEED = int(os.getenv('CHAINBOUND_SEED', '20240917'))
    CI_LEVEL = float(os.getenv('CHAINBOUND_CI_LEVEL', '0.999'))
    MOMENT_CI_LEVEL = float(os.getenv('CHAINBOUND_MOMENT_CI_LEVEL', '0.95'))
    BOOTSTRAP_RESAMPLES = int(os.getenv('CHAINBOUND_BOOTSTRAP_RESAMPLES', '2000'))
    WORKERS = int(os.getenv('CHAINBOUND_WORKERS', '1'))
    BLOCK_SIZE = int(os.getenv('CHAINBOUND_BLOCK_SIZE', '10000'))

    # Numerical settings
    NUMERICS = {
        'bisection_tol': 1e-12,
        'bisection_max_iter': 400,
        'bracket_max_doublings': 200,
        'partition_cap': 20,
        'log_space_q_threshold': 8,
        'dp_budget': 50_000_000,
        'path_enumeration_cap': 200_000,
        'stationary_residual': 1e-12,
    }

    MONTE_CARLO = {
        'min_replicas': 100,
        'ball_measure_samples': 1_000_000,
    }

    @classmethod
    def get_numerics(cls, key: str) -> Any:
        """Get a numerical setting"""
        return cls.NUMERICS[key]

    @classmethod
    def ensure_output_dir(cls, output_dir: str = None) -> str:
        """Ensure output directory exists and return path"""
        path = output_dir or cls.OUTPUT_DIR
        os.makedirs(path, exist_ok=True)
        return path
