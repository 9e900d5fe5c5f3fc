"""
Report storage for ChainBound: CSV tables with parquet mirrors and JSON documents
"""
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np
import pandas as pd

from .config import Config

logger = logging.getLogger(__name__)

FLOAT_FORMAT = '%.17g'


def _jsonable(obj: Any) -> Any:
    """Recursively convert numpy scalars, arrays and non-finite floats for json.dump"""
    if hasattr(obj, 'to_dict'):
        return _jsonable(obj.to_dict())
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        if math.isnan(value):
            return 'nan'
        if math.isinf(value):
            return 'inf' if value > 0 else '-inf'
        return value
    return obj


class ReportStorage:
    """Storage manager for ChainBound reports under one output directory"""

    def __init__(self, output_dir: Optional[str] = None):
        self.output_dir = Path(Config.ensure_output_dir(output_dir))

    def _path(self, name: str, suffix: str) -> Path:
        stem = name[:-len(suffix)] if name.endswith(suffix) else name
        return self.output_dir / f"{stem}{suffix}"

    def table_path(self, name: str) -> str:
        """CSV path of a report table, for writers that stream rows into it"""
        return str(self._path(name, '.csv'))

    def save_report_table(self, df: pd.DataFrame, name: str, parquet: bool = True, write_csv: bool = True) -> str:
        """
        Save a report table as CSV, plus a parquet mirror

        Args:
            df: Report table in harness column order
            name: File name without extension
            parquet: Also write <name>.parquet
            write_csv: False when the CSV was already streamed row by row

        Returns:
            Path to the CSV file
        """
        csv_path = self._path(name, '.csv')
        if write_csv:
            try:
                df.to_csv(csv_path, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
                logger.info(f"Saved {len(df)} rows to {csv_path}")
            except Exception as e:
                logger.error(f"Error saving report table to {csv_path}: {e}")
                raise

        if parquet:
            parquet_path = self._path(name, '.parquet')
            try:
                df.to_parquet(parquet_path, index=False, compression='snappy')
            except Exception as e:
                # The CSV is the interface; a failed mirror is not fatal
                logger.warning(f"Could not write parquet mirror {parquet_path}: {e}")
        return str(csv_path)

    def load_report_table(self, name: str) -> pd.DataFrame:
        """Load a report table written by save_report_table"""
        csv_path = self._path(name, '.csv')
        if not csv_path.exists():
            logger.warning(f"No report table at {csv_path}")
            return pd.DataFrame()
        return pd.read_csv(csv_path)

    def save_json(self, obj: Any, name: str) -> str:
        """Write a JSON document with sorted keys"""
        path = self._path(name, '.json')
        try:
            with open(path, 'w') as f:
                json.dump(_jsonable(obj), f, indent=2, sort_keys=True)
                f.write('\n')
            logger.info(f"Saved {path}")
            return str(path)
        except Exception as e:
            logger.error(f"Error saving {path}: {e}")
            raise

    def load_json(self, name: str) -> Dict[str, Any]:
        path = self._path(name, '.json')
        with open(path) as f:
            return json.load(f)

    def save_trajectory(self, steps: np.ndarray, name: str) -> str:
        """
        Dump a simulated trajectory

        Args:
            steps: (n + 1, dim) array of states; a 1-d array is treated as dim = 1
        """
        steps = np.asarray(steps)
        if steps.ndim == 1:
            steps = steps[:, None]
        df = pd.DataFrame(steps, columns=[f"x{i}" for i in range(steps.shape[1])])
        df.insert(0, 'step', np.arange(len(df)))
        return self.save_report_table(df, name, parquet=False)
