"""
Run configuration management for ChainBound
"""
import copy
import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

from jsonschema import Draft202012Validator

from .config import Config
from .errors import ConfigError

logger = logging.getLogger(__name__)

SCHEMA_PATH = Path(__file__).resolve().parent.parent / 'schemas' / 'run_config.schema.json'

# Keys that change where or how fast a run happens but not what it computes
UNHASHED_KEYS = ('workers', 'output')

DEFAULT_GRIDS = {'n': [100], 'q': [2], 't': [], 'gamma': [0.0]}


def _json_bytes(payload: Any) -> bytes:
    return json.dumps(payload, ensure_ascii=True, sort_keys=True, separators=(",", ":")).encode("utf-8")


def config_hash(data: Dict[str, Any]) -> str:
    """sha256 of the canonical JSON of everything that affects results"""
    hashed = {k: v for k, v in data.items() if k not in UNHASHED_KEYS and k != 'config_hash'}
    return hashlib.sha256(_json_bytes(hashed)).hexdigest()


def parse_override(item: str) -> Tuple[str, Any]:
    """Split 'a.b.c=value'; the value is read as JSON and falls back to a plain string"""
    if '=' not in item:
        raise ConfigError(f"override '{item}' must look like key.path=value")
    key, raw = item.split('=', 1)
    key = key.strip()
    if not key:
        raise ConfigError(f"override '{item}' has an empty key")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key, value


def apply_overrides(data: Dict[str, Any], overrides: Sequence[str]) -> Dict[str, Any]:
    """Return a copy of data with dot-path overrides applied in order"""
    data = copy.deepcopy(data)
    for item in overrides or ():
        key, value = parse_override(item)
        target = data
        parts = key.split('.')
        for part in parts[:-1]:
            node = target.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override '{key}' descends into non-object '{part}'")
            target = node
        target[parts[-1]] = value
        logger.debug(f"override {key} = {value!r}")
    return data


@dataclass
class RunConfig:
    """Validated run configuration"""
    model: Dict[str, Any]
    certificate: Dict[str, Any] = field(default_factory=dict)
    theorems: List[str] = field(default_factory=lambda: ['T1'])
    grids: Dict[str, List[Any]] = field(default_factory=lambda: copy.deepcopy(DEFAULT_GRIDS))
    bound: Dict[str, Any] = field(default_factory=dict)
    variance: Dict[str, Any] = field(default_factory=lambda: {'source': 'exact', 'batches': 200})
    replicas: int = 10000
    seed: Optional[int] = None
    ci_level: Optional[float] = None
    workers: Optional[int] = None
    output: Dict[str, str] = field(default_factory=dict)
    config_hash: str = ""

    def __post_init__(self):
        # environment defaults are read at construction, not import
        if self.seed is None:
            self.seed = Config.DEFAULT_SEED
        if self.ci_level is None:
            self.ci_level = Config.CI_LEVEL
        if self.workers is None:
            self.workers = Config.WORKERS

    @property
    def model_type(self) -> str:
        return self.model['type']

    @property
    def output_dir(self) -> str:
        return self.output.get('dir') or Config.OUTPUT_DIR

    @property
    def output_name(self) -> str:
        return self.output.get('name', 'report')

    def grid(self, axis: str) -> List[Any]:
        return list(self.grids.get(axis, DEFAULT_GRIDS.get(axis, [])))

    def to_dict(self) -> Dict[str, Any]:
        return {
            'model': self.model,
            'certificate': self.certificate,
            'theorems': self.theorems,
            'grids': self.grids,
            'bound': self.bound,
            'variance': self.variance,
            'replicas': self.replicas,
            'seed': self.seed,
            'ci_level': self.ci_level,
            'workers': self.workers,
            'output': self.output,
            'config_hash': self.config_hash,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'RunConfig':
        known = {k: v for k, v in data.items() if k in cls.__dataclass_fields__ and k != 'config_hash'}
        run = cls(**known)
        grids = copy.deepcopy(DEFAULT_GRIDS)
        grids.update(run.grids)
        run.grids = grids
        # hash the resolved config so omitted and explicit defaults agree
        run.config_hash = config_hash(run.to_dict())
        return run


class RunConfigManager:
    """Loads, overrides and validates run configurations"""

    def __init__(self, schema_path: Optional[Path] = None):
        self.schema_path = Path(schema_path or SCHEMA_PATH)
        with open(self.schema_path) as f:
            self.schema = json.load(f)
        self.validator = Draft202012Validator(self.schema)

    def validate(self, data: Dict[str, Any]):
        """Raise ConfigError listing every schema violation"""
        errors = sorted(self.validator.iter_errors(data), key=lambda e: [str(p) for p in e.absolute_path])
        if errors:
            details = "; ".join(
                f"{'/'.join(str(p) for p in e.absolute_path) or '<root>'}: {e.message}" for e in errors)
            raise ConfigError(f"run config fails schema validation: {details}")

    def parse(self, text: str, source: str = "<config>") -> Dict[str, Any]:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"malformed JSON in {source}: {e.msg}", line=e.lineno, column=e.colno)
        if not isinstance(data, dict):
            raise ConfigError(f"{source} must hold a JSON object")
        return data

    def build(self, data: Dict[str, Any], overrides: Sequence[str] = ()) -> RunConfig:
        """Apply overrides, validate and freeze the hash"""
        data = apply_overrides(data, overrides)
        self.validate(data)
        run = RunConfig.from_dict(data)
        logger.info(f"run config {run.config_hash[:12]}: model={run.model_type}, "
                    f"theorems={run.theorems}, seed={run.seed}")
        return run

    def load(self, path: str, overrides: Sequence[str] = ()) -> RunConfig:
        """
        Load a run configuration file

        Args:
            path: JSON file
            overrides: 'key.path=value' strings applied before validation

        Returns:
            Validated RunConfig
        """
        try:
            text = Path(path).read_text(encoding='utf-8')
        except OSError as e:
            raise ConfigError(f"cannot read config {path}: {e}")
        return self.build(self.parse(text, str(path)), overrides)
