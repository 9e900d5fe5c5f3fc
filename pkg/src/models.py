"""
Data models and schemas for ChainBound
"""
import math
from dataclasses import dataclass, asdict, field
from enum import Enum
from typing import Optional, Dict, Any, List, Tuple, Union

from .errors import CertificateInvalidError, InputValidationError


@dataclass(frozen=True)
class LogValue:
    """Signed real stored as (sign, log|x|) in nats"""
    sign: int
    log_abs: float = -math.inf

    def __post_init__(self):
        if self.sign not in (-1, 0, 1):
            raise InputValidationError(f"sign must be -1, 0 or 1, got {self.sign}")
        if self.sign == 0 and self.log_abs != -math.inf:
            object.__setattr__(self, 'log_abs', -math.inf)

    @classmethod
    def zero(cls) -> 'LogValue':
        return cls(0)

    @classmethod
    def from_float(cls, value: float) -> 'LogValue':
        if value == 0:
            return cls(0)
        return cls(1 if value > 0 else -1, math.log(abs(value)))

    @classmethod
    def from_int(cls, value: int) -> 'LogValue':
        """Exact integers of any size (math.log accepts big ints)"""
        if value == 0:
            return cls(0)
        return cls(1 if value > 0 else -1, math.log(abs(value)))

    @classmethod
    def from_log(cls, log_abs: float) -> 'LogValue':
        if log_abs == -math.inf:
            return cls(0)
        return cls(1, log_abs)

    def to_float(self) -> float:
        if self.sign == 0:
            return 0.0
        if self.log_abs > 709.78:
            return self.sign * math.inf
        return self.sign * math.exp(self.log_abs)

    def __neg__(self) -> 'LogValue':
        return LogValue(-self.sign, self.log_abs)

    def __add__(self, other: 'LogValue') -> 'LogValue':
        other = _as_log_value(other)
        if self.sign == 0:
            return other
        if other.sign == 0:
            return self
        hi, lo = (self, other) if self.log_abs >= other.log_abs else (other, self)
        diff = lo.log_abs - hi.log_abs
        if hi.sign == lo.sign:
            return LogValue(hi.sign, hi.log_abs + math.log1p(math.exp(diff)))
        if diff == 0:
            return LogValue(0)
        return LogValue(hi.sign, hi.log_abs + math.log1p(-math.exp(diff)))

    def __sub__(self, other: 'LogValue') -> 'LogValue':
        return self + (-_as_log_value(other))

    def __mul__(self, other: 'LogValue') -> 'LogValue':
        other = _as_log_value(other)
        if self.sign == 0 or other.sign == 0:
            return LogValue(0)
        return LogValue(self.sign * other.sign, self.log_abs + other.log_abs)

    def __truediv__(self, other: 'LogValue') -> 'LogValue':
        other = _as_log_value(other)
        if other.sign == 0:
            raise ZeroDivisionError("division by a zero LogValue")
        if self.sign == 0:
            return LogValue(0)
        return LogValue(self.sign * other.sign, self.log_abs - other.log_abs)

    def __pow__(self, exponent: float) -> 'LogValue':
        if exponent == 0:
            return LogValue(1, 0.0)
        if self.sign == 0:
            return LogValue(0)
        if self.sign < 0:
            if not float(exponent).is_integer():
                raise InputValidationError("non-integer power of a negative LogValue")
            sign = -1 if int(exponent) % 2 else 1
            return LogValue(sign, self.log_abs * exponent)
        return LogValue(1, self.log_abs * exponent)

    def _order_key(self) -> Tuple[int, float]:
        if self.sign == 0:
            return (0, 0.0)
        return (self.sign, self.sign * self.log_abs)

    def __lt__(self, other: 'LogValue') -> bool:
        return self._order_key() < _as_log_value(other)._order_key()

    def __le__(self, other: 'LogValue') -> bool:
        return self._order_key() <= _as_log_value(other)._order_key()

    def __gt__(self, other: 'LogValue') -> bool:
        return self._order_key() > _as_log_value(other)._order_key()

    def __ge__(self, other: 'LogValue') -> bool:
        return self._order_key() >= _as_log_value(other)._order_key()

    def to_dict(self) -> Dict[str, Any]:
        return {'sign': self.sign, 'log_abs': self.log_abs}


def _as_log_value(value: Union['LogValue', float, int]) -> LogValue:
    if isinstance(value, LogValue):
        return value
    if isinstance(value, int):
        return LogValue.from_int(value)
    return LogValue.from_float(float(value))


def log_sum(values: List[LogValue]) -> LogValue:
    """Sum of LogValues; empty sums are zero"""
    total = LogValue.zero()
    for value in values:
        total = total + value
    return total


@dataclass(frozen=True)
class Composition:
    """One element of the composition set: u parts, each >= 2, summing to 2q"""
    parts: Tuple[int, ...]
    u: int
    q: int

    def __post_init__(self):
        if any(k < 2 for k in self.parts):
            raise InputValidationError(f"composition parts must be >= 2: {self.parts}")
        if len(self.parts) != self.u:
            raise InputValidationError(f"composition {self.parts} must have {self.u} parts")
        if sum(self.parts) != 2 * self.q:
            raise InputValidationError(f"composition {self.parts} must sum to {2 * self.q}")

    @property
    def total(self) -> int:
        return sum(self.parts)

    def __len__(self) -> int:
        return len(self.parts)


class VarianceProvenance(str, Enum):
    """Where the Var(S_n) input of a bound comes from"""
    EXACT = "exact"
    EMPIRICAL_UPPER = "empirical-upper"
    ANALYTIC_UPPER = "analytic-upper"


class NormKind(str, Enum):
    """Which weighted norm of the centered observable a bound expects"""
    V_POWER = "V^1/(2q)"
    W_GAMMA = "W^gamma"
    WASS_V = "N_1/(4q),V"
    WASS_W_GAMMA = "N_1,W^gamma"


@dataclass
class DriftCertificate:
    """Drift/minorization parameters (lambda, b, d, m, eps) and optional pi(V)"""
    lam: float
    b: float
    d: float
    m: int
    eps: float
    pi_V: Optional[float] = None

    def validate(self) -> 'DriftCertificate':
        """Raise CertificateInvalidError naming the first violated inequality"""
        if not 0 < self.lam < 1:
            raise CertificateInvalidError("0 < lambda < 1", f"lambda={self.lam}")
        if self.b < 0:
            raise CertificateInvalidError("b >= 0", f"b={self.b}")
        if self.d <= 0:
            raise CertificateInvalidError("d > 0", f"d={self.d}")
        if int(self.m) != self.m or self.m < 1:
            raise CertificateInvalidError("m >= 1 integer", f"m={self.m}")
        if not 0 < self.eps < 1:
            raise CertificateInvalidError("0 < eps < 1", f"eps={self.eps}")
        side = self.lam + 2 * self.b / (1 + self.d)
        if not side < 1:
            raise CertificateInvalidError("lambda + 2b/(1+d) < 1", f"value={side}")
        if self.pi_V is not None:
            if self.pi_V < math.e:
                raise CertificateInvalidError("pi(V) >= e", f"pi_V={self.pi_V}")
            if self.b >= math.e * (1 - self.lam):
                limit = self.b / (1 - self.lam)
                if self.pi_V > limit * (1 + 1e-12):
                    raise CertificateInvalidError("pi(V) <= b/(1-lambda)", f"pi_V={self.pi_V} > {limit}")
        return self

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data['lambda'] = data.pop('lam')
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]):
        data = dict(data)
        if 'lambda' in data:
            data['lam'] = data.pop('lambda')
        data['m'] = int(data['m'])
        known = {k: v for k, v in data.items() if k in ('lam', 'b', 'd', 'm', 'eps', 'pi_V')}
        return cls(**known)


@dataclass
class WassCertificate(DriftCertificate):
    """Drift certificate extended with the one-step coupling expansion constant"""
    kappa_K: float = 1.0

    def validate(self) -> 'WassCertificate':
        super().validate()
        if self.kappa_K < 1:
            raise CertificateInvalidError("kappa_K >= 1", f"kappa_K={self.kappa_K}")
        return self

    @classmethod
    def from_dict(cls, data: Dict[str, Any]):
        base = DriftCertificate.from_dict(data)
        return cls(**asdict(base), kappa_K=float(data.get('kappa_K', 1.0)))


@dataclass
class GeomRate:
    """V-geometric mixing rate (rho, c) with intermediates"""
    rho: float
    log_rho: float
    c: float
    lambda_bar_m: float
    b_m: float
    b_bar_m: float
    m: int = 1

    @property
    def log_inv_rho(self) -> float:
        return -self.log_rho

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class WassRate:
    """Wasserstein contraction constants"""
    delta_star: float
    residual: float
    varrho: float
    log_varrho: float
    c_K: float
    zeta: float
    C1: float
    lambda_bar_m: float
    b_m: float
    d_bar: float
    kappa_K: float = 1.0
    m: int = 1
    degenerate: bool = False

    @property
    def log_inv_varrho(self) -> float:
        return -self.log_varrho

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class BoundInputs:
    """Everything a theorem-level bound needs"""
    q: int
    n: int
    norm_g: float
    norm_kind: NormKind
    rate: Union[GeomRate, WassRate]
    gamma: float = 0.0
    var_Sn: Optional[float] = None
    var_provenance: Optional[VarianceProvenance] = None
    pi_V: Optional[float] = None
    xi_V: Optional[float] = None
    xi_sqrtV: Optional[float] = None
    pi_sqrtV: Optional[float] = None
    f_min: Optional[float] = None
    pi_V_source: str = "exact"

    def __post_init__(self):
        if self.q < 1:
            raise InputValidationError(f"q must be >= 1, got {self.q}")
        if self.n < 1:
            raise InputValidationError(f"n must be >= 1, got {self.n}")
        if self.gamma < 0:
            raise InputValidationError(f"gamma must be >= 0, got {self.gamma}")
        if self.norm_g < 0:
            raise InputValidationError(f"norm_g must be >= 0, got {self.norm_g}")
        self.norm_kind = NormKind(self.norm_kind)
        if self.var_Sn is not None:
            if self.var_Sn < 0:
                raise InputValidationError(f"var_Sn must be >= 0, got {self.var_Sn}")
            if self.var_provenance is None:
                raise InputValidationError("var_Sn supplied without a provenance tag")
            self.var_provenance = VarianceProvenance(self.var_provenance)

    def echo(self) -> Dict[str, Any]:
        """Flat echo of the inputs for reports"""
        return {
            'q': self.q,
            'n': self.n,
            'gamma': self.gamma,
            'norm_g': self.norm_g,
            'norm_kind': self.norm_kind.value,
            'var_Sn': self.var_Sn,
            'var_provenance': self.var_provenance.value if self.var_provenance else None,
            'pi_V': self.pi_V,
            'pi_V_source': self.pi_V_source,
            'xi_V': self.xi_V,
            'xi_sqrtV': self.xi_sqrtV,
            'pi_sqrtV': self.pi_sqrtV,
            'f_min': self.f_min,
            'rate': self.rate.to_dict(),
        }


TAIL_THEOREMS = {'T5', 'T10', 'T-nonstat-V', 'T11'}


@dataclass
class BoundReport:
    """Result of evaluating one theorem-level bound"""
    theorem_id: str
    inputs: Dict[str, Any]
    log_value: LogValue
    terms: Dict[str, LogValue] = field(default_factory=dict)
    t: Optional[float] = None
    flags: List[str] = field(default_factory=list)
    config_hash: Optional[str] = None

    @property
    def is_tail(self) -> bool:
        return self.theorem_id in TAIL_THEOREMS

    @property
    def raw(self) -> float:
        return self.log_value.to_float()

    @property
    def clamped(self) -> Optional[float]:
        if not self.is_tail:
            return None
        return min(1.0, self.raw)

    @property
    def value(self) -> float:
        """Clamped value for tails, raw value for moments"""
        return self.clamped if self.is_tail else self.raw

    def to_dict(self) -> Dict[str, Any]:
        return {
            'theorem_id': self.theorem_id,
            'inputs': self.inputs,
            't': self.t,
            'log_value': self.log_value.to_dict(),
            'raw': self.raw,
            'clamped': self.clamped,
            'terms': {k: v.to_dict() for k, v in self.terms.items()},
            'flags': list(self.flags),
            'config_hash': self.config_hash,
        }

    def to_row(self) -> Dict[str, Any]:
        """Bound-side columns of the report table"""
        return {
            'config_hash': self.config_hash,
            'theorem_id': self.theorem_id,
            'n': self.inputs.get('n'),
            'q': self.inputs.get('q'),
            'gamma': self.inputs.get('gamma'),
            't': self.t,
            'bound_log': self.log_value.log_abs,
            'bound_clamped': self.clamped,
        }


@dataclass
class McEstimate:
    """Monte Carlo point estimate with a confidence interval"""
    point: float
    ci_low: float
    ci_high: float
    level: float
    replicas: int
    seed: int
    method: str = "clopper-pearson"
    config_hash: Optional[str] = None

    def __post_init__(self):
        if not self.ci_low <= self.point <= self.ci_high:
            raise InputValidationError(
                f"interval [{self.ci_low}, {self.ci_high}] does not contain point {self.point}")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


VERDICT_STATUSES = ('dominates', 'violated', 'inconclusive')


@dataclass
class Verdict:
    """Bound-vs-truth comparison"""
    bound_value: float
    estimate: Union[McEstimate, float]
    status: str

    def __post_init__(self):
        if self.status not in VERDICT_STATUSES:
            raise InputValidationError(f"unknown verdict status {self.status}")

    @property
    def exact(self) -> bool:
        return not isinstance(self.estimate, McEstimate)

    def to_dict(self) -> Dict[str, Any]:
        estimate = self.estimate.to_dict() if isinstance(self.estimate, McEstimate) else self.estimate
        return {'bound_value': self.bound_value, 'estimate': estimate, 'status': self.status}
