"""
Certification service: model spec -> certificates -> rates -> BoundInputs
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from ..bounds import WASSERSTEIN_THEOREMS
from ..chains import (
    CHAIN_MODELS,
    BaseChain,
    FiniteChain,
    PcnChain,
    PcnModel,
    certify,
    certify_wasserstein,
    pcn_constants,
    sgd_constants,
)
from ..chains.base_chain import Observable
from ..constants import contraction_rate, geometric_rate, resolve_pi_V, variance_upper
from ..cumulants import exact_variance
from ..errors import CertificationFailure, ChainboundError, InputValidationError
from ..harness import batch_means_variance
from ..models import (
    BoundInputs,
    DriftCertificate,
    GeomRate,
    NormKind,
    VarianceProvenance,
    WassCertificate,
    WassRate,
)
from ..run_config import RunConfig

logger = logging.getLogger(__name__)

PI_V_FALLBACK_FLAG = "pi_V-fallback"

THEOREM_NORMS = {
    'T1': NormKind.V_POWER,
    'T2': NormKind.V_POWER,
    'T3': NormKind.W_GAMMA,
    'T4': NormKind.W_GAMMA,
    'T5': NormKind.W_GAMMA,
    'T-nonstat-V': NormKind.W_GAMMA,
    'T6': NormKind.WASS_V,
    'T7': NormKind.WASS_V,
    'T8': NormKind.WASS_W_GAMMA,
    'T9': NormKind.WASS_W_GAMMA,
    'T10': NormKind.WASS_W_GAMMA,
    'T11': NormKind.WASS_W_GAMMA,
}

# Theorems whose chain starts from the configured initial law rather than pi
NONSTATIONARY_THEOREMS = {'T2', 'T4', 'T7', 'T9', 'T-nonstat-V', 'T11'}

# Model-spec keys that are not parameters of the model dataclass
_SPEC_ONLY_KEYS = ('type', 'observable', 'init', 'mc_budget', 'init_state', 'target_lambda', 'm')


@dataclass
class CertifiedModel:
    """A model with its certificates, rates and default observable"""
    model_id: str
    chain: Optional[BaseChain]
    drift: Optional[DriftCertificate]
    coupling: Optional[WassCertificate]
    geom: Optional[GeomRate]
    wass: Optional[WassRate]
    pi_V: float
    pi_V_source: str
    observable: Optional[Observable] = None
    observable_norm: Optional[float] = None
    observable_gamma: float = 0.0
    init: Any = None
    details: Dict[str, Any] = field(default_factory=dict)
    flags: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'model_id': self.model_id,
            'drift': self.drift.to_dict() if self.drift else None,
            'coupling': self.coupling.to_dict() if self.coupling else None,
            'geometric_rate': self.geom.to_dict() if self.geom else None,
            'wasserstein_rate': self.wass.to_dict() if self.wass else None,
            'pi_V': self.pi_V,
            'pi_V_source': self.pi_V_source,
            'details': self.details,
            'flags': list(self.flags),
        }


def _apply_certificate_overrides(cert, overrides: Dict[str, Any], cls):
    if cert is None or not overrides:
        return cert
    merged = {**cert.to_dict(), **overrides}
    return cls.from_dict(merged).validate()


class CertificationService:
    """Builds and certifies the chain described by a RunConfig"""

    def __init__(self, run: RunConfig):
        self.run = run
        self.logger = logging.getLogger(f"{__name__}.{run.model_type}")
        self._variances: Dict[Tuple[int, int], Tuple[float, VarianceProvenance]] = {}

    def _model_params(self) -> Dict[str, Any]:
        return {k: v for k, v in self.run.model.items() if k not in _SPEC_ONLY_KEYS}

    def build_chain(self) -> Optional[BaseChain]:
        """Instantiate the chain model; raw certificates have no chain"""
        spec = self.run.model
        kind = spec['type']
        if kind == 'finite':
            return FiniteChain(np.asarray(spec['Q'], dtype=float),
                               None if spec.get('V') is None else np.asarray(spec['V'], dtype=float),
                               None if spec.get('g') is None else np.asarray(spec['g'], dtype=float))
        if kind == 'certificate':
            return None
        if kind in CHAIN_MODELS:
            # pCN eps_H is fixed by pcn_constants; certify() rebuilds that chain with it
            model_cls, chain_cls = CHAIN_MODELS[kind]
            return chain_cls(model_cls.from_dict(self._model_params()))
        raise InputValidationError(f"unknown model type {kind}")

    def certify(self) -> CertifiedModel:
        """
        Certificates and rates for the configured model

        Certificate overrides from the run config replace individual fields and are
        re-validated; a rate that cannot be computed is left as None with a warning.
        """
        kind = self.run.model_type
        if kind == 'finite':
            certified = self._certify_finite()
        elif kind == 'sgd':
            certified = self._certify_sgd()
        elif kind == 'pcn':
            certified = self._certify_pcn()
        else:
            certified = self._certify_raw()

        overrides = dict(self.run.certificate or {})
        if overrides:
            drift_overrides = {k: v for k, v in overrides.items() if k != 'kappa_K'}
            certified.drift = _apply_certificate_overrides(certified.drift, drift_overrides, DriftCertificate)
            certified.coupling = _apply_certificate_overrides(certified.coupling, overrides, WassCertificate)
            certified.flags.append('certificate-override')
            certified.pi_V, certified.pi_V_source = self._resolve_pi_V(certified.drift or certified.coupling,
                                                                      certified.flags)
        self._rates(certified)
        return certified

    def _resolve_pi_V(self, cert: DriftCertificate, flags: List[str]) -> Tuple[float, str]:
        value, source = resolve_pi_V(cert.pi_V, cert.lam, cert.b)
        if source != 'exact' and PI_V_FALLBACK_FLAG not in flags:
            flags.append(PI_V_FALLBACK_FLAG)
        return value, source

    def _rates(self, certified: CertifiedModel):
        certified.geom = None
        certified.wass = None
        if certified.drift is not None:
            try:
                certified.geom = geometric_rate(certified.drift)
            except ChainboundError as e:
                self.logger.warning(f"no geometric rate: {e}")
        if certified.coupling is not None:
            try:
                certified.wass = contraction_rate(certified.coupling, certified.pi_V)
            except ChainboundError as e:
                self.logger.warning(f"no contraction rate: {e}")
        if certified.geom is None and certified.wass is None:
            raise CertificationFailure("neither a geometric nor a Wasserstein rate could be computed",
                                       certified.to_dict())
        if certified.geom is not None:
            self.logger.info(f"rho={certified.geom.rho:.6g}, c={certified.geom.c:.6g}")
        if certified.wass is not None:
            self.logger.info(f"delta*={certified.wass.delta_star:.6g}, varrho={certified.wass.varrho:.6g}, "
                             f"c_K={certified.wass.c_K:.6g}, C1={certified.wass.C1:.6g}")

    def _certify_finite(self) -> CertifiedModel:
        spec = self.run.model
        chain = self.build_chain()
        drift = certify(chain, m=spec.get('m'), target_lambda=spec.get('target_lambda'))
        try:
            coupling = certify_wasserstein(chain, m=spec.get('m'), target_lambda=spec.get('target_lambda'))
        except CertificationFailure as e:
            self.logger.warning(f"no coupling certificate: {e}")
            coupling = None
        return CertifiedModel(model_id=chain.model_id, chain=chain, drift=drift, coupling=coupling,
                              geom=None, wass=None, pi_V=chain.pi_V, pi_V_source='exact',
                              observable=chain.observable(), init=spec.get('init_state'),
                              details={'chain': chain.to_dict()})

    def _certify_sgd(self) -> CertifiedModel:
        spec = self.run.model
        chain = self.build_chain()
        consts = sgd_constants(chain.model)
        g, norm, gamma, _ = chain.observable(spec.get('observable', 'tanh'))
        flags = list(consts.flags)
        pi_V, source = self._resolve_pi_V(consts.drift, flags)
        return CertifiedModel(model_id=chain.model_id, chain=chain, drift=consts.drift,
                              coupling=consts.coupling, geom=None, wass=None, pi_V=pi_V,
                              pi_V_source=source, observable=g, observable_norm=norm,
                              observable_gamma=gamma, init=spec.get('init'),
                              details={'model': chain.model.to_dict(), 'constants': consts.to_dict()},
                              flags=flags)

    def _certify_pcn(self) -> CertifiedModel:
        spec = self.run.model
        model = PcnModel.from_dict(self._model_params())
        consts = pcn_constants(model, mc_budget=spec.get('mc_budget'), seed=self.run.seed,
                               level=self.run.ci_level)
        chain = PcnChain(model, eps_H=consts.eps_H)
        g, norm, gamma, _ = chain.observable(spec.get('observable', 'tanh'))
        flags = list(consts.flags)
        pi_V, source = self._resolve_pi_V(consts.drift, flags)
        return CertifiedModel(model_id=chain.model_id, chain=chain, drift=consts.drift,
                              coupling=consts.coupling, geom=None, wass=None, pi_V=pi_V,
                              pi_V_source=source, observable=g, observable_norm=norm,
                              observable_gamma=gamma, init=spec.get('init'),
                              details={'model': model.to_dict(), 'constants': consts.to_dict()},
                              flags=flags)

    def _certify_raw(self) -> CertifiedModel:
        spec = self.run.model
        drift = DriftCertificate.from_dict(spec)
        coupling = WassCertificate.from_dict(spec)
        for cert in (drift, coupling):
            cert.validate()
        flags = []
        pi_V, source = self._resolve_pi_V(drift, flags)
        return CertifiedModel(model_id='certificate', chain=None, drift=drift, coupling=coupling,
                              geom=None, wass=None, pi_V=pi_V, pi_V_source=source, flags=flags)

    # Bound inputs
    def norm(self, certified: CertifiedModel, theorem_id: str, q: int, gamma: float) -> float:
        """Norm of the centered observable in the class the theorem expects"""
        bound = self.run.bound or {}
        if 'norm_g' in bound:
            return float(bound['norm_g'])
        kind = THEOREM_NORMS[theorem_id]
        chain = certified.chain
        if isinstance(chain, FiniteChain):
            g_bar = chain.g_bar
            if kind == NormKind.V_POWER:
                return chain.v_norm(g_bar, 1.0 / (2 * q))
            if kind == NormKind.W_GAMMA:
                return chain.w_norm(g_bar, gamma)
            if kind == NormKind.WASS_V:
                return chain.wass_norm(g_bar, 1.0 / (4 * q), 'V')
            return chain.wass_norm(g_bar, 1.0, 'W', gamma)
        if chain is None:
            raise InputValidationError(f"{theorem_id}: a raw certificate needs bound.norm_g")
        if kind != NormKind.WASS_W_GAMMA:
            raise InputValidationError(
                f"{theorem_id}: {certified.model_id} observables carry an N_1,W^gamma norm only")
        if gamma < certified.observable_gamma:
            raise InputValidationError(
                f"{theorem_id}: observable norm holds for gamma >= {certified.observable_gamma}, got {gamma}")
        return certified.observable_norm

    def variance(self, certified: CertifiedModel, n: int,
                 seed: Optional[int] = None) -> Tuple[float, VarianceProvenance]:
        """Var_pi(S_n) or an upper bound on it, with its provenance"""
        bound = self.run.bound or {}
        if 'var_Sn' in bound:
            return float(bound['var_Sn']), VarianceProvenance(bound.get('var_provenance', 'analytic-upper'))
        chain = certified.chain
        source = (self.run.variance or {}).get('source', 'exact')
        if isinstance(chain, FiniteChain):
            if source == 'analytic-upper' and certified.geom is not None:
                return (variance_upper(n, certified.geom, certified.pi_V, chain.v_norm(chain.g_bar, 0.5)),
                        VarianceProvenance.ANALYTIC_UPPER)
            return exact_variance(chain, chain.g, n), VarianceProvenance.EXACT
        if chain is None:
            raise InputValidationError("a raw certificate needs bound.var_Sn and bound.var_provenance")
        if source == 'analytic-upper':
            if certified.geom is None:
                raise InputValidationError("analytic variance bound needs a geometric rate")
            # |g_bar| <= 1 and V >= e give ||g_bar||_{V^1/2} <= e^{-1/2} for tanh observables
            if certified.observable_norm != 2.0:
                raise InputValidationError("analytic variance bound is available for bounded observables only")
            return (variance_upper(n, certified.geom, certified.pi_V, math.exp(-0.5)),
                    VarianceProvenance.ANALYTIC_UPPER)
        seed = self.run.seed if seed is None else seed
        if (n, seed) not in self._variances:
            batches = int((self.run.variance or {}).get('batches', 200))
            _, upper = batch_means_variance(chain, certified.observable, n, batches, seed,
                                            level=self.run.ci_level, init=None, workers=self.run.workers)
            self._variances[(n, seed)] = (upper, VarianceProvenance.EMPIRICAL_UPPER)
        return self._variances[(n, seed)]

    def start_moments(self, certified: CertifiedModel) -> Dict[str, Optional[float]]:
        """xi(V), xi(V^1/2) and pi(V^1/2) (or bounds) for the configured initial law"""
        bound = self.run.bound or {}
        chain = certified.chain
        pi_sqrtV = bound.get('pi_sqrtV')
        xi_V = bound.get('xi_V')
        xi_sqrtV = bound.get('xi_sqrtV')
        if isinstance(chain, FiniteChain):
            pi_sqrtV = chain.pi_sqrtV if pi_sqrtV is None else pi_sqrtV
            if certified.init is None:
                xi_V = certified.pi_V if xi_V is None else xi_V
                xi_sqrtV = pi_sqrtV if xi_sqrtV is None else xi_sqrtV
            else:
                x = int(certified.init)
                xi_V = float(chain.V[x]) if xi_V is None else xi_V
                xi_sqrtV = math.sqrt(chain.V[x]) if xi_sqrtV is None else xi_sqrtV
        elif chain is not None:
            # Jensen: pi(V^1/2) <= pi(V)^1/2
            pi_sqrtV = math.sqrt(certified.pi_V) if pi_sqrtV is None else pi_sqrtV
            if certified.init is None:
                xi_V = certified.pi_V if xi_V is None else xi_V
                xi_sqrtV = pi_sqrtV if xi_sqrtV is None else xi_sqrtV
            else:
                V_x = float(chain.lyapunov(np.asarray(certified.init, dtype=float)[None, :])[0])
                xi_V = V_x if xi_V is None else xi_V
                xi_sqrtV = math.sqrt(V_x) if xi_sqrtV is None else xi_sqrtV
        return {'xi_V': xi_V, 'xi_sqrtV': xi_sqrtV, 'pi_sqrtV': pi_sqrtV}

    def bound_inputs(self, certified: CertifiedModel, theorem_id: str, q: int, n: int,
                     gamma: float = 0.0, seed: Optional[int] = None) -> BoundInputs:
        """Assemble BoundInputs for one theorem and one (q, n, gamma) cell"""
        if theorem_id not in THEOREM_NORMS:
            raise InputValidationError(f"unknown theorem id {theorem_id}")
        kind = THEOREM_NORMS[theorem_id]
        wasserstein = theorem_id in WASSERSTEIN_THEOREMS
        rate = certified.wass if wasserstein else certified.geom
        if rate is None:
            raise CertificationFailure(f"{theorem_id} needs a {'Wasserstein' if wasserstein else 'geometric'} "
                                       f"rate, which {certified.model_id} does not have")
        norm_g = self.norm(certified, theorem_id, q, gamma)
        var_Sn, provenance = self.variance(certified, n, seed)
        start = self.start_moments(certified)
        f_min = (self.run.bound or {}).get('f_min')
        return BoundInputs(q=q, n=n, norm_g=norm_g, norm_kind=kind, rate=rate, gamma=gamma,
                           var_Sn=var_Sn, var_provenance=provenance, pi_V=certified.pi_V,
                           xi_V=start['xi_V'], xi_sqrtV=start['xi_sqrtV'], pi_sqrtV=start['pi_sqrtV'],
                           f_min=f_min, pi_V_source=certified.pi_V_source)
