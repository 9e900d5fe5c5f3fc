"""
Theorem-level moment and tail bounds for ChainBound
"""
from typing import Optional

from ..errors import InputValidationError
from ..models import BoundInputs, BoundReport
from .vgeom_bounds import (
    rosenthal_v,
    rosenthal_v_shift,
    rosenthal_logv,
    rosenthal_logv_shift,
    bernstein_constant_v,
    bernstein_tail,
    bernstein_tail_v,
    deviation_radius,
    nonstationary_tail_v,
    d1_constant,
    homogeneous_scaling,
    scaling_spread,
    c0,
)
from .wasserstein_bounds import (
    rosenthal_w_family,
    bernstein_constant_w,
    bernstein_tail_w,
    nonstationary_tail_w,
    deviation_radius_w,
    d2_constant,
)

# Moment evaluators take inputs; tail evaluators take (t, inputs)
MOMENT_EVALUATORS = {
    'T1': rosenthal_v,
    'T2': rosenthal_v_shift,
    'T3': rosenthal_logv,
    'T4': rosenthal_logv_shift,
    'T6': lambda inputs: rosenthal_w_family('T6', inputs),
    'T7': lambda inputs: rosenthal_w_family('T7', inputs),
    'T8': lambda inputs: rosenthal_w_family('T8', inputs),
    'T9': lambda inputs: rosenthal_w_family('T9', inputs),
}

TAIL_EVALUATORS = {
    'T5': bernstein_tail_v,
    'T-nonstat-V': nonstationary_tail_v,
    'T10': bernstein_tail_w,
    'T11': nonstationary_tail_w,
}

THEOREM_EVALUATORS = {**MOMENT_EVALUATORS, **TAIL_EVALUATORS}

WASSERSTEIN_THEOREMS = {'T6', 'T7', 'T8', 'T9', 'T10', 'T11'}


def evaluate(theorem_id: str, inputs: BoundInputs, t: Optional[float] = None) -> BoundReport:
    """Dispatch a theorem id to its evaluator"""
    if theorem_id in MOMENT_EVALUATORS:
        return MOMENT_EVALUATORS[theorem_id](inputs)
    if theorem_id in TAIL_EVALUATORS:
        if t is None:
            raise InputValidationError(f"{theorem_id} is a tail bound and needs t")
        return TAIL_EVALUATORS[theorem_id](t, inputs)
    raise InputValidationError(f"unknown theorem id {theorem_id}")


__all__ = [
    'rosenthal_v',
    'rosenthal_v_shift',
    'rosenthal_logv',
    'rosenthal_logv_shift',
    'bernstein_constant_v',
    'bernstein_tail',
    'bernstein_tail_v',
    'deviation_radius',
    'nonstationary_tail_v',
    'd1_constant',
    'c0',
    'homogeneous_scaling',
    'scaling_spread',
    'rosenthal_w_family',
    'bernstein_constant_w',
    'bernstein_tail_w',
    'nonstationary_tail_w',
    'deviation_radius_w',
    'd2_constant',
    'evaluate',
    'MOMENT_EVALUATORS',
    'TAIL_EVALUATORS',
    'THEOREM_EVALUATORS',
    'WASSERSTEIN_THEOREMS',
]
