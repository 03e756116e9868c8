"""Quantum Fisher information and optimal definite-photon-number states for
two-mode interferometry with photon loss.
"""

from .errors import ContractError, NumericError
from .fisher import QfiResult, qfi_bound, qfi_bound_gradient, qfi_exact, qfi_one_arm, qfi_pure
from .optimizer import OptimizationReport, optimize, optimize_two_component
from .scaling import (
    PrecisionCurve,
    ScalingCurve,
    differential_scaling,
    precision_curve,
    transmissivity_curve,
)
from .states import (
    BranchDecomposition,
    InputState,
    LossModel,
    branch_coefficient,
    decompose,
    preset_state,
)
from .strategies import (
    ChoppingResult,
    StrategySpec,
    chopping,
    chopping_numeric,
    heisenberg_limit,
    noon_precision,
    sil,
)

__version__ = "0.1.0"

__all__ = [
    "BranchDecomposition",
    "ChoppingResult",
    "ContractError",
    "InputState",
    "LossModel",
    "NumericError",
    "OptimizationReport",
    "PrecisionCurve",
    "QfiResult",
    "ScalingCurve",
    "StrategySpec",
    "branch_coefficient",
    "chopping",
    "chopping_numeric",
    "decompose",
    "differential_scaling",
    "heisenberg_limit",
    "noon_precision",
    "optimize",
    "optimize_two_component",
    "precision_curve",
    "preset_state",
    "qfi_bound",
    "qfi_bound_gradient",
    "qfi_exact",
    "qfi_one_arm",
    "qfi_pure",
    "sil",
    "transmissivity_curve",
]
