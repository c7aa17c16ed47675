"""Two-level map equation for undirected weighted graphs."""

from .brute import MAX_BRUTE_NODES, brute_force_optimum
from .core import (
    CodelengthBreakdown,
    FlowDistribution,
    ModuleState,
    Partition,
    UndefinedFlowError,
    canonical_labels,
    codelength,
    delta_codelength,
    make_partition,
    visit_rates,
)
from .optimize import OptimizeConfig, OptimizeResult, optimize

__all__ = [
    "MAX_BRUTE_NODES",
    "CodelengthBreakdown",
    "FlowDistribution",
    "ModuleState",
    "OptimizeConfig",
    "OptimizeResult",
    "Partition",
    "UndefinedFlowError",
    "brute_force_optimum",
    "canonical_labels",
    "codelength",
    "delta_codelength",
    "make_partition",
    "optimize",
    "visit_rates",
]
