"""Movable-antenna IRS downlink simulator and product-manifold optimizer."""

from .channel import FieldResponseInfo, Scenario
from .manifold import OptimizationPoint, TangentDirection
from .objective import ConstraintSet, PenaltyState
from .scenarios import ScenarioParams, generate_scenario, perturb_fri
from .schemes import SchemeSpec, run_scheme, scheme
from .solver import FactorMask, MemoryEntry, SolverConfig, rep_outer_solve
from .sweep import SweepConfig, run_single, run_sweep

__version__ = "0.1.0"

__all__ = [
    "ConstraintSet", "FactorMask", "FieldResponseInfo", "MemoryEntry",
    "OptimizationPoint", "PenaltyState", "Scenario", "ScenarioParams",
    "SchemeSpec", "SolverConfig", "SweepConfig", "TangentDirection",
    "generate_scenario", "perturb_fri", "rep_outer_solve", "run_scheme",
    "run_single", "run_sweep", "scheme", "__version__",
]
