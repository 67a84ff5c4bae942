"""Net-energy planning of whole-energy systems.

Linear programs minimizing annual energy invested under an emissions cap,
EROI accounting, cap sweeps and polynomial-chaos sensitivity analysis.
"""

from .accounting import AccountingReport, DegenerateSystem, account
from .dataset import load, load_bundle, save
from .lp import CustomLinear, EnergyInvested, LPProblem, assemble, read_lp, write_lp
from .model import (
    EndUseDemand,
    EnergySystemModel,
    Resource,
    ShareConstraint,
    StorageUnit,
    Technology,
    TimeMapping,
    ValidationError,
    validate,
)
from .scenarios import ScenarioResult, run_reference, run_scenario, run_sweep, sweep_targets
from .simplex import Solution, Status, solve

__version__ = "0.1.0"

__all__ = [
    "AccountingReport",
    "CustomLinear",
    "DegenerateSystem",
    "EndUseDemand",
    "EnergyInvested",
    "EnergySystemModel",
    "LPProblem",
    "Resource",
    "ScenarioResult",
    "ShareConstraint",
    "Solution",
    "Status",
    "StorageUnit",
    "Technology",
    "TimeMapping",
    "ValidationError",
    "account",
    "assemble",
    "load",
    "load_bundle",
    "read_lp",
    "run_reference",
    "run_scenario",
    "run_sweep",
    "save",
    "solve",
    "sweep_targets",
    "validate",
    "write_lp",
]
