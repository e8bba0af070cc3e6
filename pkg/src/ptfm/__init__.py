"""Dense LP solver built on greedy parabolic target-following methods."""

from .errors import (
    DimensionError,
    FactorizationError,
    InfeasiblePointError,
    LpError,
    NonFiniteError,
    OutsideDomainError,
    StallError,
)
from .lp_core import LpInstance, PrimalDualPoint, check_feasibility, duality_gap, load_instance, save_instance
from .methods import MethodConfig, SolveReport, run

__all__ = [
    "DimensionError",
    "FactorizationError",
    "InfeasiblePointError",
    "LpError",
    "LpInstance",
    "MethodConfig",
    "NonFiniteError",
    "OutsideDomainError",
    "PrimalDualPoint",
    "SolveReport",
    "StallError",
    "check_feasibility",
    "duality_gap",
    "load_instance",
    "run",
    "save_instance",
]
