"""Risk-based surveillance and resource allocation for spreading processes on networks."""

from __future__ import annotations

__version__ = "0.1.0"

from .costgo import CostToGo, check_feasibility, compute_cost_to_go, spectral_abscissa  # noqa: E402
from .errors import (  # noqa: E402
    InfeasibleDiscountError, InfeasibleProblemError, InputError, SolverError, SpreadRiskError,
)
from .model import SpreadingNetwork, build_system_matrix, load_network, make_network  # noqa: E402
from .surveillance import SurveillanceConfig, max_revisit_intervals, risk_map  # noqa: E402

__all__ = [
    "CostToGo", "InfeasibleDiscountError", "InfeasibleProblemError", "InputError", "SolverError",
    "SpreadRiskError", "SpreadingNetwork", "SurveillanceConfig", "__version__", "build_system_matrix",
    "check_feasibility", "compute_cost_to_go", "load_network", "make_network", "max_revisit_intervals",
    "risk_map", "spectral_abscissa",
]
