"""Secrecy outage of a wireless-powered UAV swarm relay with friendly jamming."""

from .analytic import SopQuery, SopResult, evaluate, sop_lower_bound_random_e
from .geometry import EavesdropperDisc, NodePosition, PathLossModel
from .montecarlo import McEstimate, McPlan, estimate_sop, estimate_sop_random_e
from .protocol import Scenario, Scheme, SystemConfig
from .specfun import NumericalError

__all__ = [
    "EavesdropperDisc", "McEstimate", "McPlan", "NodePosition", "NumericalError", "PathLossModel",
    "Scenario", "Scheme", "SopQuery", "SopResult", "SystemConfig", "estimate_sop", "estimate_sop_random_e",
    "evaluate", "sop_lower_bound_random_e",
]
__version__ = "0.1.0"
