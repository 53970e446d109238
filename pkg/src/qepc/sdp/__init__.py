"""Semidefinite programming: a dense interior-point solver and the programs built on it."""

from .programs import (
    FeasibilityResult,
    OperatorBasis,
    feasibility,
    feasibility_batch,
    gell_mann_basis,
    max_fidelity,
    max_fidelity_batch,
    max_fidelity_pure,
)
from .solver import SdpOptions, SdpProblem, SdpSolution, SdpStatus, solve_sdp, solve_sdp_batch

__all__ = [
    "FeasibilityResult", "OperatorBasis", "SdpOptions", "SdpProblem", "SdpSolution", "SdpStatus",
    "feasibility", "feasibility_batch", "gell_mann_basis", "max_fidelity", "max_fidelity_batch",
    "max_fidelity_pure", "solve_sdp", "solve_sdp_batch",
]
