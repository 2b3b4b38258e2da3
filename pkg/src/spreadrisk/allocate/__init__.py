"""Convex resource allocation over log-transformed rates."""

from .problem import (AllocationProblem, Budgets, ConvexProgram, Variant, apply_vaccination_coupling,
                      assemble_problem, zero_impact_nodes)
from .solve import AllocationResult, build_result, solve_allocation, verify_result
from .transform import (NaturalValues, ResourceBounds, TransformedVariables, lse_residuals,
                        resource_bounds, transform_variables)

__all__ = [
    "AllocationProblem", "AllocationResult", "Budgets", "ConvexProgram", "NaturalValues",
    "ResourceBounds", "TransformedVariables", "Variant", "apply_vaccination_coupling",
    "assemble_problem", "build_result", "lse_residuals", "resource_bounds", "solve_allocation",
    "transform_variables", "verify_result", "zero_impact_nodes",
]
