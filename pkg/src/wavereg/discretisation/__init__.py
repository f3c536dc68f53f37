"""Time, space and quadrature building blocks."""

from wavereg.discretisation.quadrature import WeightedRule, gauss_rule, shifted_weighted_integral
from wavereg.discretisation.spatial import (
    SpaceMesh,
    assemble_mass,
    assemble_stiffness,
    build_space_mesh,
    eval_fe_function,
)
from wavereg.discretisation.temporal import (
    SplineBasis,
    TimeGrid,
    modified_basis_coefficients,
    spline_basis,
    truncated_power_phi,
)

__all__ = [
    "SpaceMesh",
    "SplineBasis",
    "TimeGrid",
    "WeightedRule",
    "assemble_mass",
    "assemble_stiffness",
    "build_space_mesh",
    "eval_fe_function",
    "gauss_rule",
    "modified_basis_coefficients",
    "shifted_weighted_integral",
    "spline_basis",
    "truncated_power_phi",
]
