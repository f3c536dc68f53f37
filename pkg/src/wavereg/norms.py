"""Error norms of discrete space-time solutions and observed orders."""

import math
from collections.abc import Iterable, Sequence
from typing import Optional

import numpy as np

from wavereg.assembly import SpaceTimeQuadrature, SpaceTimeSolution
from wavereg.discretisation.quadrature import DEFAULT_TIME_POINTS
from wavereg.errors import ArgumentError
from wavereg.models import ErrorReport, ExactSolution, NormTag

# Derivative orders (time, space) behind each ExactSolution attribute.
_COMPONENTS = {
    "value": (0, 0),
    "dt": (1, 0),
    "dtt": (2, 0),
    "dx": (0, 1),
}

_NEEDS = {
    NormTag.L2L2: ("value",),
    NormTag.H1L2: ("dt",),
    NormTag.H2L2: ("dtt",),
    NormTag.L2H1: ("dx",),
    NormTag.ENERGY: ("dtt", "dx"),
    NormTag.SEMINORM_RSS: ("dt", "dtt", "dx"),
}

__all__ = ["ExactSolution", "compute_errors", "eoc"]


def compute_errors(
    u_h: SpaceTimeSolution,
    exact: ExactSolution,
    which: Iterable[NormTag],
    n_q: int = DEFAULT_TIME_POINTS,
    quad: Optional[SpaceTimeQuadrature] = None,
) -> ErrorReport:
    """Space-time quadrature of the squared error in each requested norm.

    All norms are unweighted except Energy, which uses e^{-t/eps}:
    Energy^2 = eps^2 |e_tt|^2_eps + |e_x|^2_eps.

    Raises:
        ArgumentError: If the exact solution lacks a needed derivative.
    """
    tags = list(dict.fromkeys(which))
    if quad is None:
        quad = SpaceTimeQuadrature(u_h.basis, u_h.mesh, u_h.epsilon, n_q)

    needed = {name for tag in tags for name in _NEEDS[tag]}
    callables = {name: exact.derivative(name) for name in needed}
    x, t = quad.grid_points()

    squared: dict[str, np.ndarray] = {}
    for name in needed:
        dt, dx = _COMPONENTS[name]
        reference = np.asarray(callables[name](x, t), dtype=float)
        diff = reference - quad.field_values(u_h.matrix, dt=dt, dx=dx)
        squared[name] = diff**2

    plain = {name: quad.integrate(values) for name, values in squared.items()}
    errors: dict[NormTag, float] = {}
    weighted_parts: dict[str, float] = {}
    for tag in tags:
        if tag == NormTag.ENERGY:
            weighted_parts["H2"] = quad.integrate(squared["dtt"], weighted=True)
            weighted_parts["L2H1"] = quad.integrate(squared["dx"], weighted=True)
            total = u_h.epsilon**2 * weighted_parts["H2"] + weighted_parts["L2H1"]
        elif tag == NormTag.SEMINORM_RSS:
            total = plain["dt"] + plain["dtt"] + plain["dx"]
        else:
            total = plain[_NEEDS[tag][0]]
        errors[tag] = math.sqrt(max(total, 0.0))

    return ErrorReport(
        errors=errors,
        tau=u_h.grid.tau,
        h=u_h.mesh.h,
        epsilon=u_h.epsilon,
        p=u_h.p,
        weighted_parts=weighted_parts,
    )


def eoc(errors: Sequence[float]) -> list[Optional[float]]:
    """Observed orders log2(e_k / e_{k+1}) along a dyadic refinement.

    A step with a zero error has no defined order and yields None.

    Raises:
        ArgumentError: With fewer than two levels.
    """
    if len(errors) < 2:
        raise ArgumentError("Observed orders need at least two levels")
    orders: list[Optional[float]] = []
    for coarse, fine in zip(errors[:-1], errors[1:]):
        if coarse > 0 and fine > 0:
            orders.append(math.log2(coarse / fine))
        else:
            orders.append(None)
    return orders
