"""Assembly of the rescaled space-time Galerkin system.

All temporal integrals carry the weight e^{-t/eps}. Row k of every matrix and
vector is multiplied by e^{k*tau/eps} (the diagonal E, stored as exponents),
which turns the weight into e^{-(t - k*tau)/eps} and keeps every evaluated
exponential within [e^{-2 tau/eps}, e^{2 tau/eps}] on the support of phi_k.

Space-time vectors are stored time-major: index = (k - 1) * n_dofs + (j - 1).
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
from scipy import sparse

from wavereg.discretisation.quadrature import (
    DEFAULT_TIME_POINTS,
    WeightedRule,
    shifted_weighted_integral,
)
from wavereg.discretisation.spatial import (
    SPACE_POINTS_PER_CELL,
    SpaceMesh,
    assemble_mass,
    assemble_stiffness,
)
from wavereg.discretisation.temporal import SplineBasis, TimeGrid, spline_basis
from wavereg.errors import ArgumentError, NumericError
from wavereg.models import ExactSolution

logger = logging.getLogger(__name__)

TimeForcing = Callable[[np.ndarray], np.ndarray]
SpaceTimeForcing = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class WeightedSystem:
    """Rescaled temporal matrices plus the spatial matrices of one discretisation.

    ``exponents[k-1] = k*tau/eps`` are the logarithms of the row scaling E;
    the raw exponentials are never formed.
    """

    basis: SplineBasis
    epsilon: float
    k_tilde: np.ndarray
    l_tilde: np.ndarray
    exponents: np.ndarray
    mesh: Optional[SpaceMesh] = None
    m_h: Optional[sparse.csr_matrix] = None
    a_h: Optional[sparse.csr_matrix] = None
    lam: Optional[float] = None
    n_q: int = DEFAULT_TIME_POINTS

    @property
    def n_dofs(self) -> int:
        """Total number of unknowns."""
        if self.mesh is None:
            return self.basis.size
        return self.basis.size * self.mesh.n_dofs

    def ode_operator(self, lam: Optional[float] = None) -> np.ndarray:
        """Dense eps^2 K~ + lam L~ for the time-only problem."""
        lam = self.lam if lam is None else lam
        if lam is None:
            raise ArgumentError("No reaction coefficient given for the ODE operator")
        return self.epsilon**2 * self.k_tilde + lam * self.l_tilde

    def unscaled(self) -> tuple[np.ndarray, np.ndarray]:
        """Return (K, L) = (E^-1 K~, E^-1 L~).

        Only meaningful for moderate eps; for small eps the entries underflow
        to zero, which is exactly the failure the rescaling avoids.
        """
        inverse = np.exp(-self.exponents)[:, None]
        return inverse * self.k_tilde, inverse * self.l_tilde

    def unscale_vector(self, vector: np.ndarray) -> np.ndarray:
        """Apply E^-1 to a time-major vector or a (size, n_space) block."""
        vector = np.asarray(vector, dtype=float)
        blocks = vector.reshape(self.basis.size, -1)
        return (np.exp(-self.exponents)[:, None] * blocks).reshape(vector.shape)


def assemble_temporal(
    basis: SplineBasis, epsilon: float, n_q: int = DEFAULT_TIME_POINTS
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Build K~, L~ and the row exponents.

    k~_ij = e^{i tau/eps} int e^{-t/eps} phi_j'' phi_i'' dt and l~_ij likewise
    with values. Entries with disjoint supports are exactly zero.

    Args:
        basis: Temporal spline basis.
        epsilon: Regularisation parameter, > 0.
        n_q: Gauss points per knot interval.

    Returns:
        Tuple (k_tilde, l_tilde, exponents).

    Raises:
        ArgumentError: If epsilon <= 0.
        NumericError: If a quadrature value is not finite.
    """
    rule = WeightedRule(epsilon, n_q)
    size = basis.size
    tau = basis.tau
    knots = basis.grid.knots

    k_tilde = np.zeros((size, size))
    l_tilde = np.zeros((size, size))
    for i in range(1, size + 1):
        lo_i, hi_i = basis.support(i)
        for j in range(max(1, i - 3), min(size, i + 3) + 1):
            lo_j, hi_j = basis.support(j)
            lo, hi = max(lo_i, lo_j), min(hi_i, hi_j)
            if hi <= lo:
                continue

            def integrand(t: np.ndarray, i: int = i, j: int = j) -> np.ndarray:
                return np.stack(
                    [
                        basis.eval_basis(i, t, 2) * basis.eval_basis(j, t, 2),
                        basis.eval_basis(i, t, 0) * basis.eval_basis(j, t, 0),
                    ]
                )

            k_ij, l_ij = shifted_weighted_integral(integrand, lo, hi, i * tau, rule, knots)
            k_tilde[i - 1, j - 1] = k_ij
            l_tilde[i - 1, j - 1] = l_ij

    exponents = np.arange(1, size + 1) * tau / epsilon
    logger.debug("Assembled temporal matrices of size %d (eps=%g)", size, epsilon)
    return k_tilde, l_tilde, exponents


def assemble_weighted_system(
    basis: SplineBasis,
    epsilon: float,
    mesh: Optional[SpaceMesh] = None,
    lam: Optional[float] = None,
    n_q: int = DEFAULT_TIME_POINTS,
) -> WeightedSystem:
    """Assemble the temporal matrices and, with a mesh, the spatial ones."""
    k_tilde, l_tilde, exponents = assemble_temporal(basis, epsilon, n_q)
    m_h = a_h = None
    if mesh is not None:
        m_h = assemble_mass(mesh)
        a_h = assemble_stiffness(mesh)
    return WeightedSystem(
        basis=basis,
        epsilon=epsilon,
        k_tilde=k_tilde,
        l_tilde=l_tilde,
        exponents=exponents,
        mesh=mesh,
        m_h=m_h,
        a_h=a_h,
        lam=lam,
        n_q=n_q,
    )


class SpaceTimeQuadrature:
    """Tensor Gauss rule on the space-time slabs with row-shifted weights.

    Per knot interval e the (up to four) active basis indices are
    k = e-1..e+2; the test weights already contain e^{-(t - k tau)/eps}.
    Arrays are indexed [element, local index, time point] in time and
    [cell, point] in space.
    """

    def __init__(
        self,
        basis: SplineBasis,
        mesh: SpaceMesh,
        epsilon: float,
        n_q: int = DEFAULT_TIME_POINTS,
        n_x_points: int = SPACE_POINTS_PER_CELL,
    ):
        rule = WeightedRule(epsilon, n_q)
        self.basis = basis
        self.mesh = mesh
        self.epsilon = epsilon
        grid = basis.grid
        tau = grid.tau

        elements = np.arange(grid.n_t)
        self.t = (elements[:, None] + 0.5 * (rule.nodes + 1.0)) * tau
        self.wt = np.broadcast_to(0.5 * tau * rule.weights, self.t.shape)

        k = elements[:, None] - 1 + np.arange(4)
        self.valid = (k >= 1) & (k <= basis.size)
        self.k = np.clip(k, 1, basis.size)

        mask = self.valid[:, :, None]
        self.phi = [
            basis.eval_basis(self.k[:, :, None], self.t[:, None, :], deriv) * mask
            for deriv in (0, 1, 2)
        ]
        shift = self.k[:, :, None] * tau
        self.test = self.wt[:, None, :] * rule.weight(self.t[:, None, :], shift) * self.phi[0]
        # Plain e^{-t/eps}; only used for moderate eps.
        self.plain = self.wt * np.exp(-self.t / epsilon)

        self.x, self.wx = mesh.cell_quadrature(n_x_points)
        self.hats = mesh.local_hats(n_x_points)
        self.cell_nodes = mesh.cell_nodes()

    @property
    def shape(self) -> tuple[int, int]:
        return self.basis.size, self.mesh.n_dofs

    def grid_points(self) -> tuple[np.ndarray, np.ndarray]:
        """(x, t) broadcastable to (element, time point, cell, space point)."""
        return self.x[None, None, :, :], self.t[:, :, None, None]

    def field_values(self, sigma: np.ndarray, dt: int = 0, dx: int = 0) -> np.ndarray:
        """Discrete field derivative at all quadrature points.

        Args:
            sigma: (size, n_dofs) coefficient block.
            dt: Time derivative order (0..2).
            dx: Space derivative order (0 or 1).

        Returns:
            Array of shape (n_t, n_q, n_x, n_x_points).
        """
        size, n_dofs = self.shape
        full = np.zeros((size, n_dofs + 2))
        full[:, 1:-1] = sigma
        local = full[self.k - 1] * self.valid[:, :, None]
        nodal = np.einsum("eaq,ean->eqn", self.phi[dt], local)
        left, right = nodal[:, :, :-1], nodal[:, :, 1:]
        if dx == 0:
            return left[..., None] * self.hats[0] + right[..., None] * self.hats[1]
        slope = (right - left) / self.mesh.h
        return np.broadcast_to(slope[..., None], slope.shape + (self.hats.shape[1],))

    def integrate_tests(self, values: np.ndarray) -> np.ndarray:
        """Shifted integrals of ``values`` against every phi_k psi_j, shape (size, n_dofs)."""
        in_time = np.einsum("eaq,eqcr->eacr", self.test, values)
        local = np.einsum("eacr,cr,br->eacb", in_time, self.wx, self.hats)
        full = np.zeros((self.basis.size, self.mesh.n_x + 1))
        rows = (self.k - 1)[:, :, None, None]
        np.add.at(full, (rows, self.cell_nodes[None, None, :, :]), local)
        return full[:, 1:-1]

    def load(self, f: SpaceTimeForcing) -> np.ndarray:
        x, t = self.grid_points()
        values = np.asarray(f(x, t), dtype=float)
        values = np.broadcast_to(values, self.t.shape + self.x.shape)
        _check_finite(values, self, "Non-finite forcing value")
        return self.integrate_tests(values)

    def nonlinear_residual(self, sigma: np.ndarray, p: int) -> np.ndarray:
        """(p/2) |u|^{p-2} u tested against every basis pair, shape (size, n_dofs)."""
        u = self.field_values(sigma)
        with np.errstate(over="ignore", invalid="ignore"):
            g = 0.5 * p * np.abs(u) ** (p - 2) * u
        _check_finite(g, self, "Overflow in |u|^(p-2) u")
        return self.integrate_tests(g)

    def nonlinear_mass(self, sigma: np.ndarray, p: int) -> sparse.csr_matrix:
        """Rescaled matrix of (p(p-1)/2) int e^{-t/eps} |u|^{p-2} w v."""
        u = self.field_values(sigma)
        with np.errstate(over="ignore", invalid="ignore"):
            g = 0.5 * p * (p - 1) * np.abs(u) ** (p - 2)
        _check_finite(g, self, "Overflow in |u|^(p-2)")

        in_time = np.einsum("eaq,ebq,eqcr->eabcr", self.test, self.phi[0], g)
        local = np.einsum("eabcr,cr,ir,jr->eabcij", in_time, self.wx, self.hats, self.hats)

        n_dofs = self.mesh.n_dofs
        k_row = self.k[:, :, None, None, None, None]
        k_col = self.k[:, None, :, None, None, None]
        node_row = self.cell_nodes[None, None, None, :, :, None]
        node_col = self.cell_nodes[None, None, None, :, None, :]
        keep = (
            self.valid[:, :, None, None, None, None]
            & self.valid[:, None, :, None, None, None]
            & (node_row >= 1)
            & (node_row <= n_dofs)
            & (node_col >= 1)
            & (node_col <= n_dofs)
        )
        keep = np.broadcast_to(keep, local.shape)
        rows = np.broadcast_to((k_row - 1) * n_dofs + node_row - 1, local.shape)
        cols = np.broadcast_to((k_col - 1) * n_dofs + node_col - 1, local.shape)
        size = self.basis.size * n_dofs
        matrix = sparse.coo_matrix(
            (local[keep], (rows[keep], cols[keep])), shape=(size, size)
        )
        return matrix.tocsr()

    def functional(self, sigma: np.ndarray, f: Optional[SpaceTimeForcing], p: int = 0) -> float:
        """Quadrature value of the weighted energy functional, without shift."""
        u = self.field_values(sigma)
        u_tt = self.field_values(sigma, dt=2)
        u_x = self.field_values(sigma, dx=1)
        density = self.epsilon**2 * u_tt**2 + u_x**2
        if p:
            density = density + np.abs(u) ** p
        if f is not None:
            x, t = self.grid_points()
            density = density - 2.0 * np.asarray(f(x, t), dtype=float) * u
        _check_finite(density, self, "Non-finite functional density")
        return float(np.einsum("eq,cr,eqcr->", self.plain, self.wx, density))

    def integrate(self, values: np.ndarray, weighted: bool = False) -> float:
        """int int values dx dt, optionally with the plain weight e^{-t/eps}."""
        time_weights = self.plain if weighted else self.wt
        return float(np.einsum("eq,cr,eqcr->", time_weights, self.wx, values))


def _check_finite(values: np.ndarray, quad: SpaceTimeQuadrature, message: str) -> None:
    bad = ~np.isfinite(values)
    if not np.any(bad):
        return
    e, q, c, r = np.argwhere(bad)[0]
    raise NumericError(message, location=f"t={quad.t[e, q]:.6g}, x={quad.x[c, r]:.6g}")


@dataclass(frozen=True, eq=False)
class SpaceTimeSolution:
    """Discrete field u(x, t) = sum_{k,j} sigma_{k,j} phi_k(t) psi_j(x)."""

    coeffs: np.ndarray
    grid: TimeGrid
    mesh: SpaceMesh
    epsilon: float
    p: int = 0
    basis: SplineBasis = field(init=False, repr=False)

    def __post_init__(self) -> None:
        coeffs = np.array(self.coeffs, dtype=float).ravel()
        expected = (self.grid.n_t + 1) * self.mesh.n_dofs
        if coeffs.size != expected:
            raise ArgumentError(f"Expected {expected} coefficients, got {coeffs.size}")
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "basis", spline_basis(self.grid))

    @classmethod
    def zeros(
        cls, grid: TimeGrid, mesh: SpaceMesh, epsilon: float, p: int = 0
    ) -> "SpaceTimeSolution":
        return cls(np.zeros((grid.n_t + 1) * mesh.n_dofs), grid, mesh, epsilon, p)

    @property
    def matrix(self) -> np.ndarray:
        """Coefficients as a (time index, space index) block."""
        return self.coeffs.reshape(self.basis.size, self.mesh.n_dofs)

    def evaluate(
        self,
        x: Union[float, np.ndarray],
        t: Union[float, np.ndarray],
        dt: int = 0,
        dx: int = 0,
    ) -> Union[float, np.ndarray]:
        """Pointwise values; x and t broadcast against each other."""
        x_arr, t_arr = np.broadcast_arrays(np.asarray(x, float), np.asarray(t, float))
        in_time = self.basis.values_matrix(t_arr.ravel(), dt) @ self.matrix
        in_space = self.mesh.hat_matrix(x_arr.ravel(), dx)
        values = np.asarray(in_space.multiply(in_time).sum(axis=1)).ravel()
        if x_arr.ndim == 0:
            return float(values[0])
        return values.reshape(x_arr.shape)

    def evaluate_grid(
        self, x: np.ndarray, t: np.ndarray, dt: int = 0, dx: int = 0
    ) -> np.ndarray:
        """Values on the tensor grid t x x, shape (len(t), len(x))."""
        in_time = self.basis.values_matrix(t, dt) @ self.matrix
        return np.asarray(self.mesh.hat_matrix(x, dx) @ in_time.T).T

    def as_exact(self) -> ExactSolution:
        """Wrap this discrete field as an exact solution for error comparisons."""
        return ExactSolution(
            value=lambda x, t: self.evaluate(x, t),
            dt=lambda x, t: self.evaluate(x, t, dt=1),
            dtt=lambda x, t: self.evaluate(x, t, dt=2),
            dx=lambda x, t: self.evaluate(x, t, dx=1),
        )


def assemble_load(
    f: Union[TimeForcing, SpaceTimeForcing],
    basis: SplineBasis,
    mesh: Optional[SpaceMesh] = None,
    epsilon: float = 1.0,
    n_q: int = DEFAULT_TIME_POINTS,
    quad: Optional[SpaceTimeQuadrature] = None,
) -> np.ndarray:
    """Rescaled load vector F~.

    Without a mesh f is a function of t and F~_i = e^{i tau/eps} int e^{-t/eps} f phi_i.
    With a mesh f is a function of (x, t) and the result is time-major.

    Raises:
        NumericError: If f is not finite at a quadrature point.
    """
    if mesh is None:
        rule = WeightedRule(epsilon, n_q)
        knots = basis.grid.knots
        loads = np.zeros(basis.size)
        for i in range(1, basis.size + 1):
            lo, hi = basis.support(i)

            def integrand(t: np.ndarray, i: int = i) -> np.ndarray:
                return np.asarray(f(t), dtype=float) * basis.eval_basis(i, t, 0)

            loads[i - 1] = shifted_weighted_integral(
                integrand, lo, hi, i * basis.tau, rule, knots
            )
        return loads

    if quad is None:
        quad = SpaceTimeQuadrature(basis, mesh, epsilon, n_q)
    return quad.load(f).ravel()


def assemble_spacetime_operator(ws: WeightedSystem) -> sparse.csr_matrix:
    """Explicit eps^2 K~ (x) M_h + L~ (x) A_h in time-major layout.

    Raises:
        ArgumentError: If the system has no spatial part or sizes disagree.
    """
    _check_spatial(ws)
    k_tilde = sparse.csr_matrix(ws.k_tilde)
    l_tilde = sparse.csr_matrix(ws.l_tilde)
    operator = ws.epsilon**2 * sparse.kron(k_tilde, ws.m_h) + sparse.kron(l_tilde, ws.a_h)
    logger.debug("Space-time operator %s with %d nonzeros", operator.shape, operator.nnz)
    return operator.tocsr()


def kron_apply(ws: WeightedSystem, sigma: np.ndarray) -> np.ndarray:
    """Matrix-free product with the space-time operator.

    With sigma viewed as a (size, n_dofs) block S, returns
    eps^2 K~ S M_h + L~ S A_h flattened in time-major order.
    """
    _check_spatial(ws)
    block = np.asarray(sigma, dtype=float).reshape(ws.basis.size, ws.mesh.n_dofs)
    mass_part = (ws.m_h @ block.T).T
    stiff_part = (ws.a_h @ block.T).T
    return (ws.epsilon**2 * ws.k_tilde @ mass_part + ws.l_tilde @ stiff_part).ravel()


def _check_spatial(ws: WeightedSystem) -> None:
    if ws.mesh is None or ws.m_h is None or ws.a_h is None:
        raise ArgumentError("Weighted system has no spatial matrices")
    n = ws.mesh.n_dofs
    if ws.m_h.shape != (n, n) or ws.a_h.shape != (n, n):
        raise ArgumentError("Spatial matrices do not match the mesh")
    size = ws.basis.size
    if ws.k_tilde.shape != (size, size) or ws.l_tilde.shape != (size, size):
        raise ArgumentError("Temporal matrices do not match the basis")


def _quadrature_for(
    u: SpaceTimeSolution, epsilon: float, quad: Optional[SpaceTimeQuadrature]
) -> SpaceTimeQuadrature:
    if quad is not None:
        return quad
    return SpaceTimeQuadrature(u.basis, u.mesh, epsilon)


def _check_exponent(p: int) -> None:
    if isinstance(p, bool) or int(p) != p or p < 3:
        raise ArgumentError(f"Exponent p must be an integer >= 3, got {p}")


def assemble_nonlinear_residual(
    u: SpaceTimeSolution,
    p: int,
    epsilon: float,
    quad: Optional[SpaceTimeQuadrature] = None,
) -> np.ndarray:
    """Rescaled B(u; phi_k psi_j) as a time-major vector.

    Raises:
        ArgumentError: If p is not an integer >= 3.
        NumericError: If |u|^{p-2} u overflows.
    """
    _check_exponent(p)
    quad = _quadrature_for(u, epsilon, quad)
    return quad.nonlinear_residual(u.matrix, int(p)).ravel()


def assemble_nonlinear_jacobian(
    u: SpaceTimeSolution,
    p: int,
    epsilon: float,
    ws: Optional[WeightedSystem] = None,
    quad: Optional[SpaceTimeQuadrature] = None,
    operator: Optional[sparse.csr_matrix] = None,
) -> sparse.csr_matrix:
    """Rescaled Jacobian of the nonlinear residual at u.

    The linear operator is taken from ``operator`` or assembled from ``ws``
    (itself assembled on demand).
    """
    _check_exponent(p)
    quad = _quadrature_for(u, epsilon, quad)
    if operator is None:
        if ws is None:
            ws = assemble_weighted_system(u.basis, epsilon, mesh=u.mesh)
        operator = assemble_spacetime_operator(ws)
    return (operator + quad.nonlinear_mass(u.matrix, int(p))).tocsr()


def evaluate_functional(
    u: SpaceTimeSolution,
    f: Optional[SpaceTimeForcing],
    p: int,
    epsilon: float,
    quad: Optional[SpaceTimeQuadrature] = None,
) -> float:
    """Weighted energy functional int e^{-t/eps}(eps^2|u_tt|^2 + |u_x|^2 + |u|^p - 2 f u).

    ``p = 0`` drops the power term; ``f = None`` means zero forcing.
    """
    if p:
        _check_exponent(p)
    quad = _quadrature_for(u, epsilon, quad)
    return quad.functional(u.matrix, f, int(p))
