"""Uniform P1 finite elements on [0, 1] with homogeneous Dirichlet conditions."""

from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import spsolve

from wavereg.discretisation.quadrature import gauss_rule
from wavereg.errors import ArgumentError, NumericError

SPACE_POINTS_PER_CELL = 6
_DOMAIN_TOLERANCE = 1e-14

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class SpaceMesh:
    """Uniform mesh of [0, 1] with n_x cells.

    Degrees of freedom are the interior nodes x_1..x_{n_x-1}.
    """

    n_x: int

    def __post_init__(self) -> None:
        if isinstance(self.n_x, bool) or int(self.n_x) != self.n_x or self.n_x < 2:
            raise ArgumentError(f"Spatial mesh needs at least 2 cells, got {self.n_x}")
        object.__setattr__(self, "n_x", int(self.n_x))

    @property
    def h(self) -> float:
        return 1.0 / self.n_x

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.n_x + 1) * self.h

    @property
    def interior_nodes(self) -> np.ndarray:
        return self.nodes[1:-1]

    @property
    def n_dofs(self) -> int:
        return self.n_x - 1

    def cell_nodes(self) -> np.ndarray:
        """(n_x, 2) array of the node numbers bounding each cell."""
        left = np.arange(self.n_x)
        return np.stack([left, left + 1], axis=1)

    def cell_quadrature(
        self, n_points: int = SPACE_POINTS_PER_CELL
    ) -> tuple[np.ndarray, np.ndarray]:
        """Gauss points and weights per cell, each of shape (n_x, n_points)."""
        nodes, weights = gauss_rule(n_points)
        left = self.nodes[:-1, None]
        x = left + 0.5 * (nodes + 1.0) * self.h
        w = np.broadcast_to(0.5 * self.h * weights, x.shape)
        return x, w

    def local_hats(self, n_points: int = SPACE_POINTS_PER_CELL) -> np.ndarray:
        """Values of the two local hats at the reference Gauss points, shape (2, n_points)."""
        xi = 0.5 * (gauss_rule(n_points)[0] + 1.0)
        return np.stack([1.0 - xi, xi])

    def hat_matrix(self, x: ArrayLike, deriv: int = 0) -> sparse.csr_matrix:
        """Sparse (len(x), n_dofs) matrix of interior hat values (or slopes) at x."""
        if deriv not in (0, 1):
            raise ArgumentError(f"Spatial derivative order must be 0 or 1, got {deriv}")
        x_arr = np.atleast_1d(self._check_positions(x))
        cell = np.clip(np.floor(x_arr / self.h).astype(int), 0, self.n_x - 1)
        xi = x_arr / self.h - cell
        if deriv == 0:
            values = np.stack([1.0 - xi, xi], axis=1)
        else:
            values = np.broadcast_to(np.array([-1.0, 1.0]) / self.h, (x_arr.size, 2))

        node = np.stack([cell, cell + 1], axis=1)
        rows = np.broadcast_to(np.arange(x_arr.size)[:, None], node.shape)
        interior = (node >= 1) & (node <= self.n_x - 1)
        return sparse.csr_matrix(
            (values[interior], (rows[interior], node[interior] - 1)),
            shape=(x_arr.size, self.n_dofs),
        )

    def _check_positions(self, x: ArrayLike) -> np.ndarray:
        x_arr = np.asarray(x, dtype=float)
        if np.any(x_arr < -_DOMAIN_TOLERANCE) or np.any(x_arr > 1.0 + _DOMAIN_TOLERANCE):
            raise ArgumentError("Position outside [0, 1]")
        return np.clip(x_arr, 0.0, 1.0)


def build_space_mesh(n_x: int) -> SpaceMesh:
    """Build the uniform mesh with n_x cells.

    Raises:
        ArgumentError: If n_x < 2.
    """
    return SpaceMesh(n_x)


def _tridiagonal(
    size: int, diagonal: float, off: float, ends: Optional[float] = None
) -> sparse.csr_matrix:
    main = np.full(size, diagonal)
    if ends is not None:
        main[[0, -1]] = ends
    side = np.full(size - 1, off)
    return sparse.diags([side, main, side], [-1, 0, 1], shape=(size, size), format="csr")


def assemble_mass(
    mesh: SpaceMesh,
    coefficient: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    include_boundary: bool = False,
) -> sparse.csr_matrix:
    """Mass matrix int c(x) psi_j psi_i dx.

    Without a coefficient the closed form is used: 2h/3 on the diagonal and
    h/6 off it. With a coefficient the matrix is built cell by cell with the
    6-point Gauss rule.

    Args:
        mesh: Spatial mesh.
        coefficient: Optional vectorised weight c(x).
        include_boundary: Assemble on all n_x + 1 nodes instead of the interior.

    Returns:
        Symmetric sparse matrix.
    """
    h = mesh.h
    if coefficient is None:
        size = mesh.n_x + 1 if include_boundary else mesh.n_dofs
        ends = h / 3.0 if include_boundary else None
        return _tridiagonal(size, 2.0 * h / 3.0, h / 6.0, ends)

    x, w = mesh.cell_quadrature()
    c = np.asarray(coefficient(x), dtype=float) * np.ones_like(x)
    if not np.all(np.isfinite(c)):
        raise NumericError("Non-finite mass coefficient")
    hats = mesh.local_hats()
    local = np.einsum("cr,ir,jr->cij", c * w, hats, hats)
    return _scatter_cells(mesh, local, include_boundary)


def assemble_stiffness(mesh: SpaceMesh, include_boundary: bool = False) -> sparse.csr_matrix:
    """Stiffness matrix int psi_j' psi_i' dx: 2/h on the diagonal, -1/h off it."""
    h = mesh.h
    if include_boundary:
        return _tridiagonal(mesh.n_x + 1, 2.0 / h, -1.0 / h, ends=1.0 / h)
    return _tridiagonal(mesh.n_dofs, 2.0 / h, -1.0 / h)


def _scatter_cells(
    mesh: SpaceMesh, local: np.ndarray, include_boundary: bool
) -> sparse.csr_matrix:
    nodes = mesh.cell_nodes()
    rows = np.broadcast_to(nodes[:, :, None], local.shape)
    cols = np.broadcast_to(nodes[:, None, :], local.shape)
    if include_boundary:
        size = mesh.n_x + 1
        keep = np.ones(local.shape, dtype=bool)
    else:
        size = mesh.n_dofs
        keep = (rows >= 1) & (rows <= mesh.n_dofs) & (cols >= 1) & (cols <= mesh.n_dofs)
        rows, cols = rows - 1, cols - 1
    matrix = sparse.coo_matrix((local[keep], (rows[keep], cols[keep])), shape=(size, size))
    return matrix.tocsr()


def eval_fe_function(mesh: SpaceMesh, coeffs: np.ndarray, x: ArrayLike) -> ArrayLike:
    """Value of the P1 function with interior coefficients ``coeffs`` at x.

    Raises:
        ArgumentError: On a length mismatch or x outside [0, 1].
    """
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape != (mesh.n_dofs,):
        raise ArgumentError(f"Expected {mesh.n_dofs} coefficients, got shape {coeffs.shape}")
    x_arr = mesh._check_positions(x)
    nodal = np.concatenate([[0.0], coeffs, [0.0]])
    values = np.interp(x_arr, mesh.nodes, nodal)
    if np.ndim(values) == 0:
        return float(values)
    return values


def load_vector(mesh: SpaceMesh, f: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """int f psi_j dx for every interior hat, 6-point Gauss per cell."""
    x, w = mesh.cell_quadrature()
    values = np.asarray(f(x), dtype=float) * np.ones_like(x)
    if not np.all(np.isfinite(values)):
        raise NumericError("Non-finite spatial load")
    local = np.einsum("cr,ir->ci", values * w, mesh.local_hats())
    full = np.zeros(mesh.n_x + 1)
    np.add.at(full, mesh.cell_nodes(), local)
    return full[1:-1]


def l2_project(mesh: SpaceMesh, f: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Coefficients of the L2 projection of f onto the interior P1 space."""
    mass = assemble_mass(mesh).tocsc()
    return np.atleast_1d(spsolve(mass, load_vector(mesh, f)))
