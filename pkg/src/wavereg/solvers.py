"""Direct and Newton solvers for the rescaled Galerkin systems."""

import logging
import warnings
from typing import Optional, Union

import numpy as np
import scipy.linalg
from scipy import sparse
from scipy.sparse.linalg import splu

from wavereg.assembly import (
    SpaceTimeQuadrature,
    SpaceTimeSolution,
    TimeForcing,
    WeightedSystem,
    assemble_load,
    assemble_spacetime_operator,
    assemble_weighted_system,
)
from wavereg.discretisation.quadrature import DEFAULT_TIME_POINTS
from wavereg.discretisation.temporal import TimeGrid, spline_basis
from wavereg.errors import ArgumentError, NumericError, SolverError
from wavereg.models import ILL_CONDITIONED_RATIO, NewtonConfig, NewtonReport

logger = logging.getLogger(__name__)

RESIDUAL_TOLERANCE = 1e-8
# Dense condition numbers are only computed up to this size.
MAX_DENSE_CONDITION = 4000

Matrix = Union[np.ndarray, sparse.spmatrix]


def check_operating_envelope(tau: float, epsilon: float) -> bool:
    """Warn when tau/eps leaves the well-conditioned range; returns True inside it."""
    ratio = tau / epsilon
    if ratio > ILL_CONDITIONED_RATIO:
        logger.warning(
            "tau/eps = %.3g exceeds %g; the rescaled system may be ill-conditioned",
            ratio,
            ILL_CONDITIONED_RATIO,
        )
        return False
    return True


def condition_number(matrix: Matrix) -> float:
    """2-norm condition number from the singular values.

    Raises:
        ArgumentError: If the matrix is not square.
        NumericError: If it has non-finite entries.
    """
    dense = matrix.toarray() if sparse.issparse(matrix) else np.asarray(matrix, dtype=float)
    if dense.ndim != 2 or dense.shape[0] != dense.shape[1]:
        raise ArgumentError(f"Condition number needs a square matrix, got shape {dense.shape}")
    if not np.all(np.isfinite(dense)):
        raise NumericError("Matrix has non-finite entries")
    return float(np.linalg.cond(dense))


def _condition_or_inf(matrix: Matrix) -> float:
    if matrix.shape[0] > MAX_DENSE_CONDITION:
        return np.inf
    try:
        return condition_number(matrix)
    except (NumericError, np.linalg.LinAlgError):
        return np.inf


def _dense_solve(matrix: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(matrix)) or not np.all(np.isfinite(rhs)):
        raise NumericError("Non-finite entries in the linear system")
    with warnings.catch_warnings():
        warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
        try:
            factors = scipy.linalg.lu_factor(matrix, check_finite=False)
        except (scipy.linalg.LinAlgWarning, np.linalg.LinAlgError) as exc:
            raise SolverError(f"LU factorisation failed: {exc}", _condition_or_inf(matrix)) from exc
    solution = scipy.linalg.lu_solve(factors, rhs, check_finite=False)
    if not np.all(np.isfinite(solution)):
        raise SolverError("Dense solve produced non-finite values", _condition_or_inf(matrix))
    return solution


def _sparse_solve(matrix: sparse.spmatrix, rhs: np.ndarray) -> np.ndarray:
    csc = sparse.csc_matrix(matrix)
    try:
        factor = splu(csc)
    except RuntimeError as exc:
        raise SolverError(f"Sparse LU failed: {exc}", _condition_or_inf(csc)) from exc
    solution = factor.solve(rhs)
    if not np.all(np.isfinite(solution)):
        raise SolverError("Sparse solve produced non-finite values", _condition_or_inf(csc))
    return solution


def solve_ode(
    lam: float,
    epsilon: float,
    f: TimeForcing,
    grid: TimeGrid,
    n_q: int = DEFAULT_TIME_POINTS,
) -> np.ndarray:
    """Solve (eps^2 K~ + lam L~) sigma = F~ for the time-only problem.

    Args:
        lam: Reaction coefficient, >= 0.
        epsilon: Regularisation parameter, > 0.
        f: Vectorised forcing of t.
        grid: Time grid.
        n_q: Gauss points per knot interval.

    Returns:
        Spline coefficients of length N_t + 1.

    Raises:
        ArgumentError: On invalid parameters.
        SolverError: If the factorisation breaks down.
    """
    if not lam >= 0:
        raise ArgumentError(f"Reaction coefficient must be nonnegative, got {lam}")
    if not epsilon > 0:
        raise ArgumentError(f"epsilon must be positive, got {epsilon}")
    check_operating_envelope(grid.tau, epsilon)

    basis = spline_basis(grid)
    ws = assemble_weighted_system(basis, epsilon, lam=lam, n_q=n_q)
    rhs = assemble_load(f, basis, epsilon=epsilon, n_q=n_q)
    return _dense_solve(ws.ode_operator(), rhs)


def solve_linear_pde(ws: WeightedSystem, f_tilde: np.ndarray) -> SpaceTimeSolution:
    """Direct sparse solve of the rescaled space-time system.

    Raises:
        SolverError: If factorisation fails or the residual is too large.
    """
    operator = assemble_spacetime_operator(ws)
    rhs = np.asarray(f_tilde, dtype=float).ravel()
    if rhs.size != operator.shape[0]:
        raise ArgumentError(f"Load has {rhs.size} entries, operator has {operator.shape[0]}")
    check_operating_envelope(ws.basis.tau, ws.epsilon)

    sigma = _sparse_solve(operator, rhs)
    residual = np.linalg.norm(operator @ sigma - rhs)
    scale = np.linalg.norm(rhs)
    if residual > RESIDUAL_TOLERANCE * scale:
        raise SolverError(
            f"Residual {residual:.3e} exceeds {RESIDUAL_TOLERANCE:g} * |F~|",
            _condition_or_inf(operator),
        )
    logger.info(
        "Linear solve: %d unknowns, residual %.2e (|F~| = %.2e)", rhs.size, residual, scale
    )
    return SpaceTimeSolution(sigma, ws.basis.grid, ws.mesh, ws.epsilon)


def solve_nonlinear(
    p: int,
    ws: WeightedSystem,
    f_tilde: np.ndarray,
    cfg: Optional[NewtonConfig] = None,
    quad: Optional[SpaceTimeQuadrature] = None,
) -> tuple[SpaceTimeSolution, NewtonReport]:
    """Newton iteration for the semilinear problem, started from the linear solution.

    Residual and Jacobian are both row-scaled by E, which leaves the Newton
    updates unchanged. Iteration stops when |delta sigma|_2 / #dof <= tol.
    Running out of iterations, or an overflow in the nonlinearity, is
    reported on the returned NewtonReport instead of raised.

    Args:
        p: Integer exponent >= 3.
        ws: Assembled weighted system with spatial matrices.
        f_tilde: Rescaled load vector.
        cfg: Stopping rule.
        quad: Prepared quadrature to reuse.

    Returns:
        Tuple of (solution, report).

    Raises:
        SolverError: If a linear solve fails.
    """
    if isinstance(p, bool) or int(p) != p or p < 3:
        raise ArgumentError(f"Exponent p must be an integer >= 3, got {p}")
    cfg = cfg or NewtonConfig()
    if quad is None:
        quad = SpaceTimeQuadrature(ws.basis, ws.mesh, ws.epsilon, ws.n_q)

    operator = assemble_spacetime_operator(ws)
    rhs = np.asarray(f_tilde, dtype=float).ravel()
    sigma = solve_linear_pde(ws, rhs).coeffs.copy()
    n_dofs = sigma.size
    shape = quad.shape

    report = NewtonReport()
    try:
        for iteration in range(1, cfg.max_iter + 1):
            block = sigma.reshape(shape)
            residual = operator @ sigma + quad.nonlinear_residual(block, p).ravel() - rhs
            jacobian = operator + quad.nonlinear_mass(block, p)
            delta = _sparse_solve(jacobian, -residual)
            sigma += delta

            norm = float(np.linalg.norm(delta)) / n_dofs
            report.update_norms.append(norm)
            report.iterations = iteration
            logger.info("Newton iteration %d: |delta|/#dof = %.3e", iteration, norm)
            if norm <= cfg.tol:
                report.converged = True
                break
    except NumericError as exc:
        report.message = str(exc)
        logger.warning("Newton iteration aborted: %s", exc)

    if not report.converged and report.message is None:
        report.message = f"no convergence within {cfg.max_iter} iterations"
        logger.warning("Newton did not converge within %d iterations", cfg.max_iter)

    return SpaceTimeSolution(sigma, ws.basis.grid, ws.mesh, ws.epsilon, p=int(p)), report
