"""Cubic C2 B-spline basis in time on a uniform grid.

The basis is built from the closed-form truncated-power representation of
the cardinal cubic B-spline. Index 1 is the modified function that vanishes
together with its derivative at t = 0; indices 2..N_t+1 are plain translates
normalised to one at their centre knot.
"""

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Union

import numpy as np
from scipy import sparse

from wavereg.errors import ArgumentError

ArrayLike = Union[float, np.ndarray]

# Weights of the five shifted truncated cubics making up Phi.
_PHI_WEIGHTS = (1.0, -4.0, 6.0, -4.0, 1.0)
_KNOT_TOLERANCE = 1e-12


def _check_deriv(deriv: int) -> None:
    if deriv not in (0, 1, 2):
        raise ArgumentError(f"Derivative order must be 0, 1 or 2, got {deriv}")


def truncated_power_phi(s: ArrayLike, tau: float, deriv: int = 0) -> ArrayLike:
    """Evaluate the unnormalised cubic B-spline Phi supported on [0, 4*tau].

    Phi(s) = sum_m w_m (s - m*tau)_+^3 with w = (1, -4, 6, -4, 1). The function
    is symmetric about 2*tau, so the right half is evaluated by reflection,
    which keeps the truncated powers small and avoids cancellation.

    Args:
        s: Offset(s) at which to evaluate.
        tau: Knot spacing.
        deriv: Derivative order (0, 1 or 2).

    Returns:
        Phi^(deriv)(s); a float for scalar input, an array otherwise.
    """
    _check_deriv(deriv)
    s_arr = np.asarray(s, dtype=float)
    left = s_arr <= 2.0 * tau
    r = np.where(left, s_arr, 4.0 * tau - s_arr)

    out = np.zeros_like(r)
    for m, weight in enumerate(_PHI_WEIGHTS[:3]):
        x = r - m * tau
        xp = np.where(x >= 0.0, x, 0.0)
        if deriv == 0:
            out += weight * xp**3
        elif deriv == 1:
            out += weight * 3.0 * xp**2
        else:
            out += weight * 6.0 * xp

    if deriv == 1:
        out = np.where(left, out, -out)
    out = np.where((s_arr < 0.0) | (s_arr > 4.0 * tau), 0.0, out)

    if np.ndim(out) == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class TimeGrid:
    """Uniform partition of (0, T] into n_t intervals."""

    T: float
    n_t: int

    def __post_init__(self) -> None:
        if not np.isfinite(self.T) or self.T <= 0:
            raise ArgumentError(f"Final time must be positive, got {self.T}")
        if int(self.n_t) != self.n_t or self.n_t < 4:
            raise ArgumentError(f"Time grid needs at least 4 intervals, got {self.n_t}")
        object.__setattr__(self, "n_t", int(self.n_t))

    @classmethod
    def from_step(cls, T: float, tau: float) -> "TimeGrid":
        """Build a grid from the step size; T/tau must be an integer."""
        if tau <= 0:
            raise ArgumentError(f"Time step must be positive, got {tau}")
        n_t = int(round(T / tau))
        if n_t <= 0 or abs(n_t * tau - T) > 1e-9 * T:
            raise ArgumentError(f"T={T} is not an integer multiple of tau={tau}")
        return cls(T=T, n_t=n_t)

    @property
    def tau(self) -> float:
        return self.T / self.n_t

    @property
    def knots(self) -> np.ndarray:
        return np.arange(self.n_t + 1) * self.tau

    def element_index(self, t: ArrayLike) -> np.ndarray:
        """Knot interval containing each time; t = T maps to the last interval."""
        e = np.floor(np.asarray(t, dtype=float) / self.tau).astype(int)
        return np.clip(e, 0, self.n_t - 1)


def modified_basis_coefficients(tau: float) -> tuple[float, float, float]:
    """Solve for (a, b, c) with a*phi_-1 + b*phi_0 + c*phi_1 =: phi~.

    Conditions: phi~(0) = 0, phi~'(0) = 0 and phi~(tau) = 1.
    """
    scale = 1.0 / (4.0 * tau**3)

    def raw(k: int, t: float, deriv: int) -> float:
        return scale * truncated_power_phi(t - (k - 2) * tau, tau, deriv)

    ks = (-1, 0, 1)
    system = np.array(
        [
            [raw(k, 0.0, 0) for k in ks],
            [raw(k, 0.0, 1) for k in ks],
            [raw(k, tau, 0) for k in ks],
        ]
    )
    a, b, c = np.linalg.solve(system, np.array([0.0, 0.0, 1.0]))
    return float(a), float(b), float(c)


@dataclass(frozen=True)
class SplineBasis:
    """The active temporal basis phi_1..phi_{N_t+1} on a TimeGrid."""

    grid: TimeGrid
    modified_coefficients: tuple[float, float, float] = field(
        init=False, repr=False, compare=False
    )

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "modified_coefficients", modified_basis_coefficients(self.grid.tau)
        )

    @property
    def size(self) -> int:
        return self.grid.n_t + 1

    @property
    def tau(self) -> float:
        return self.grid.tau

    def support(self, k: int) -> tuple[float, float]:
        """Closed support interval of phi_k restricted to [0, T]."""
        self._check_index(k)
        tau = self.tau
        return max(0.0, (k - 2) * tau), min(self.grid.T, (k + 2) * tau)

    def local_indices(self, element: int) -> range:
        """Basis indices that are non-zero somewhere on a knot interval."""
        return range(max(1, element - 1), min(self.size, element + 2) + 1)

    def translate(self, k: Union[int, np.ndarray], t: ArrayLike, deriv: int = 0) -> ArrayLike:
        """Raw peak-normalised translate phi_k for any integer k (no modification)."""
        tau = self.tau
        offset = np.asarray(t, dtype=float) - (np.asarray(k) - 2) * tau
        return truncated_power_phi(offset, tau, deriv) / (4.0 * tau**3)

    def eval_basis(self, k: Union[int, np.ndarray], t: ArrayLike, deriv: int = 0) -> ArrayLike:
        """Evaluate phi_k^(deriv)(t) for k in 1..N_t+1 and t in [0, T].

        Index and time arrays broadcast against each other.

        Raises:
            ArgumentError: If an index or time is out of range.
        """
        _check_deriv(deriv)
        k_arr = np.asarray(k)
        if not np.issubdtype(k_arr.dtype, np.integer):
            raise ArgumentError(f"Basis index must be an integer, got {k!r}")
        if np.any(k_arr < 1) or np.any(k_arr > self.size):
            raise ArgumentError(f"Basis index out of range 1..{self.size}: {k!r}")
        t_arr = self._check_times(t)

        values = self.translate(k_arr, t_arr, deriv)
        if np.any(k_arr == 1):
            a, b, c = self.modified_coefficients
            modified = (
                a * self.translate(-1, t_arr, deriv)
                + b * self.translate(0, t_arr, deriv)
                + c * self.translate(1, t_arr, deriv)
            )
            values = np.where(k_arr == 1, modified, values)

        if np.ndim(values) == 0:
            return float(values)
        return values

    def values_matrix(self, t: ArrayLike, deriv: int = 0) -> sparse.csr_matrix:
        """Sparse (len(t), size) matrix of basis values at the given times."""
        t_arr = np.atleast_1d(self._check_times(t))
        e = self.grid.element_index(t_arr)
        k = e[:, None] - 1 + np.arange(4)
        valid = (k >= 1) & (k <= self.size)
        k_safe = np.clip(k, 1, self.size)
        values = self.eval_basis(k_safe, t_arr[:, None], deriv)

        rows = np.broadcast_to(np.arange(t_arr.size)[:, None], k.shape)
        return sparse.csr_matrix(
            (values[valid], (rows[valid], k_safe[valid] - 1)),
            shape=(t_arr.size, self.size),
        )

    def spline_eval(self, coeffs: np.ndarray, t: ArrayLike, deriv: int = 0) -> ArrayLike:
        """Evaluate sum_k coeffs_k phi_k^(deriv)(t).

        Only indices whose support contains t are evaluated.

        Raises:
            ArgumentError: If the coefficient vector has the wrong length.
        """
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape != (self.size,):
            raise ArgumentError(
                f"Expected {self.size} spline coefficients, got shape {coeffs.shape}"
            )
        result = self.values_matrix(t, deriv) @ coeffs
        if np.ndim(t) == 0:
            return float(result[0])
        return result

    def _check_index(self, k: int) -> None:
        if int(k) != k or not 1 <= k <= self.size:
            raise ArgumentError(f"Basis index out of range 1..{self.size}: {k!r}")

    def _check_times(self, t: ArrayLike) -> np.ndarray:
        t_arr = np.asarray(t, dtype=float)
        slack = _KNOT_TOLERANCE * self.grid.T
        if np.any(t_arr < -slack) or np.any(t_arr > self.grid.T + slack):
            raise ArgumentError(f"Time outside [0, {self.grid.T}]")
        return t_arr


@lru_cache(maxsize=64)
def spline_basis(grid: TimeGrid) -> SplineBasis:
    """Shared basis instance for a grid."""
    return SplineBasis(grid)
