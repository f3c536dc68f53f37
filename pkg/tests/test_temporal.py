"""Tests for the cubic B-spline time basis."""

import numpy as np
import pytest

from wavereg.discretisation.quadrature import gauss_rule, map_rule
from wavereg.discretisation.temporal import (
    SplineBasis,
    TimeGrid,
    modified_basis_coefficients,
    spline_basis,
    truncated_power_phi,
)
from wavereg.errors import ArgumentError


@pytest.fixture
def basis():
    """Basis on T=2 with 16 intervals."""
    return SplineBasis(TimeGrid(T=2.0, n_t=16))


class TestTruncatedPowerPhi:
    """Tests for the unnormalised B-spline Phi."""

    def test_centre_value(self):
        """Test Phi(2 tau) = 4 tau^3."""
        tau = 0.3
        assert truncated_power_phi(2 * tau, tau) == pytest.approx(4 * tau**3, rel=1e-14)

    def test_value_at_three_tau(self):
        """Test Phi(3 tau) = tau^3."""
        tau = 0.125
        assert truncated_power_phi(3 * tau, tau) == pytest.approx(tau**3, rel=1e-14)

    def test_zero_outside_support(self):
        """Test Phi vanishes outside [0, 4 tau]."""
        tau = 0.5
        assert truncated_power_phi(-tau, tau) == 0.0
        assert truncated_power_phi(5 * tau, tau) == 0.0
        assert truncated_power_phi(-tau, tau, deriv=2) == 0.0

    def test_symmetry(self):
        """Test Phi is symmetric and Phi' antisymmetric about 2 tau."""
        tau = 0.25
        s = np.linspace(0.0, 2 * tau, 11)
        mirrored = 4 * tau - s
        np.testing.assert_allclose(
            truncated_power_phi(s, tau), truncated_power_phi(mirrored, tau), atol=1e-15
        )
        np.testing.assert_allclose(
            truncated_power_phi(s, tau, 1), -truncated_power_phi(mirrored, tau, 1), atol=1e-14
        )

    def test_invalid_derivative(self):
        """Test derivative orders above 2 are rejected."""
        with pytest.raises(ArgumentError):
            truncated_power_phi(0.1, 0.25, deriv=3)


class TestTimeGrid:
    """Tests for TimeGrid."""

    def test_knots(self):
        """Test knots run from 0 to T."""
        grid = TimeGrid(T=2.0, n_t=8)
        assert grid.tau == 0.25
        assert grid.knots[0] == 0.0
        assert grid.knots[-1] == pytest.approx(2.0)
        assert np.all(np.diff(grid.knots) > 0)

    def test_too_few_intervals(self):
        """Test fewer than 4 intervals are rejected."""
        with pytest.raises(ArgumentError):
            TimeGrid(T=1.0, n_t=3)

    def test_non_positive_final_time(self):
        """Test T <= 0 is rejected."""
        with pytest.raises(ArgumentError):
            TimeGrid(T=0.0, n_t=8)

    def test_from_step(self):
        """Test building a grid from the step size."""
        grid = TimeGrid.from_step(2.0, 2.0**-5)
        assert grid.n_t == 64

    def test_from_step_not_dividing(self):
        """Test a step that does not divide T is rejected."""
        with pytest.raises(ArgumentError):
            TimeGrid.from_step(1.0, 0.3)

    def test_element_index_clamps_final_time(self):
        """Test t = T belongs to the last interval."""
        grid = TimeGrid(T=1.0, n_t=4)
        assert list(grid.element_index(np.array([0.0, 0.3, 1.0]))) == [0, 1, 3]


class TestModifiedBasis:
    """Tests for the modified first basis function."""

    def test_coefficients(self):
        """Test the combination is (8/7, -4/7, 8/7) for any step."""
        for tau in (1.0, 0.125, 2.0**-8):
            np.testing.assert_allclose(
                modified_basis_coefficients(tau), (8 / 7, -4 / 7, 8 / 7), rtol=1e-12
            )

    def test_initial_conditions(self, basis):
        """Test phi~(0) = phi~'(0) = 0 and phi~(tau) = 1."""
        assert basis.eval_basis(1, 0.0, 0) == pytest.approx(0.0, abs=1e-14)
        assert basis.eval_basis(1, 0.0, 1) == pytest.approx(0.0, abs=1e-12)
        assert basis.eval_basis(1, basis.tau, 0) == pytest.approx(1.0, rel=1e-14)


class TestEvalBasis:
    """Tests for SplineBasis.eval_basis."""

    def test_peak_normalisation(self, basis):
        """Test phi_k(k tau) = 1 for k >= 2."""
        for k in range(2, basis.size):
            assert basis.eval_basis(k, k * basis.tau) == pytest.approx(1.0, rel=1e-13)

    def test_neighbour_knots(self, basis):
        """Test phi_k((k +- 1) tau) = 1/4 for interior k."""
        tau = basis.tau
        for k in range(3, basis.size - 1):
            assert basis.eval_basis(k, (k - 1) * tau) == pytest.approx(0.25, rel=1e-13)
            assert basis.eval_basis(k, (k + 1) * tau) == pytest.approx(0.25, rel=1e-13)

    def test_second_derivative_at_centre(self, basis):
        """Test phi_k''(k tau) = -3 / tau^2."""
        tau = basis.tau
        assert basis.eval_basis(5, 5 * tau, 2) == pytest.approx(-3.0 / tau**2, rel=1e-12)

    def test_compact_support(self, basis):
        """Test values vanish exactly outside the support."""
        t = np.linspace(0.0, basis.grid.T, 401)
        for k in range(1, basis.size + 1):
            lo, hi = basis.support(k)
            outside = (t < lo) | (t > hi)
            for deriv in (0, 1, 2):
                assert np.all(basis.eval_basis(k, t[outside], deriv) == 0.0)

    def test_c2_continuity_at_knots(self, basis):
        """Test value and derivatives agree across every knot."""
        tau = basis.tau
        delta = 1e-9 * tau
        knots = basis.grid.knots[1:-1]
        for k in range(1, basis.size + 1):
            for deriv in (0, 1, 2):
                left = basis.eval_basis(k, knots - delta, deriv)
                right = basis.eval_basis(k, knots + delta, deriv)
                np.testing.assert_allclose(left, right, atol=1e-6 * tau**-deriv)

    def test_broadcasts_index_and_time(self, basis):
        """Test index and time arrays broadcast together."""
        k = np.arange(1, basis.size + 1)[:, None]
        t = np.linspace(0.0, basis.grid.T, 7)[None, :]
        values = basis.eval_basis(k, t)
        assert values.shape == (basis.size, 7)
        assert values[4, 2] == pytest.approx(basis.eval_basis(5, float(t[0, 2])))

    def test_index_out_of_range(self, basis):
        """Test invalid indices raise ArgumentError."""
        with pytest.raises(ArgumentError):
            basis.eval_basis(0, 0.5)
        with pytest.raises(ArgumentError):
            basis.eval_basis(basis.size + 1, 0.5)

    def test_time_out_of_range(self, basis):
        """Test times outside [0, T] raise ArgumentError."""
        with pytest.raises(ArgumentError):
            basis.eval_basis(3, basis.grid.T + 0.1)

    def test_partition_of_unity_scaling(self, basis):
        """Test the untruncated translates sum to 3/2 away from the ends."""
        tau = basis.tau
        t = np.linspace(2 * tau, basis.grid.T - 2 * tau, 97)
        total = sum(basis.translate(k, t) for k in range(-1, basis.size + 2))
        np.testing.assert_allclose(total, 1.5, atol=1e-12)

    @pytest.mark.parametrize("n_t", [4, 8, 16])
    def test_gram_matrix_nonsingular(self, n_t):
        """Test the L2 Gram matrix of the active basis is nonsingular."""
        basis = SplineBasis(TimeGrid(T=1.0, n_t=n_t))
        nodes, weights = gauss_rule(8)
        knots = basis.grid.knots
        points = [map_rule(a, b, nodes, weights) for a, b in zip(knots[:-1], knots[1:])]
        t = np.concatenate([p[0] for p in points])
        w = np.concatenate([p[1] for p in points])
        values = basis.values_matrix(t).toarray()
        gram = values.T @ (w[:, None] * values)
        assert np.all(np.linalg.eigvalsh(gram) > 0)
        assert np.linalg.cond(gram) < 1e8


class TestSplineEval:
    """Tests for SplineBasis.spline_eval."""

    def test_unit_vector(self, basis):
        """Test a unit coefficient vector reproduces the basis function."""
        t = np.linspace(0.0, basis.grid.T, 53)
        for k in (1, 2, 7, basis.size):
            coeffs = np.zeros(basis.size)
            coeffs[k - 1] = 1.0
            for deriv in (0, 1, 2):
                np.testing.assert_allclose(
                    basis.spline_eval(coeffs, t, deriv), basis.eval_basis(k, t, deriv), atol=1e-12
                )

    def test_zero_coefficients(self, basis):
        """Test zero coefficients give zero."""
        t = np.linspace(0.0, basis.grid.T, 11)
        assert np.all(basis.spline_eval(np.zeros(basis.size), t) == 0.0)

    def test_vanishes_at_start(self, basis):
        """Test any spline starts at rest."""
        coeffs = np.random.default_rng(3).normal(size=basis.size)
        assert basis.spline_eval(coeffs, 0.0, 0) == pytest.approx(0.0, abs=1e-13)
        assert basis.spline_eval(coeffs, 0.0, 1) == pytest.approx(0.0, abs=1e-11)

    def test_scalar_time(self, basis):
        """Test a scalar time returns a float."""
        assert isinstance(basis.spline_eval(np.ones(basis.size), 0.7), float)

    def test_length_mismatch(self, basis):
        """Test a wrong coefficient length raises ArgumentError."""
        with pytest.raises(ArgumentError):
            basis.spline_eval(np.ones(basis.size - 1), 0.5)


class TestSplineBasisCache:
    """Tests for the shared basis cache."""

    def test_same_grid_same_basis(self):
        """Test equal grids share one basis instance."""
        assert spline_basis(TimeGrid(2.0, 8)) is spline_basis(TimeGrid(2.0, 8))
