"""Tests for the P1 finite element space."""

import numpy as np
import pytest

from wavereg.discretisation.spatial import (
    assemble_mass,
    assemble_stiffness,
    build_space_mesh,
    eval_fe_function,
    l2_project,
    load_vector,
)
from wavereg.errors import ArgumentError


class TestSpaceMesh:
    """Tests for build_space_mesh."""

    def test_two_cells(self):
        """Test two cells leave one dof at the midpoint."""
        mesh = build_space_mesh(2)
        assert mesh.n_dofs == 1
        np.testing.assert_allclose(mesh.interior_nodes, [0.5])

    @pytest.mark.parametrize("n_x, dofs", [(256, 255), (64, 63)])
    def test_dyadic_meshes(self, n_x, dofs):
        """Test mesh width and dof count."""
        mesh = build_space_mesh(n_x)
        assert mesh.h == pytest.approx(1.0 / n_x)
        assert mesh.n_dofs == dofs

    @pytest.mark.parametrize("n_x", [1, 0, -3])
    def test_too_few_cells(self, n_x):
        """Test fewer than two cells are rejected."""
        with pytest.raises(ArgumentError):
            build_space_mesh(n_x)

    def test_hat_matrix_at_nodes(self):
        """Test hats evaluated at the interior nodes give the identity."""
        mesh = build_space_mesh(8)
        hats = mesh.hat_matrix(mesh.interior_nodes).toarray()
        np.testing.assert_allclose(hats, np.eye(mesh.n_dofs), atol=1e-14)


class TestMassMatrix:
    """Tests for assemble_mass."""

    def test_two_cells(self):
        """Test the 1x1 mass matrix is 2h/3."""
        mass = assemble_mass(build_space_mesh(2)).toarray()
        np.testing.assert_allclose(mass, [[1.0 / 3.0]])

    def test_interior_row_sums(self):
        """Test interior rows sum to h."""
        mesh = build_space_mesh(16)
        sums = np.asarray(assemble_mass(mesh).sum(axis=1)).ravel()
        np.testing.assert_allclose(sums[1:-1], mesh.h)

    @pytest.mark.parametrize("n_x", [2, 4, 8])
    def test_symmetric_positive_definite(self, n_x):
        """Test the mass matrix is SPD."""
        mass = assemble_mass(build_space_mesh(n_x)).toarray()
        np.testing.assert_allclose(mass, mass.T)
        assert np.all(np.linalg.eigvalsh(mass) > 0)

    def test_unit_coefficient_matches_closed_form(self):
        """Test the cellwise assembly with c = 1 reproduces the closed form."""
        mesh = build_space_mesh(8)
        weighted = assemble_mass(mesh, coefficient=lambda x: np.ones_like(x))
        np.testing.assert_allclose(weighted.toarray(), assemble_mass(mesh).toarray(), atol=1e-15)

    def test_full_mass_integrates_one(self):
        """Test the boundary-inclusive matrix sums to |Omega| = 1."""
        mesh = build_space_mesh(8)
        assert assemble_mass(mesh, include_boundary=True).sum() == pytest.approx(1.0)


class TestStiffnessMatrix:
    """Tests for assemble_stiffness."""

    def test_two_cells(self):
        """Test the 1x1 stiffness matrix is 2/h."""
        np.testing.assert_allclose(assemble_stiffness(build_space_mesh(2)).toarray(), [[4.0]])

    def test_second_difference_of_parabola(self):
        """Test A_h applied to x(1 - x) matches 2 M_h 1 away from the boundary."""
        mesh = build_space_mesh(128)
        x = mesh.interior_nodes
        lhs = assemble_stiffness(mesh) @ (x * (1.0 - x))
        rhs = 2.0 * (assemble_mass(mesh) @ np.ones(mesh.n_dofs))
        np.testing.assert_allclose(lhs[1:-1], rhs[1:-1], rtol=1e-3)

    def test_positive_definite(self):
        """Test the Dirichlet stiffness matrix is SPD."""
        stiffness = assemble_stiffness(build_space_mesh(10)).toarray()
        assert np.all(np.linalg.eigvalsh(stiffness) > 0)

    def test_constants_in_kernel_with_boundary(self):
        """Test the Neumann matrix annihilates constants."""
        mesh = build_space_mesh(6)
        full = assemble_stiffness(mesh, include_boundary=True)
        np.testing.assert_allclose(full @ np.ones(mesh.n_x + 1), 0.0, atol=1e-12)


class TestFeFunctions:
    """Tests for evaluation, loads and projection."""

    def test_eval_at_nodes_and_midpoints(self):
        """Test nodal interpolation and linear interpolation between nodes."""
        mesh = build_space_mesh(4)
        coeffs = np.array([1.0, 2.0, -1.0])
        np.testing.assert_allclose(eval_fe_function(mesh, coeffs, mesh.interior_nodes), coeffs)
        assert eval_fe_function(mesh, coeffs, 0.375) == pytest.approx(1.5)
        assert eval_fe_function(mesh, coeffs, 0.0) == 0.0
        assert eval_fe_function(mesh, coeffs, 1.0) == 0.0

    def test_eval_length_mismatch(self):
        """Test a wrong coefficient count raises ArgumentError."""
        with pytest.raises(ArgumentError):
            eval_fe_function(build_space_mesh(4), np.ones(4), 0.5)

    def test_eval_outside_domain(self):
        """Test positions outside [0, 1] raise ArgumentError."""
        with pytest.raises(ArgumentError):
            eval_fe_function(build_space_mesh(4), np.ones(3), 1.5)

    def test_load_of_constant(self):
        """Test int psi_j dx = h."""
        mesh = build_space_mesh(8)
        np.testing.assert_allclose(load_vector(mesh, lambda x: np.ones_like(x)), mesh.h)

    def test_projection_of_sine(self):
        """Test the L2 projection of sin(pi x) is close to its nodal values."""
        mesh = build_space_mesh(32)
        coeffs = l2_project(mesh, lambda x: np.sin(np.pi * x))
        np.testing.assert_allclose(coeffs, np.sin(np.pi * mesh.interior_nodes), atol=2e-3)

    def test_projection_reproduces_p1_function(self):
        """Test projecting a P1 function returns its nodal values."""
        mesh = build_space_mesh(16)
        nodal = np.random.default_rng(3).normal(size=mesh.n_dofs)
        coeffs = l2_project(mesh, lambda x: eval_fe_function(mesh, nodal, x))
        np.testing.assert_allclose(coeffs, nodal, atol=1e-12)
