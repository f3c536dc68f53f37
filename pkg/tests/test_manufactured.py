"""Tests for manufactured solution pairs."""

import numpy as np
import pytest

from wavereg.errors import ArgumentError
from wavereg.manufactured import (
    CaseFactory,
    ManufacturedCase,
    manufactured_linear_regularised,
    manufactured_nonlinear_regularised,
    manufactured_wave_p4,
)
from wavereg.models import Regime


class TestConsistency:
    """Tests for check_consistency on every shipped case."""

    @pytest.mark.parametrize("name", ["linreg", "nonlinreg", "wave4"])
    def test_cases_pass(self, name):
        """Test each registered case satisfies its operator."""
        case = CaseFactory.create(name, epsilon=0.25, final_time=2.0)
        report = case.check_consistency(n_samples=1000)
        assert report.passed
        assert report.n_samples == 1000

    @pytest.mark.parametrize("epsilon", [2.0**-2, 2.0**-5])
    def test_regularised_forcing_residual(self, epsilon):
        """Test the regularised forcings match to 1e-8."""
        for case in (
            manufactured_linear_regularised(epsilon),
            manufactured_nonlinear_regularised(epsilon, p=6),
        ):
            assert case.check_consistency().forcing_residual <= 1e-8

    def test_broken_forcing_fails(self):
        """Test a wrong forcing is detected."""
        good = manufactured_wave_p4()
        broken = ManufacturedCase(
            name="broken",
            regime=Regime.WAVE,
            space=good.space,
            time=good.time,
            forcing=lambda x, t: 0.0 * x,
            final_time=good.final_time,
            p=4,
        )
        report = broken.check_consistency(n_samples=200)
        assert not report.passed
        assert report.forcing_residual > 1.0

    def test_broken_derivative_fails(self):
        """Test a wrong closed-form derivative is detected."""
        good = manufactured_wave_p4()
        time = list(good.time)
        time[2] = lambda t: np.zeros_like(t)
        broken = ManufacturedCase(
            name="broken",
            regime=Regime.WAVE,
            space=good.space,
            time=tuple(time),
            forcing=good.forcing,
            final_time=good.final_time,
            p=4,
        )
        assert broken.check_consistency(n_samples=200).derivative_mismatch > 1e-2

    def test_report_to_dict(self):
        """Test the report serialises its verdict."""
        data = manufactured_wave_p4().check_consistency(n_samples=50).to_dict()
        assert data["case"] == "wave4"
        assert data["passed"] is True


class TestExactFields:
    """Tests for the closed-form fields."""

    @pytest.mark.parametrize(
        "case",
        [
            manufactured_linear_regularised(0.25),
            manufactured_nonlinear_regularised(0.25),
            manufactured_wave_p4(),
        ],
    )
    def test_initial_and_boundary_values(self, case):
        """Test u and u_t vanish at t = 0 and u vanishes at x = 0, 1."""
        x = np.linspace(0.0, 1.0, 21)
        t = np.linspace(0.0, case.final_time, 21)
        np.testing.assert_allclose(case.exact.value(x, 0.0), 0.0, atol=1e-14)
        np.testing.assert_allclose(case.exact.dt(x, 0.0), 0.0, atol=1e-12)
        np.testing.assert_allclose(case.exact.value(0.0, t), 0.0, atol=1e-14)
        np.testing.assert_allclose(case.exact.value(1.0, t), 0.0, atol=1e-12)

    def test_linear_field_value(self):
        """Test u = sin(2 pi x)(T - t)^2 sin^2(2 pi t) at one point."""
        case = manufactured_linear_regularised(0.25, final_time=2.0)
        x, t = 0.125, 0.125
        expected = np.sin(np.pi / 4) * (2.0 - t) ** 2 * np.sin(np.pi / 4) ** 2
        assert case.exact.value(x, t) == pytest.approx(expected, rel=1e-14)

    def test_regularised_needs_epsilon(self):
        """Test regularised cases reject eps <= 0."""
        with pytest.raises(ArgumentError):
            manufactured_linear_regularised(0.0)
        with pytest.raises(ArgumentError):
            CaseFactory.create("linreg", epsilon=None)

    def test_nonlinear_exponent(self):
        """Test the nonlinear case keeps its exponent and rejects p < 3."""
        assert manufactured_nonlinear_regularised(0.25).p == 6
        assert manufactured_nonlinear_regularised(0.25, p=3).p == 3
        with pytest.raises(ArgumentError):
            manufactured_nonlinear_regularised(0.25, p=2)


class TestCaseFactory:
    """Tests for CaseFactory."""

    def test_available(self):
        """Test the shipped cases are registered."""
        assert CaseFactory.available() == ["linreg", "nonlinreg", "wave4"]

    def test_unknown_case(self):
        """Test an unknown name raises ArgumentError."""
        with pytest.raises(ArgumentError) as exc_info:
            CaseFactory.create("heat", epsilon=0.25)
        assert "linreg" in str(exc_info.value)

    def test_wave_ignores_epsilon(self):
        """Test the wave case is built without epsilon."""
        case = CaseFactory.create("wave4", epsilon=None)
        assert case.regime == Regime.WAVE
        assert case.p == 4

    def test_nonlinear_p_override(self):
        """Test p is passed through to the nonlinear case."""
        assert CaseFactory.create("nonlinreg", epsilon=0.25, p=8).p == 8

    @pytest.mark.parametrize("name, p", [("linreg", 6), ("linreg", 4), ("wave4", 6)])
    def test_fixed_exponent_cases_reject_p(self, name, p):
        """Test a case built for one exponent refuses another."""
        with pytest.raises(ArgumentError) as exc_info:
            CaseFactory.create(name, epsilon=0.25, p=p)
        assert name in str(exc_info.value)

    def test_fixed_exponent_cases_accept_own_p(self):
        """Test passing the exponent a case is built for is accepted."""
        assert CaseFactory.create("linreg", epsilon=0.25, p=0).p == 0
        assert CaseFactory.create("wave4", p=4).p == 4
