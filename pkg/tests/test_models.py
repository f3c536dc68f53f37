"""Tests for data models."""

import logging
import math

import pytest

from wavereg.errors import ArgumentError
from wavereg.models import (
    DEFAULT_NORMS,
    ConditionRow,
    ConvergenceRow,
    ErrorReport,
    ExactSolution,
    ExperimentConfig,
    ExperimentKind,
    NewtonConfig,
    NormTag,
    RowStatus,
    dyadic_range,
)


class TestNormTag:
    """Tests for NormTag."""

    def test_tag_values(self):
        """Test norm tag values."""
        assert NormTag.L2L2.value == "L2L2"
        assert NormTag.H1L2.value == "H1L2"
        assert NormTag.H2L2.value == "H2L2"
        assert NormTag.L2H1.value == "L2H1"
        assert NormTag.ENERGY.value == "Energy"

    def test_parse_ignores_case(self):
        """Test parsing is case-insensitive."""
        assert NormTag.parse("energy") == NormTag.ENERGY
        assert NormTag.parse(" l2h1 ") == NormTag.L2H1

    def test_parse_unknown(self):
        """Test unknown norms list the valid ones."""
        with pytest.raises(ArgumentError) as exc_info:
            NormTag.parse("Linf")
        assert "L2L2" in str(exc_info.value)


class TestExperimentKind:
    """Tests for ExperimentKind."""

    def test_kind_values(self):
        """Test kind values."""
        assert [kind.value for kind in ExperimentKind] == [
            "ode",
            "linear",
            "nonlinear",
            "coupled",
            "condsweep",
        ]


class TestExactSolution:
    """Tests for ExactSolution."""

    def test_derivative_lookup(self):
        """Test derivatives are returned by name."""
        exact = ExactSolution(value=lambda x, t: x + t, dx=lambda x, t: 1.0 + 0 * x)
        assert exact.derivative("value")(1.0, 2.0) == 3.0
        assert exact.derivative("dx")(1.0, 2.0) == 1.0

    def test_missing_derivative(self):
        """Test asking for an absent derivative raises ArgumentError."""
        exact = ExactSolution(value=lambda x, t: x)
        with pytest.raises(ArgumentError):
            exact.derivative("dtt")
        with pytest.raises(ArgumentError):
            exact.derivative("laplacian")


class TestNewtonConfig:
    """Tests for NewtonConfig."""

    def test_defaults(self):
        """Test the default stopping rule."""
        cfg = NewtonConfig()
        assert cfg.tol == 1e-10
        assert cfg.max_iter == 30

    @pytest.mark.parametrize("tol, max_iter", [(0.0, 10), (-1e-3, 10), (1e-8, 0)])
    def test_invalid(self, tol, max_iter):
        """Test non-positive tolerances and iteration counts are rejected."""
        with pytest.raises(ArgumentError):
            NewtonConfig(tol=tol, max_iter=max_iter)

    def test_roundtrip(self):
        """Test to_dict/from_dict."""
        cfg = NewtonConfig(tol=1e-12, max_iter=15)
        assert NewtonConfig.from_dict(cfg.to_dict()) == cfg


class TestErrorReport:
    """Tests for ErrorReport."""

    def test_rejects_negative_error(self):
        """Test negative errors are rejected."""
        with pytest.raises(ArgumentError):
            ErrorReport(errors={NormTag.L2L2: -1.0}, tau=0.1, h=0.1, epsilon=0.1)

    def test_to_dict(self):
        """Test errors serialise by tag value."""
        report = ErrorReport(errors={NormTag.H1L2: 0.5}, tau=0.25, h=0.5, epsilon=0.25, p=6)
        data = report.to_dict()
        assert data["errors"] == {"H1L2": 0.5}
        assert data["p"] == 6


class TestExperimentConfig:
    """Tests for ExperimentConfig."""

    def test_defaults(self):
        """Test the default configuration is valid."""
        cfg = ExperimentConfig()
        assert cfg.kind == ExperimentKind.LINEAR
        assert cfg.norms == list(DEFAULT_NORMS)
        assert cfg.newton == NewtonConfig()

    def test_ill_conditioned_rejected(self):
        """Test tau/eps > 2 is rejected by default."""
        with pytest.raises(ArgumentError) as exc_info:
            ExperimentConfig(taus=[0.5], epsilon=0.125)
        assert "tau/eps" in str(exc_info.value)

    def test_ill_conditioned_allowed(self, caplog):
        """Test the override turns the rejection into a warning."""
        with caplog.at_level(logging.WARNING, logger="wavereg"):
            cfg = ExperimentConfig(taus=[0.5], epsilon=0.125, allow_ill_conditioned=True)
        assert cfg.allow_ill_conditioned
        assert "ill-conditioned" in caplog.text

    def test_condsweep_exempt_from_envelope(self):
        """Test conditioning sweeps may cover tau/eps > 2."""
        cfg = ExperimentConfig(kind=ExperimentKind.CONDSWEEP, taus=[2.0**-6], epsilons=[2.0**-12])
        assert cfg.epsilons == [2.0**-12]

    def test_tau_must_divide_final_time(self):
        """Test a step that does not divide T is rejected."""
        with pytest.raises(ArgumentError):
            ExperimentConfig(final_time=1.0, taus=[0.3])

    def test_too_few_time_intervals(self):
        """Test fewer than four intervals are rejected."""
        with pytest.raises(ArgumentError):
            ExperimentConfig(final_time=1.0, taus=[0.5], epsilon=0.5)

    @pytest.mark.parametrize(
        "field, value",
        [("nxs", [1]), ("lambdas", [-1.0]), ("epsilon", 0.0), ("p", 2), ("workers", 0)],
    )
    def test_invalid_values(self, field, value):
        """Test invalid field values are rejected."""
        with pytest.raises(ArgumentError):
            ExperimentConfig(**{field: value})

    def test_levels_coarse_to_fine(self):
        """Test levels run from the largest step to the smallest."""
        cfg = ExperimentConfig(taus=[2.0**-4, 2.0**-2, 2.0**-3], nxs=[16])
        assert [level.tau for level in cfg.levels()] == [0.25, 0.125, 0.0625]

        cfg = ExperimentConfig(taus=[2.0**-5], nxs=[16, 4, 8])
        assert [level.n_x for level in cfg.levels()] == [4, 8, 16]

    def test_rejects_two_swept_axes(self):
        """Test tau and nx cannot both be refined in one sweep."""
        with pytest.raises(ArgumentError) as exc_info:
            ExperimentConfig(taus=[0.25, 0.125], nxs=[8, 16])
        assert "not both" in str(exc_info.value)

    def test_coupled_ignores_nx_list(self):
        """Test coupled sweeps derive h from tau, so an nx list is harmless."""
        cfg = ExperimentConfig(
            kind=ExperimentKind.COUPLED, case="wave4", taus=[0.25, 0.125], nxs=[8, 16]
        )
        assert [level.n_x for level in cfg.levels()] == [2, 3]

    def test_coupled_levels(self):
        """Test coupled levels tie eps and h to tau."""
        cfg = ExperimentConfig(
            kind=ExperimentKind.COUPLED, case="wave4", taus=dyadic_range(-2, -6)
        )
        levels = cfg.levels()
        assert [level.epsilon for level in levels] == [tau / 2 for tau in dyadic_range(-2, -6)]
        assert [level.n_x for level in levels] == [2, 3, 4, 6, 8]

    def test_roundtrip(self):
        """Test to_dict/from_dict."""
        cfg = ExperimentConfig(
            kind=ExperimentKind.NONLINEAR,
            case="nonlinreg",
            p=6,
            taus=[0.25, 0.125],
            nxs=[8],
            norms=[NormTag.L2L2, NormTag.ENERGY],
            newton=NewtonConfig(tol=1e-9, max_iter=12),
            output="out/run.csv",
        )
        assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg

    def test_from_dict_parses_strings(self):
        """Test kinds and norms given as strings."""
        cfg = ExperimentConfig.from_dict({"kind": "Coupled", "norms": ["l2l2"], "taus": 0.25})
        assert cfg.kind == ExperimentKind.COUPLED
        assert cfg.norms == [NormTag.L2L2]
        assert cfg.taus == [0.25]

    def test_from_dict_unknown_key(self):
        """Test unknown keys are rejected."""
        with pytest.raises(ArgumentError):
            ExperimentConfig.from_dict({"tolerance": 1e-3})

    def test_from_dict_unknown_kind(self):
        """Test unknown kinds are rejected."""
        with pytest.raises(ArgumentError):
            ExperimentConfig.from_dict({"kind": "parabolic"})


class TestDyadicRange:
    """Tests for dyadic_range."""

    def test_descending(self):
        """Test ranges step towards the stop exponent."""
        assert dyadic_range(-2, -4) == [0.25, 0.125, 0.0625]

    def test_ascending(self):
        """Test ascending ranges."""
        assert dyadic_range(0, 2) == [1.0, 2.0, 4.0]


class TestResultRows:
    """Tests for ConvergenceRow and ConditionRow."""

    def test_convergence_row_to_dict(self):
        """Test h is derived from the cell count."""
        row = ConvergenceRow(
            kind=ExperimentKind.LINEAR,
            case="linreg",
            tau=0.25,
            n_x=8,
            epsilon=0.25,
            p=0,
            norm=NormTag.L2H1,
            error=0.01,
        )
        data = row.to_dict()
        assert list(data) == list(ConvergenceRow.FIELDS)
        assert data["h"] == 0.125
        assert data["status"] == "ok"
        assert data["eoc"] is None

    def test_convergence_sort_key(self):
        """Test coarse levels sort first, then norms in tag order."""

        def row(tau, norm):
            return ConvergenceRow(
                kind=ExperimentKind.LINEAR,
                case="linreg",
                tau=tau,
                n_x=8,
                epsilon=0.25,
                p=0,
                norm=norm,
                error=1.0,
            )

        rows = [row(0.125, NormTag.L2L2), row(0.25, NormTag.L2H1), row(0.25, NormTag.L2L2)]
        rows.sort(key=ConvergenceRow.sort_key)
        assert [(r.tau, r.norm) for r in rows] == [
            (0.25, NormTag.L2L2),
            (0.25, NormTag.L2H1),
            (0.125, NormTag.L2L2),
        ]

    def test_condition_row_to_dict(self):
        """Test condition rows use the CSV column names."""
        row = ConditionRow(tau=0.125, final_time=2.0, epsilon=0.5, lam=1.0, kappa=math.nan)
        row.status = RowStatus.NUMERIC_ERROR
        data = row.to_dict()
        assert list(data) == list(ConditionRow.FIELDS)
        assert data["lambda"] == 1.0
        assert data["status"] == "numeric_error"
