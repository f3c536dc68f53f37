"""wavereg CLI - Main entry point."""

import json
import sys
from pathlib import Path
from typing import Any, Callable, Optional

import click
from rich.console import Console
from rich.table import Table

from wavereg import __version__
from wavereg.config import ConfigManager
from wavereg.errors import ArgumentError, NumericError, SolverError
from wavereg.experiments import (
    ResultWriter,
    build_case,
    run_condsweep,
    run_convergence,
    sample_ode,
    sample_solution,
    solve_level,
)
from wavereg.log import configure_logging
from wavereg.manufactured import CaseFactory, ConsistencyReport
from wavereg.models import (
    ConditionRow,
    ConvergenceRow,
    ErrorReport,
    ExperimentConfig,
    ExperimentKind,
    NewtonReport,
    RowStatus,
)

console = Console()
error_console = Console(stderr=True)

# Sweep kind used when --kind is not given.
DEFAULT_KINDS = {
    "linreg": ExperimentKind.LINEAR,
    "nonlinreg": ExperimentKind.NONLINEAR,
    "wave4": ExperimentKind.COUPLED,
}

_STATUS_STYLE = {
    RowStatus.OK: "[green]ok[/green]",
    RowStatus.NOT_CONVERGED: "[yellow]not converged[/yellow]",
    RowStatus.SOLVER_ERROR: "[red]solver error[/red]",
    RowStatus.NUMERIC_ERROR: "[red]numeric error[/red]",
}


def _number(value: Optional[float]) -> str:
    if value is None:
        return "-"
    return f"{value:.4e}"


class OutputFormatter:
    """Handles output formatting for CLI."""

    def __init__(self, json_output: bool = False):
        self.json_output = json_output

    def print_errors(self, report: ErrorReport, newton: Optional[NewtonReport] = None) -> None:
        """Print the error norms of a single solve."""
        if self.json_output:
            data = report.to_dict()
            if newton is not None:
                data["newton"] = newton.to_dict()
            console.print_json(json.dumps(data))
            return

        title = f"Errors (tau={report.tau:g}, h={report.h:g}, eps={report.epsilon:g})"
        table = Table(title=title)
        table.add_column("Norm", style="cyan", no_wrap=True)
        table.add_column("Error", style="green", justify="right")
        for tag, value in report.errors.items():
            table.add_row(tag.value, _number(value))
        console.print(table)

        if newton is not None:
            state = "[green]converged[/green]" if newton.converged else "[red]not converged[/red]"
            console.print(f"  Newton: {state} after {newton.iterations} iterations")

    def print_convergence(self, rows: list[ConvergenceRow]) -> None:
        """Print a convergence table."""
        if self.json_output:
            console.print_json(json.dumps([row.to_dict() for row in rows], default=str))
            return

        table = Table(title="Convergence")
        table.add_column("tau", style="cyan", justify="right")
        table.add_column("h", style="cyan", justify="right")
        table.add_column("eps", style="magenta", justify="right")
        table.add_column("Norm", style="bold")
        table.add_column("Error", style="green", justify="right")
        table.add_column("EOC", style="blue", justify="right")
        table.add_column("Status")
        for row in rows:
            table.add_row(
                f"{row.tau:g}",
                f"{row.h:g}",
                f"{row.epsilon:g}",
                row.norm.value,
                _number(row.error),
                "-" if row.eoc is None else f"{row.eoc:.3f}",
                _STATUS_STYLE[row.status],
            )
        console.print(table)

    def print_conditions(self, rows: list[ConditionRow]) -> None:
        """Print a conditioning table."""
        if self.json_output:
            console.print_json(json.dumps([row.to_dict() for row in rows], default=str))
            return

        table = Table(title="Condition numbers")
        table.add_column("eps", style="magenta", justify="right")
        table.add_column("lambda", style="cyan", justify="right")
        table.add_column("kappa", style="green", justify="right")
        table.add_column("Status")
        for row in rows:
            table.add_row(
                f"{row.epsilon:g}", f"{row.lam:g}", _number(row.kappa), _STATUS_STYLE[row.status]
            )
        console.print(table)

    def print_checks(self, reports: list[ConsistencyReport]) -> None:
        """Print manufactured-solution consistency results."""
        if self.json_output:
            console.print_json(json.dumps([report.to_dict() for report in reports]))
            return

        table = Table(title="Manufactured solutions")
        table.add_column("Case", style="cyan", no_wrap=True)
        table.add_column("Forcing residual", justify="right")
        table.add_column("Derivative mismatch", justify="right")
        table.add_column("Result")
        for report in reports:
            table.add_row(
                report.case,
                _number(report.forcing_residual),
                _number(report.derivative_mismatch),
                "[green]✓ pass[/green]" if report.passed else "[red]✗ fail[/red]",
            )
        console.print(table)

    def print_success(self, message: str) -> None:
        """Print success message."""
        if not self.json_output:
            console.print(f"[green]✓[/green] {message}")

    def print_error(self, message: str) -> None:
        """Print error message."""
        if self.json_output:
            error_console.print_json(json.dumps({"error": message}))
        else:
            error_console.print(f"[red]✗[/red] {message}")


def experiment_options(func: Callable) -> Callable:
    """Options shared by the experiment subcommands."""
    options = [
        click.option(
            "--config",
            "config_file",
            type=click.Path(path_type=Path),
            help="Config file (key = value lines, or YAML)",
        ),
        click.option(
            "--case", type=click.Choice(sorted(DEFAULT_KINDS)), help="Manufactured solution"
        ),
        click.option(
            "--kind",
            type=click.Choice([k.value for k in ExperimentKind]),
            help="Override the kind inferred from the case",
        ),
        click.option("--T", "final_time", help="Final time"),
        click.option("--eps", help="epsilon, e.g. 0.25 or 2^-2 (a list for condsweep)"),
        click.option("--tau", help="Time steps, e.g. 2^-2..2^-5 or 0.25,0.125"),
        click.option("--nx", help="Spatial cell counts, e.g. 64 or 2^2..2^6"),
        click.option("--p", type=int, help="Nonlinearity exponent"),
        click.option("--lambda", "lambdas", help="Reaction coefficients, e.g. 1,1000,1000000"),
        click.option("--norms", help="Comma-separated norms, e.g. L2L2,H1L2"),
        click.option("--out", type=click.Path(path_type=Path), help="Output CSV file"),
        click.option("--workers", type=int, help="Levels solved in parallel"),
        click.option("--allow-ill-conditioned", is_flag=True, help="Run even if tau/eps > 2"),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def build_config(
    ctx: click.Context, command: str, config_file: Optional[Path], **flags: Any
) -> ExperimentConfig:
    """Merge the config file and flags; exits with status 2 on invalid input."""
    formatter: OutputFormatter = ctx.obj["formatter"]
    manager = ConfigManager()
    try:
        file_values = manager.load(config_file) if config_file else {}
        overrides = {
            "final_time": flags.get("final_time"),
            "case": flags.get("case"),
            "kind": flags.get("kind"),
            "tau": flags.get("tau"),
            "nx": flags.get("nx"),
            "p": flags.get("p"),
            "lambdas": flags.get("lambdas"),
            "norms": flags.get("norms"),
            "output": str(flags["out"]) if flags.get("out") else None,
            "workers": flags.get("workers"),
            "allow_ill_conditioned": flags.get("allow_ill_conditioned") or None,
        }
        eps_key = "epsilons" if command == "condsweep" else "epsilon"
        overrides[eps_key] = flags.get("eps")

        if command == "condsweep":
            overrides["kind"] = ExperimentKind.CONDSWEEP.value
        elif overrides["kind"] is None and "kind" not in file_values:
            case = overrides["case"] or file_values.get("case", "linreg")
            overrides["kind"] = DEFAULT_KINDS.get(case, ExperimentKind.LINEAR).value
        if command == "condsweep" and "taus" not in file_values and not flags.get("tau"):
            overrides["tau"] = "2^-6"
        cfg = manager.resolve(file_values, overrides)
        if cfg.kind not in (ExperimentKind.ODE, ExperimentKind.CONDSWEEP):
            build_case(cfg, cfg.levels()[0].epsilon)
        return cfg
    except ArgumentError as e:
        formatter.print_error(str(e))
        ctx.exit(2)


def _output_path(cfg: ExperimentConfig) -> Optional[Path]:
    return Path(cfg.output) if cfg.output else None


@click.group(invoke_without_command=True)
@click.option("--json", "json_output", is_flag=True, help="Output in JSON format")
@click.option("--verbose", "-v", is_flag=True, help="Log progress to stderr")
@click.version_option(version=__version__, prog_name="wavereg")
@click.pass_context
def cli(ctx: click.Context, json_output: bool, verbose: bool) -> None:
    """wavereg - space-time Galerkin solver for the regularised semilinear wave equation.

    Solve single problems, run convergence and conditioning sweeps, and
    check the manufactured solutions.
    """
    ctx.ensure_object(dict)
    if ctx.invoked_subcommand is None:
        click.echo(ctx.get_help())
        ctx.exit(2)
    configure_logging(verbose)
    ctx.obj["formatter"] = OutputFormatter(json_output)


@cli.command("solve")
@experiment_options
@click.pass_context
def solve(ctx: click.Context, config_file: Optional[Path], **flags: Any) -> None:
    """Solve one discretisation level and report its errors."""
    formatter: OutputFormatter = ctx.obj["formatter"]
    cfg = build_config(ctx, "solve", config_file, **flags)
    output = _output_path(cfg)

    if cfg.kind == ExperimentKind.CONDSWEEP:
        formatter.print_error("Use the condsweep command for conditioning sweeps")
        ctx.exit(2)

    if cfg.kind == ExperimentKind.ODE:
        try:
            knots, values = sample_ode(cfg, cfg.lambdas[0])
        except (SolverError, NumericError) as e:
            formatter.print_error(str(e))
            sys.exit(1)
        if output:
            ResultWriter(output).write_samples({"t": knots, "u": values})
            formatter.print_success(f"Wrote {len(knots)} samples to {output}")
        else:
            click.echo(ResultWriter.to_csv([], ["t", "u"]), nl=False)
            for t, u in zip(knots, values):
                click.echo(f"{t:.17g},{u:.17g}")
        return

    levels = cfg.levels()
    if len(levels) != 1:
        formatter.print_error("solve takes a single --tau and --nx; use converge for sweeps")
        ctx.exit(2)

    result = solve_level(cfg, levels[0])
    if result.status in (RowStatus.SOLVER_ERROR, RowStatus.NUMERIC_ERROR):
        formatter.print_error(result.message)
        sys.exit(1)

    formatter.print_errors(result.errors, result.newton)
    if output:
        case = CaseFactory.create(
            cfg.case, epsilon=levels[0].epsilon, final_time=cfg.final_time, p=cfg.p
        )
        ResultWriter(output).write_samples(sample_solution(result.solution, case))
        formatter.print_success(f"Wrote solution samples to {output}")
    if result.status != RowStatus.OK:
        formatter.print_error(result.message)
        sys.exit(1)


@cli.command("converge")
@experiment_options
@click.pass_context
def converge(ctx: click.Context, config_file: Optional[Path], **flags: Any) -> None:
    """Run a convergence sweep over tau and/or h."""
    formatter: OutputFormatter = ctx.obj["formatter"]
    cfg = build_config(ctx, "converge", config_file, **flags)
    try:
        rows = run_convergence(cfg)
    except ArgumentError as e:
        formatter.print_error(str(e))
        ctx.exit(2)

    _emit(formatter, cfg, rows, ConvergenceRow.FIELDS)
    if _output_path(cfg):
        formatter.print_convergence(rows)
    if any(row.status != RowStatus.OK for row in rows):
        formatter.print_error("Some levels failed; see the status column")
        sys.exit(1)


@cli.command("condsweep")
@experiment_options
@click.pass_context
def condsweep(ctx: click.Context, config_file: Optional[Path], **flags: Any) -> None:
    """Condition numbers of the time-only system against epsilon."""
    formatter: OutputFormatter = ctx.obj["formatter"]
    cfg = build_config(ctx, "condsweep", config_file, **flags)
    rows = run_condsweep(cfg)

    _emit(formatter, cfg, rows, ConditionRow.FIELDS)
    if _output_path(cfg):
        formatter.print_conditions(rows)
    if any(row.status != RowStatus.OK for row in rows):
        formatter.print_error("Some condition numbers could not be computed")
        sys.exit(1)


def _emit(formatter: OutputFormatter, cfg: ExperimentConfig, rows: list, fields: tuple) -> None:
    output = _output_path(cfg)
    if output is None:
        click.echo(ResultWriter.to_csv(rows, fields), nl=False)
        return
    paths = ResultWriter(output).write(rows, cfg)
    formatter.print_success("Wrote " + ", ".join(str(path) for path in paths))


@cli.command("check")
@click.option("--eps", type=float, default=0.25, show_default=True, help="epsilon")
@click.option("--T", "final_time", type=float, default=2.0, show_default=True, help="Final time")
@click.option("--samples", type=int, default=1000, show_default=True, help="Sample points")
@click.pass_context
def check(ctx: click.Context, eps: float, final_time: float, samples: int) -> None:
    """Check every manufactured solution against its forcing."""
    formatter: OutputFormatter = ctx.obj["formatter"]
    try:
        reports = [
            CaseFactory.create(name, epsilon=eps, final_time=final_time).check_consistency(
                n_samples=samples
            )
            for name in CaseFactory.available()
        ]
    except ArgumentError as e:
        formatter.print_error(str(e))
        ctx.exit(2)

    formatter.print_checks(reports)
    if not all(report.passed for report in reports):
        sys.exit(1)


def main() -> None:
    """Main entry point."""
    cli(obj={})


if __name__ == "__main__":
    main()
