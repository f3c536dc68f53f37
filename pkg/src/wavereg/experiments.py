"""Convergence and conditioning sweeps, and their CSV / plot-script output."""

import csv
import io
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from wavereg.assembly import (
    SpaceTimeQuadrature,
    SpaceTimeSolution,
    assemble_load,
    assemble_temporal,
    assemble_weighted_system,
)
from wavereg.config import ConfigManager
from wavereg.discretisation.spatial import build_space_mesh
from wavereg.discretisation.temporal import TimeGrid, spline_basis
from wavereg.errors import ArgumentError, NumericError, SolverError
from wavereg.manufactured import CaseFactory, ManufacturedCase
from wavereg.models import (
    ConditionRow,
    ConvergenceRow,
    ErrorReport,
    ExperimentConfig,
    ExperimentKind,
    NewtonReport,
    NormTag,
    RowStatus,
    SweepLevel,
)
from wavereg.norms import compute_errors, eoc
from wavereg.solvers import condition_number, solve_linear_pde, solve_nonlinear, solve_ode

logger = logging.getLogger(__name__)

Row = Union[ConvergenceRow, ConditionRow]


@dataclass
class LevelResult:
    """Solution of one sweep level with its diagnostics."""

    level: SweepLevel
    solution: Optional[SpaceTimeSolution] = None
    errors: Optional[ErrorReport] = None
    newton: Optional[NewtonReport] = None
    status: RowStatus = RowStatus.OK
    message: str = ""


def build_case(cfg: ExperimentConfig, epsilon: float) -> ManufacturedCase:
    """Manufactured case of the config at the given epsilon."""
    return CaseFactory.create(cfg.case, epsilon=epsilon, final_time=cfg.final_time, p=cfg.p)


def solve_level(cfg: ExperimentConfig, level: SweepLevel) -> LevelResult:
    """Assemble, solve and measure one level; failures are recorded, not raised."""
    result = LevelResult(level=level)
    logger.info("Level tau=%g, h=%g, eps=%g: starting", level.tau, level.h, level.epsilon)
    try:
        case = build_case(cfg, level.epsilon)
        grid = TimeGrid.from_step(cfg.final_time, level.tau)
        basis = spline_basis(grid)
        mesh = build_space_mesh(level.n_x)
        ws = assemble_weighted_system(basis, level.epsilon, mesh=mesh, n_q=cfg.n_q)
        quad = SpaceTimeQuadrature(basis, mesh, level.epsilon, cfg.n_q)
        rhs = assemble_load(case.forcing, basis, mesh=mesh, epsilon=level.epsilon, quad=quad)

        if case.p:
            result.solution, result.newton = solve_nonlinear(case.p, ws, rhs, cfg.newton, quad)
            if not result.newton.converged:
                result.status = RowStatus.NOT_CONVERGED
                result.message = result.newton.message or ""
        else:
            result.solution = solve_linear_pde(ws, rhs)

        result.errors = compute_errors(result.solution, case.exact, cfg.norms, quad=quad)
    except SolverError as exc:
        result.status, result.message = RowStatus.SOLVER_ERROR, str(exc)
    except NumericError as exc:
        result.status, result.message = RowStatus.NUMERIC_ERROR, str(exc)

    if result.status != RowStatus.OK:
        logger.warning("Level tau=%g, h=%g: %s", level.tau, level.h, result.message)
    else:
        logger.info("Level tau=%g, h=%g: done", level.tau, level.h)
    return result


def _map_levels(cfg: ExperimentConfig, levels: Sequence[SweepLevel]) -> list[LevelResult]:
    if cfg.workers == 1 or len(levels) == 1:
        return [solve_level(cfg, level) for level in levels]
    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        return list(pool.map(lambda level: solve_level(cfg, level), levels))


def run_convergence(cfg: ExperimentConfig) -> list[ConvergenceRow]:
    """Run every level of the sweep and tabulate errors with observed orders.

    Rows are ordered coarse to fine, then by norm; the order of a row is
    measured against the previous level's error in the same norm.

    Raises:
        ArgumentError: For kinds that are not convergence sweeps.
    """
    if cfg.kind in (ExperimentKind.CONDSWEEP, ExperimentKind.ODE):
        raise ArgumentError(f"'{cfg.kind.value}' is not a convergence sweep")

    levels = cfg.levels()
    p = build_case(cfg, levels[0].epsilon).p
    results = _map_levels(cfg, levels)
    rows: list[ConvergenceRow] = []
    for result in results:
        level = result.level
        newton = result.newton
        for tag in cfg.norms:
            error = result.errors[tag] if result.errors is not None else math.nan
            rows.append(
                ConvergenceRow(
                    kind=cfg.kind,
                    case=cfg.case,
                    tau=level.tau,
                    n_x=level.n_x,
                    epsilon=level.epsilon,
                    p=p,
                    norm=tag,
                    error=error,
                    newton_iterations=newton.iterations if newton else None,
                    converged=newton.converged if newton else None,
                    status=result.status,
                    message=result.message,
                )
            )

    rows.sort(key=ConvergenceRow.sort_key)
    _attach_orders(rows)
    return rows


def _attach_orders(rows: list[ConvergenceRow]) -> None:
    for tag in NormTag:
        series = [row for row in rows if row.norm == tag]
        for previous, current in zip(series[:-1], series[1:]):
            if math.isfinite(previous.error) and math.isfinite(current.error):
                current.eoc = eoc([previous.error, current.error])[0]


def run_condsweep(cfg: ExperimentConfig) -> list[ConditionRow]:
    """Condition numbers of eps^2 K~ + lam L~ for every configured (eps, lambda)."""
    tau = cfg.taus[0]
    grid = TimeGrid.from_step(cfg.final_time, tau)
    basis = spline_basis(grid)
    rows: list[ConditionRow] = []
    for epsilon in sorted(cfg.epsilons):
        ratio = tau / epsilon
        if ratio > 2.0:
            logger.info("eps=%g lies in the ill-conditioned range (tau/eps = %.3g)", epsilon, ratio)
        try:
            k_tilde, l_tilde, _ = assemble_temporal(basis, epsilon, cfg.n_q)
        except NumericError as exc:
            failure = str(exc)
            k_tilde = l_tilde = None
        for lam in cfg.lambdas:
            row = ConditionRow(
                tau=tau, final_time=cfg.final_time, epsilon=epsilon, lam=lam, kappa=math.nan
            )
            try:
                if k_tilde is None:
                    raise NumericError(failure)
                row.kappa = condition_number(epsilon**2 * k_tilde + lam * l_tilde)
                logger.info("eps=%g, lambda=%g: kappa=%.3e", epsilon, lam, row.kappa)
            except NumericError as exc:
                row.status, row.message = RowStatus.NUMERIC_ERROR, str(exc)
                logger.warning("eps=%g, lambda=%g: %s", epsilon, lam, exc)
            rows.append(row)
    rows.sort(key=ConditionRow.sort_key)
    return rows


def sample_ode(cfg: ExperimentConfig, lam: float) -> tuple[np.ndarray, np.ndarray]:
    """Solve the time-only problem with f = 1 and return (knots, values)."""
    grid = TimeGrid.from_step(cfg.final_time, cfg.taus[0])
    sigma = solve_ode(lam, cfg.epsilon, lambda t: np.ones_like(t), grid, cfg.n_q)
    knots = grid.knots
    return knots, spline_basis(grid).spline_eval(sigma, knots)


def sample_solution(
    solution: SpaceTimeSolution, case: Optional[ManufacturedCase] = None
) -> dict[str, np.ndarray]:
    """Discrete (and exact) values on the knots x nodes grid."""
    t = solution.grid.knots
    x = solution.mesh.nodes
    tt, xx = np.meshgrid(t, x, indexing="ij")
    columns = {"t": tt.ravel(), "x": xx.ravel(), "u_h": solution.evaluate_grid(x, t).ravel()}
    if case is not None:
        columns["u_exact"] = np.asarray(case.field()(xx, tt)).ravel()
    return columns


def _format(value: object) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


class ResultWriter:
    """Writes sweep tables, the resolved config and a plot script."""

    def __init__(self, output: Path):
        """Initialize the writer.

        Args:
            output: CSV path; sibling files share its stem.
        """
        self.output = output

    @staticmethod
    def to_csv(rows: Sequence[Row], fields: Sequence[str]) -> str:
        """Render rows as CSV text with 17 significant digits."""
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(fields)
        for row in rows:
            data = row.to_dict()
            writer.writerow([_format(data[name]) for name in fields])
        return buffer.getvalue()

    def write(self, rows: Sequence[Row], cfg: ExperimentConfig) -> list[Path]:
        """Write CSV, config YAML and plot script; returns the written paths."""
        if cfg.kind == ExperimentKind.CONDSWEEP:
            fields = ConditionRow.FIELDS
        else:
            fields = ConvergenceRow.FIELDS
        self.output.parent.mkdir(parents=True, exist_ok=True)
        self.output.write_text(self.to_csv(rows, fields))

        stem = self.output.with_suffix("")
        config_path = ConfigManager().export(cfg, Path(f"{stem}.config.yaml"))
        plot_path = Path(f"{stem}.plot.py")
        plot_path.write_text(self.plot_script(cfg.kind))
        return [self.output, config_path, plot_path]

    def write_samples(self, columns: dict[str, np.ndarray]) -> Path:
        """Write equally long sample columns (e.g. t, x, u_h) as CSV."""
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(list(columns))
        for values in zip(*(np.ravel(column) for column in columns.values())):
            writer.writerow([_format(float(value)) for value in values])
        self.output.parent.mkdir(parents=True, exist_ok=True)
        self.output.write_text(buffer.getvalue())
        return self.output

    def plot_script(self, kind: ExperimentKind) -> str:
        """Matplotlib script that plots the CSV next to it."""
        csv_name = self.output.name
        if kind == ExperimentKind.CONDSWEEP:
            body = _CONDITION_PLOT
        else:
            body = _CONVERGENCE_PLOT
        return _PLOT_HEADER.format(csv_name=csv_name) + body


_PLOT_HEADER = '''"""Plot {csv_name}. Generated by wavereg."""

import csv
from collections import defaultdict
from pathlib import Path

import matplotlib.pyplot as plt

rows = list(csv.DictReader(open(Path(__file__).with_name("{csv_name}"))))
'''

_CONVERGENCE_PLOT = '''
swept = "tau" if len({row["tau"] for row in rows}) > 1 else "h"
series = defaultdict(list)
for row in rows:
    if row["error"] not in ("", "nan"):
        series[row["norm"]].append((float(row[swept]), float(row["error"])))

for norm, points in series.items():
    xs, ys = zip(*sorted(points))
    plt.loglog(xs, ys, "o-", label=norm)
plt.xlabel(swept)
plt.ylabel("error")
plt.legend()
plt.grid(True, which="both")
plt.savefig(Path(__file__).with_suffix(".png"))
'''

_CONDITION_PLOT = '''
series = defaultdict(list)
for row in rows:
    if row["kappa"] not in ("", "nan"):
        series[row["lambda"]].append((float(row["epsilon"]), float(row["kappa"])))

for lam, points in series.items():
    xs, ys = zip(*sorted(points))
    plt.loglog(xs, ys, "o-", label=f"lambda = {lam}")
plt.xlabel("epsilon")
plt.ylabel("condition number")
plt.legend()
plt.grid(True, which="both")
plt.savefig(Path(__file__).with_suffix(".png"))
'''
