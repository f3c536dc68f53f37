"""wavereg data models: norms, experiment configuration and result rows."""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Optional

import numpy as np

from wavereg.errors import ArgumentError

logger = logging.getLogger(__name__)

# Above this tau/eps ratio the rescaled temporal system is ill-conditioned.
ILL_CONDITIONED_RATIO = 2.0

Field = Callable[[np.ndarray, np.ndarray], np.ndarray]


class NormTag(Enum):
    """Error norms reported by the convergence studies."""

    L2L2 = "L2L2"
    H1L2 = "H1L2"
    H2L2 = "H2L2"
    L2H1 = "L2H1"
    ENERGY = "Energy"
    SEMINORM_RSS = "SeminormRSS"  # root-sum-of-squares of H1L2, H2L2 and L2H1

    @classmethod
    def parse(cls, text: str) -> "NormTag":
        """Look a tag up by value, ignoring case."""
        for tag in cls:
            if tag.value.lower() == text.strip().lower():
                return tag
        valid = ", ".join(tag.value for tag in cls)
        raise ArgumentError(f"Unknown norm '{text}'. Valid norms: {valid}")


DEFAULT_NORMS = (NormTag.L2L2, NormTag.H1L2, NormTag.H2L2, NormTag.L2H1, NormTag.SEMINORM_RSS)


class ExperimentKind(Enum):
    """What a run solves."""

    ODE = "ode"
    LINEAR = "linear"
    NONLINEAR = "nonlinear"
    COUPLED = "coupled"  # eps and h tied to tau
    CONDSWEEP = "condsweep"


class Regime(Enum):
    """Operator a manufactured pair satisfies."""

    REGULARISED = "regularised"  # eps^2 u_tttt - 2 eps u_ttt + u_tt - u_xx + ...
    WAVE = "wave"  # u_tt - u_xx + ...


class RowStatus(Enum):
    """Outcome of one sweep level."""

    OK = "ok"
    NOT_CONVERGED = "not_converged"
    SOLVER_ERROR = "solver_error"
    NUMERIC_ERROR = "numeric_error"


@dataclass(frozen=True)
class ExactSolution:
    """Reference field and the derivatives needed by the error norms."""

    value: Field
    dt: Optional[Field] = None
    dtt: Optional[Field] = None
    dx: Optional[Field] = None

    def derivative(self, name: str) -> Field:
        """Return the callable for 'value', 'dt', 'dtt' or 'dx'.

        Raises:
            ArgumentError: If the derivative is not provided.
        """
        if name not in ("value", "dt", "dtt", "dx"):
            raise ArgumentError(f"Unknown derivative '{name}'")
        func = getattr(self, name)
        if func is None:
            raise ArgumentError(f"Exact solution has no '{name}' derivative")
        return func


@dataclass
class NewtonConfig:
    """Stopping rule for the Newton iteration."""

    tol: float = 1e-10
    max_iter: int = 30

    def __post_init__(self) -> None:
        if not self.tol > 0:
            raise ArgumentError(f"Newton tolerance must be positive, got {self.tol}")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ArgumentError(f"Newton max_iter must be at least 1, got {self.max_iter}")
        self.max_iter = int(self.max_iter)

    def to_dict(self) -> dict[str, Any]:
        return {"tol": self.tol, "max_iter": self.max_iter}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "NewtonConfig":
        return cls(tol=float(data.get("tol", 1e-10)), max_iter=int(data.get("max_iter", 30)))


@dataclass
class NewtonReport:
    """Iteration history of one nonlinear solve."""

    iterations: int = 0
    update_norms: list[float] = field(default_factory=list)
    converged: bool = False
    message: Optional[str] = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "iterations": self.iterations,
            "update_norms": list(self.update_norms),
            "converged": self.converged,
            "message": self.message,
        }


@dataclass
class ErrorReport:
    """Error norms of one discrete solution."""

    errors: dict[NormTag, float]
    tau: float
    h: float
    epsilon: float
    p: int = 0
    # Weighted squared pieces behind the energy norm.
    weighted_parts: dict[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for tag, value in self.errors.items():
            if not value >= 0:
                raise ArgumentError(f"Error norm {tag.value} must be nonnegative, got {value}")

    def __getitem__(self, tag: NormTag) -> float:
        return self.errors[tag]

    def to_dict(self) -> dict[str, Any]:
        return {
            "tau": self.tau,
            "h": self.h,
            "epsilon": self.epsilon,
            "p": self.p,
            "errors": {tag.value: value for tag, value in self.errors.items()},
        }


@dataclass(frozen=True)
class SweepLevel:
    """One discretisation level of a sweep."""

    tau: float
    n_x: int
    epsilon: float

    @property
    def h(self) -> float:
        return 1.0 / self.n_x


def dyadic_range(start: int, stop: int) -> list[float]:
    """2^start, ..., 2^stop stepping towards stop."""
    step = 1 if stop >= start else -1
    return [2.0**k for k in range(start, stop + step, step)]


@dataclass
class ExperimentConfig:
    """Everything needed to reproduce a run."""

    kind: ExperimentKind = ExperimentKind.LINEAR
    case: str = "linreg"
    final_time: float = 2.0
    epsilon: float = 0.25
    epsilons: list[float] = field(default_factory=lambda: dyadic_range(-12, -1))
    taus: list[float] = field(default_factory=lambda: [2.0**-5])
    nxs: list[int] = field(default_factory=lambda: [64])
    p: Optional[int] = None
    lambdas: list[float] = field(default_factory=lambda: [1.0])
    norms: list[NormTag] = field(default_factory=lambda: list(DEFAULT_NORMS))
    newton: NewtonConfig = field(default_factory=NewtonConfig)
    output: Optional[str] = None
    allow_ill_conditioned: bool = False
    n_q: int = 12
    workers: int = 1
    eps_factor: float = 0.5
    eps_power: float = 1.0
    h_power: float = 0.5

    def __post_init__(self) -> None:
        """Validate the configuration."""
        if not self.final_time > 0:
            raise ArgumentError(f"T must be positive, got {self.final_time}")
        for name in ("taus", "nxs", "lambdas", "norms", "epsilons"):
            if not getattr(self, name):
                raise ArgumentError(f"'{name}' must not be empty")
        if any(not tau > 0 for tau in self.taus):
            raise ArgumentError("Time steps must be positive")
        for tau in self.taus:
            n_t = round(self.final_time / tau)
            if n_t < 4 or abs(n_t * tau - self.final_time) > 1e-9 * self.final_time:
                raise ArgumentError(
                    f"tau={tau} must divide T={self.final_time} into at least 4 intervals"
                )
        if any(int(n) != n or n < 2 for n in self.nxs):
            raise ArgumentError("Spatial cell counts must be integers >= 2")
        if any(not lam >= 0 for lam in self.lambdas):
            raise ArgumentError("Reaction coefficients must be nonnegative")
        if not self.epsilon > 0 or any(not eps > 0 for eps in self.epsilons):
            raise ArgumentError("epsilon must be positive")
        if self.p is not None and self.p != 0 and (int(self.p) != self.p or self.p < 3):
            raise ArgumentError(f"Exponent p must be an integer >= 3, got {self.p}")
        if self.workers < 1:
            raise ArgumentError(f"workers must be at least 1, got {self.workers}")
        if not self.eps_factor > 0 or not self.eps_power > 0 or not self.h_power > 0:
            raise ArgumentError("Coupling rule parameters must be positive")
        self.nxs = [int(n) for n in self.nxs]
        if (
            self.kind in (ExperimentKind.LINEAR, ExperimentKind.NONLINEAR)
            and len(set(self.taus)) > 1
            and len(set(self.nxs)) > 1
        ):
            raise ArgumentError(
                "Sweep either tau or nx, not both: observed orders need one refined axis"
            )
        if self.kind != ExperimentKind.CONDSWEEP:
            self._check_envelope()

    def _check_envelope(self) -> None:
        for level in self.levels():
            ratio = level.tau / level.epsilon
            if ratio <= ILL_CONDITIONED_RATIO:
                continue
            message = (
                f"tau/eps = {ratio:.3g} exceeds {ILL_CONDITIONED_RATIO:g} "
                f"(tau={level.tau:g}, eps={level.epsilon:g})"
            )
            if not self.allow_ill_conditioned:
                raise ArgumentError(message + "; pass allow_ill_conditioned to run anyway")
            logger.warning("%s; the system may be ill-conditioned", message)

    def levels(self) -> list[SweepLevel]:
        """Discretisation levels, coarse to fine."""
        taus = sorted(self.taus, reverse=True)
        if self.kind == ExperimentKind.COUPLED:
            return [
                SweepLevel(
                    tau=tau,
                    n_x=max(2, int(round(tau ** (-self.h_power)))),
                    epsilon=self.eps_factor * tau**self.eps_power,
                )
                for tau in taus
            ]
        if self.kind in (ExperimentKind.ODE, ExperimentKind.CONDSWEEP):
            return [SweepLevel(tau=tau, n_x=self.nxs[0], epsilon=self.epsilon) for tau in taus]
        return [
            SweepLevel(tau=tau, n_x=n_x, epsilon=self.epsilon)
            for tau in taus
            for n_x in sorted(self.nxs)
        ]

    def to_dict(self) -> dict[str, Any]:
        """Convert the config to plain data."""
        return {
            "kind": self.kind.value,
            "case": self.case,
            "final_time": self.final_time,
            "epsilon": self.epsilon,
            "epsilons": list(self.epsilons),
            "taus": list(self.taus),
            "nxs": list(self.nxs),
            "p": self.p,
            "lambdas": list(self.lambdas),
            "norms": [tag.value for tag in self.norms],
            "newton": self.newton.to_dict(),
            "output": self.output,
            "allow_ill_conditioned": self.allow_ill_conditioned,
            "n_q": self.n_q,
            "workers": self.workers,
            "eps_factor": self.eps_factor,
            "eps_power": self.eps_power,
            "h_power": self.h_power,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ExperimentConfig":
        """Create a config from plain data, filling defaults."""
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ArgumentError(f"Unknown configuration keys: {', '.join(sorted(unknown))}")

        values = dict(data)
        kind = values.get("kind")
        if isinstance(kind, str):
            try:
                values["kind"] = ExperimentKind(kind.lower())
            except ValueError:
                valid = ", ".join(k.value for k in ExperimentKind)
                raise ArgumentError(f"Unknown kind '{kind}'. Valid kinds: {valid}") from None

        for name in ("taus", "epsilons", "lambdas"):
            if name in values:
                values[name] = [float(v) for v in _as_list(values[name])]
        if "nxs" in values:
            values["nxs"] = [_as_int(v, "nx") for v in _as_list(values["nxs"])]
        if "norms" in values:
            values["norms"] = [
                v if isinstance(v, NormTag) else NormTag.parse(str(v))
                for v in _as_list(values["norms"])
            ]
        newton = values.get("newton")
        if isinstance(newton, dict):
            values["newton"] = NewtonConfig.from_dict(newton)
        for name in ("final_time", "epsilon", "eps_factor", "eps_power", "h_power"):
            if name in values:
                values[name] = float(values[name])
        for name in ("n_q", "workers"):
            if name in values:
                values[name] = _as_int(values[name], name)
        if values.get("p") is not None:
            values["p"] = _as_int(values["p"], "p")
        if "allow_ill_conditioned" in values:
            values["allow_ill_conditioned"] = bool(values["allow_ill_conditioned"])

        return cls(**values)


def _as_list(value: Any) -> list[Any]:
    if isinstance(value, (list, tuple)):
        return list(value)
    return [value]


def _as_int(value: Any, name: str) -> int:
    number = float(value)
    if not math.isfinite(number) or number != int(number):
        raise ArgumentError(f"'{name}' must be an integer, got {value!r}")
    return int(number)


@dataclass
class ConvergenceRow:
    """One (level, norm) line of a convergence table."""

    FIELDS = (
        "kind",
        "case",
        "tau",
        "h",
        "nx",
        "epsilon",
        "p",
        "norm",
        "error",
        "eoc",
        "newton_iterations",
        "converged",
        "status",
        "message",
    )

    kind: ExperimentKind
    case: str
    tau: float
    n_x: int
    epsilon: float
    p: int
    norm: NormTag
    error: float
    eoc: Optional[float] = None
    newton_iterations: Optional[int] = None
    converged: Optional[bool] = None
    status: RowStatus = RowStatus.OK
    message: str = ""

    @property
    def h(self) -> float:
        return 1.0 / self.n_x

    def sort_key(self) -> tuple[float, float, float, int]:
        tags = list(NormTag)
        return (-self.tau, -self.h, -self.epsilon, tags.index(self.norm))

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind.value,
            "case": self.case,
            "tau": self.tau,
            "h": self.h,
            "nx": self.n_x,
            "epsilon": self.epsilon,
            "p": self.p,
            "norm": self.norm.value,
            "error": self.error,
            "eoc": self.eoc,
            "newton_iterations": self.newton_iterations,
            "converged": self.converged,
            "status": self.status.value,
            "message": self.message,
        }


@dataclass
class ConditionRow:
    """Condition number of the rescaled temporal matrix for one (eps, lambda)."""

    FIELDS = ("tau", "T", "epsilon", "lambda", "kappa", "status", "message")

    tau: float
    final_time: float
    epsilon: float
    lam: float
    kappa: float
    status: RowStatus = RowStatus.OK
    message: str = ""

    def sort_key(self) -> tuple[float, float]:
        return (self.epsilon, self.lam)

    def to_dict(self) -> dict[str, Any]:
        return {
            "tau": self.tau,
            "T": self.final_time,
            "epsilon": self.epsilon,
            "lambda": self.lam,
            "kappa": self.kappa,
            "status": self.status.value,
            "message": self.message,
        }
