"""Manufactured solution pairs and the registry that builds them by name."""

import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.stats import qmc

from wavereg.errors import ArgumentError
from wavereg.models import ExactSolution, Regime

logger = logging.getLogger(__name__)

Factor = Callable[[np.ndarray], np.ndarray]
Field = Callable[[np.ndarray, np.ndarray], np.ndarray]

CONSISTENCY_TOLERANCE = 1e-6


@dataclass
class ConsistencyReport:
    """Outcome of sampling a manufactured pair against its operator."""

    case: str
    n_samples: int
    forcing_residual: float  # max |operator(u) - f|
    derivative_mismatch: float  # worst relative FD disagreement
    tolerance: float = CONSISTENCY_TOLERANCE

    @property
    def passed(self) -> bool:
        worst = max(self.forcing_residual, self.derivative_mismatch)
        return worst <= self.tolerance

    def to_dict(self) -> dict:
        return {
            "case": self.case,
            "n_samples": self.n_samples,
            "forcing_residual": self.forcing_residual,
            "derivative_mismatch": self.derivative_mismatch,
            "passed": self.passed,
        }


@dataclass(frozen=True)
class ManufacturedCase:
    """Separable exact field u = X(x) g(t) with a hand-coded forcing.

    ``space`` holds (X, X', X'') and ``time`` holds g and its first four
    derivatives. The nonlinearity, when p > 0, is (p/2)|u|^{p-2} u.
    """

    name: str
    regime: Regime
    space: tuple[Factor, Factor, Factor]
    time: tuple[Factor, Factor, Factor, Factor, Factor]
    forcing: Field
    final_time: float
    epsilon: Optional[float] = None
    p: int = 0

    def __post_init__(self) -> None:
        if self.regime == Regime.REGULARISED and not (self.epsilon or 0) > 0:
            raise ArgumentError("Regularised cases need a positive epsilon")
        if self.p and self.p < 3:
            raise ArgumentError(f"Exponent p must be >= 3, got {self.p}")

    def field(self, dt: int = 0, dx: int = 0) -> Field:
        """Callable for d^dt/dt^dt d^dx/dx^dx u."""
        space, time = self.space[dx], self.time[dt]
        return lambda x, t: space(x) * time(t)

    @property
    def exact(self) -> ExactSolution:
        return ExactSolution(
            value=self.field(),
            dt=self.field(dt=1),
            dtt=self.field(dt=2),
            dx=self.field(dx=1),
        )

    def operator(self, x: np.ndarray, t: np.ndarray) -> np.ndarray:
        """Apply the declared differential operator to the closed-form field."""
        u = self.field()(x, t)
        result = self.field(dt=2)(x, t) - self.field(dx=2)(x, t)
        if self.regime == Regime.REGULARISED:
            eps = self.epsilon
            result = result + eps**2 * self.field(dt=4)(x, t) - 2.0 * eps * self.field(dt=3)(x, t)
        if self.p:
            result = result + 0.5 * self.p * np.abs(u) ** (self.p - 2) * u
        return result

    def check_consistency(
        self,
        n_samples: int = 1000,
        seed: int = 0,
        step: float = 1e-3,
        tolerance: float = CONSISTENCY_TOLERANCE,
    ) -> ConsistencyReport:
        """Check the forcing and the closed-form derivatives at quasi-random points.

        Each derivative is compared with a fourth-order central difference of
        the one below it, relative to its largest sampled magnitude.
        """
        sampler = qmc.Halton(d=2, seed=seed)
        points = sampler.random(n_samples)
        margin = 2.0 * step
        x = margin + points[:, 0] * (1.0 - 2.0 * margin)
        t = margin + points[:, 1] * (self.final_time - 2.0 * margin)

        forcing_residual = float(np.max(np.abs(self.operator(x, t) - self.forcing(x, t))))

        def central(func: Field, along_t: bool) -> np.ndarray:
            def shifted(k: int) -> np.ndarray:
                if along_t:
                    return func(x, t + k * step)
                return func(x + k * step, t)

            return (-shifted(2) + 8.0 * shifted(1) - 8.0 * shifted(-1) + shifted(-2)) / (
                12.0 * step
            )

        pairs = [(self.field(dt=k), self.field(dt=k - 1), True) for k in range(1, 5)]
        pairs += [(self.field(dx=k), self.field(dx=k - 1), False) for k in (1, 2)]
        mismatch = 0.0
        for closed, lower, along_t in pairs:
            values = closed(x, t)
            scale = max(1.0, float(np.max(np.abs(values))))
            error = float(np.max(np.abs(central(lower, along_t) - values)))
            mismatch = max(mismatch, error / scale)

        report = ConsistencyReport(
            case=self.name,
            n_samples=n_samples,
            forcing_residual=forcing_residual,
            derivative_mismatch=mismatch,
            tolerance=tolerance,
        )
        logger.info(
            "Consistency of %s: forcing residual %.2e, derivative mismatch %.2e",
            self.name,
            forcing_residual,
            mismatch,
        )
        return report


CaseBuilder = Callable[..., ManufacturedCase]


class CaseFactory:
    """Registry of manufactured cases by name."""

    _builders: dict[str, CaseBuilder] = {}

    @classmethod
    def register(cls, name: str, builder: CaseBuilder) -> None:
        """Register a builder taking (epsilon, final_time, p) keywords.

        Args:
            name: Case name used on the command line.
            builder: Callable returning a ManufacturedCase.
        """
        cls._builders[name] = builder

    @classmethod
    def create(
        cls,
        name: str,
        epsilon: Optional[float] = None,
        final_time: float = 2.0,
        p: Optional[int] = None,
    ) -> ManufacturedCase:
        """Build a registered case.

        Raises:
            ArgumentError: If no case has that name.
        """
        if name not in cls._builders:
            valid = ", ".join(sorted(cls._builders))
            raise ArgumentError(f"Unknown case '{name}'. Valid cases: {valid}")
        return cls._builders[name](epsilon=epsilon, final_time=final_time, p=p)

    @classmethod
    def available(cls) -> list[str]:
        return sorted(cls._builders)
