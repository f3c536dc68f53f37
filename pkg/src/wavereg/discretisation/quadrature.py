"""Gauss-Legendre rules and exponentially weighted time integrals.

Integrals of the form int e^{-t/eps} g(t) dt underflow for small eps once t
is of order one. They are therefore always computed relative to a reference
time t_s, i.e. as int e^{-(t - t_s)/eps} g(t) dt = e^{t_s/eps} int e^{-t/eps} g(t) dt,
and the factor e^{t_s/eps} is carried symbolically by the caller.
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Optional, Union

import numpy as np

from wavereg.errors import ArgumentError, NumericError

logger = logging.getLogger(__name__)

MAX_GAUSS_POINTS = 64
DEFAULT_TIME_POINTS = 12
# exp() overflows just above 709.
MAX_EXPONENT = 700.0

Integrand = Callable[[np.ndarray], np.ndarray]


@lru_cache(maxsize=None)
def _leggauss(n_q: int) -> tuple[np.ndarray, np.ndarray]:
    nodes, weights = np.polynomial.legendre.leggauss(n_q)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def gauss_rule(n_q: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [-1, 1].

    Args:
        n_q: Number of points, 1..64. Exact for polynomials of degree 2*n_q - 1.

    Returns:
        Tuple of (nodes, weights) arrays.

    Raises:
        ArgumentError: If n_q is not an integer in the supported range.
    """
    if isinstance(n_q, bool) or not isinstance(n_q, (int, np.integer)):
        raise ArgumentError(f"Number of Gauss points must be an integer, got {n_q!r}")
    if not 1 <= n_q <= MAX_GAUSS_POINTS:
        raise ArgumentError(f"Number of Gauss points must be in 1..{MAX_GAUSS_POINTS}, got {n_q}")
    return _leggauss(int(n_q))


def map_rule(
    a: float, b: float, nodes: np.ndarray, weights: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Affinely map a rule from [-1, 1] onto [a, b]."""
    half = 0.5 * (b - a)
    return half * nodes + 0.5 * (a + b), half * weights


@dataclass(frozen=True)
class WeightedRule:
    """Gauss rule per knot interval together with the regularisation parameter."""

    epsilon: float
    n_q: int = DEFAULT_TIME_POINTS

    def __post_init__(self) -> None:
        if not np.isfinite(self.epsilon) or self.epsilon <= 0:
            raise ArgumentError(f"epsilon must be positive, got {self.epsilon}")
        gauss_rule(self.n_q)
        if self.n_q < 8:
            raise ArgumentError(f"Weighted time rule needs at least 8 points, got {self.n_q}")

    @property
    def nodes(self) -> np.ndarray:
        return gauss_rule(self.n_q)[0]

    @property
    def weights(self) -> np.ndarray:
        return gauss_rule(self.n_q)[1]

    def weight(self, t: Union[float, np.ndarray], shift: Union[float, np.ndarray]) -> np.ndarray:
        """Shifted weight e^{-(t - shift)/eps}.

        Raises:
            NumericError: If an exponent would overflow.
        """
        exponent = -(np.asarray(t, dtype=float) - np.asarray(shift, dtype=float)) / self.epsilon
        if exponent.size and np.max(exponent) > MAX_EXPONENT:
            raise NumericError(
                f"Weight exponent {np.max(exponent):.3e} overflows; shift is too far ahead of t"
            )
        return np.exp(exponent)

    def integrate(
        self,
        g: Integrand,
        a: float,
        b: float,
        shift: float,
        breakpoints: Optional[Iterable[float]] = None,
    ) -> Union[float, np.ndarray]:
        """Shorthand for :func:`shifted_weighted_integral` with this rule."""
        return shifted_weighted_integral(g, a, b, shift, self, breakpoints)


def shifted_weighted_integral(
    g: Integrand,
    a: float,
    b: float,
    shift: float,
    rule: WeightedRule,
    breakpoints: Optional[Iterable[float]] = None,
) -> Union[float, np.ndarray]:
    """Compute int_a^b e^{-(t - shift)/eps} g(t) dt.

    The interval is split at every breakpoint inside (a, b) and the Gauss rule
    is applied on each piece. ``g`` is called with an array of times and may
    return extra leading axes (the time axis must be last), in which case an
    array of integrals is returned.

    Args:
        g: Vectorised integrand.
        a: Lower limit.
        b: Upper limit.
        shift: Reference time t_s.
        rule: Rule carrying epsilon and the number of points per piece.
        breakpoints: Points where g is not smooth, typically the knots.

    Returns:
        The shifted integral (float, or array for vector-valued integrands).

    Raises:
        ArgumentError: If a > b.
        NumericError: If the integrand is not finite somewhere.
    """
    if a > b:
        raise ArgumentError(f"Integration limits out of order: a={a} > b={b}")
    if a == b:
        return 0.0

    cuts = [a]
    if breakpoints is not None:
        cuts.extend(sorted(float(p) for p in breakpoints if a < p < b))
    cuts.append(b)

    total: Union[float, np.ndarray] = 0.0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        t, w = map_rule(lo, hi, rule.nodes, rule.weights)
        values = np.asarray(g(t), dtype=float)
        if values.ndim == 0:
            values = np.full(t.shape, float(values))
        bad = ~np.isfinite(values)
        if np.any(bad):
            t_bad = np.broadcast_to(t, values.shape)[bad][0]
            raise NumericError("Non-finite integrand value", location=f"t={t_bad:.6g}")
        total = total + values @ (w * rule.weight(t, shift))

    if np.ndim(total) == 0:
        return float(total)
    return total
