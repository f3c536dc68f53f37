"""Closed-form manufactured pairs used by the convergence studies."""

from typing import Optional

import numpy as np

from wavereg.errors import ArgumentError
from wavereg.manufactured.base import CaseFactory, Factor, ManufacturedCase
from wavereg.models import Regime

PI = np.pi
DEFAULT_NONLINEAR_EXPONENT = 6
WAVE_EXPONENT = 4

SpaceFactors = tuple[Factor, Factor, Factor]
TimeFactors = tuple[Factor, Factor, Factor, Factor, Factor]


def _sine_space(k: int) -> SpaceFactors:
    """sin(k pi x) and its first two derivatives."""
    w = k * PI
    return (
        lambda x: np.sin(w * x),
        lambda x: w * np.cos(w * x),
        lambda x: -(w**2) * np.sin(w * x),
    )


def _regularised_time(final_time: float) -> TimeFactors:
    """g(t) = (T - t)^2 sin^2(2 pi t) and four derivatives via the product rule.

    With a = (T - t)^2 and b = sin^2(2 pi t) = (1 - cos 4 pi t)/2.
    """
    T = final_time

    def a(t: np.ndarray, d: int) -> np.ndarray:
        if d == 0:
            return (T - t) ** 2
        if d == 1:
            return -2.0 * (T - t)
        if d == 2:
            return 2.0 * np.ones_like(t)
        return np.zeros_like(t)

    def b(t: np.ndarray, d: int) -> np.ndarray:
        s, c = np.sin(4 * PI * t), np.cos(4 * PI * t)
        return [
            0.5 * (1.0 - c),
            2 * PI * s,
            8 * PI**2 * c,
            -32 * PI**3 * s,
            -128 * PI**4 * c,
        ][d]

    binomial = ((1,), (1, 1), (1, 2, 1), (1, 3, 3, 1), (1, 4, 6, 4, 1))

    def derivative(n: int) -> Factor:
        def g(t: np.ndarray) -> np.ndarray:
            t = np.asarray(t, dtype=float)
            terms = [coeff * a(t, m) * b(t, n - m) for m, coeff in enumerate(binomial[n])]
            return np.sum(terms, axis=0)

        return g

    return (derivative(0), derivative(1), derivative(2), derivative(3), derivative(4))


def _check_epsilon(epsilon: Optional[float]) -> float:
    if epsilon is None or not epsilon > 0:
        raise ArgumentError(f"epsilon must be positive, got {epsilon}")
    return float(epsilon)


def manufactured_linear_regularised(epsilon: float, final_time: float = 2.0) -> ManufacturedCase:
    """u = sin(2 pi x)(T - t)^2 sin^2(2 pi t) for eps^2 u_tttt - 2 eps u_ttt + u_tt - u_xx = f."""
    eps = _check_epsilon(epsilon)
    space = _sine_space(2)
    time = _regularised_time(final_time)

    def forcing(x: np.ndarray, t: np.ndarray) -> np.ndarray:
        temporal = eps**2 * time[4](t) - 2.0 * eps * time[3](t) + time[2](t)
        temporal = temporal + 4 * PI**2 * time[0](t)
        return np.sin(2 * PI * x) * temporal

    return ManufacturedCase(
        name="linreg",
        regime=Regime.REGULARISED,
        space=space,
        time=time,
        forcing=forcing,
        final_time=final_time,
        epsilon=eps,
    )


def manufactured_nonlinear_regularised(
    epsilon: float, final_time: float = 2.0, p: int = DEFAULT_NONLINEAR_EXPONENT
) -> ManufacturedCase:
    """Same field as the linear case, forcing extended by (p/2)|u|^{p-2} u."""
    if int(p) != p or p < 3:
        raise ArgumentError(f"Exponent p must be an integer >= 3, got {p}")
    linear = manufactured_linear_regularised(epsilon, final_time)
    u = linear.field()

    def forcing(x: np.ndarray, t: np.ndarray) -> np.ndarray:
        value = u(x, t)
        return linear.forcing(x, t) + 0.5 * p * np.abs(value) ** (p - 2) * value

    return ManufacturedCase(
        name="nonlinreg",
        regime=Regime.REGULARISED,
        space=linear.space,
        time=linear.time,
        forcing=forcing,
        final_time=final_time,
        epsilon=linear.epsilon,
        p=int(p),
    )


def manufactured_wave_p4(final_time: float = 2.0) -> ManufacturedCase:
    """u = sin(pi x) t sin(pi t) solving u_tt - u_xx + 2u^3 = f with trivial data."""
    time = (
        lambda t: t * np.sin(PI * t),
        lambda t: np.sin(PI * t) + PI * t * np.cos(PI * t),
        lambda t: 2 * PI * np.cos(PI * t) - PI**2 * t * np.sin(PI * t),
        lambda t: -3 * PI**2 * np.sin(PI * t) - PI**3 * t * np.cos(PI * t),
        lambda t: -4 * PI**3 * np.cos(PI * t) + PI**4 * t * np.sin(PI * t),
    )

    def forcing(x: np.ndarray, t: np.ndarray) -> np.ndarray:
        return 2 * PI * np.sin(PI * x) * np.cos(PI * t) + 2 * (
            np.sin(PI * x) ** 3 * t**3 * np.sin(PI * t) ** 3
        )

    return ManufacturedCase(
        name="wave4",
        regime=Regime.WAVE,
        space=_sine_space(1),
        time=time,
        forcing=forcing,
        final_time=final_time,
        p=WAVE_EXPONENT,
    )


def _fixed_exponent(name: str, p: Optional[int], allowed: tuple[int, ...]) -> None:
    if p is not None and p not in allowed:
        raise ArgumentError(f"Case '{name}' is built for p = {allowed[-1]}, got p = {p}")


def _build_linear(
    epsilon: Optional[float], final_time: float, p: Optional[int]
) -> ManufacturedCase:
    _fixed_exponent("linreg", p, (0,))
    return manufactured_linear_regularised(_check_epsilon(epsilon), final_time)


def _build_nonlinear(
    epsilon: Optional[float], final_time: float, p: Optional[int]
) -> ManufacturedCase:
    exponent = DEFAULT_NONLINEAR_EXPONENT if p is None else p
    return manufactured_nonlinear_regularised(_check_epsilon(epsilon), final_time, exponent)


def _build_wave(
    epsilon: Optional[float], final_time: float, p: Optional[int]
) -> ManufacturedCase:
    _fixed_exponent("wave4", p, (WAVE_EXPONENT,))
    return manufactured_wave_p4(final_time)


CaseFactory.register("linreg", _build_linear)
CaseFactory.register("nonlinreg", _build_nonlinear)
CaseFactory.register("wave4", _build_wave)
