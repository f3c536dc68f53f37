"""Manufactured solutions for convergence studies."""

from wavereg.manufactured.base import CaseFactory, ConsistencyReport, ManufacturedCase
from wavereg.manufactured.cases import (
    manufactured_linear_regularised,
    manufactured_nonlinear_regularised,
    manufactured_wave_p4,
)

__all__ = [
    "CaseFactory",
    "ConsistencyReport",
    "ManufacturedCase",
    "manufactured_linear_regularised",
    "manufactured_nonlinear_regularised",
    "manufactured_wave_p4",
]
