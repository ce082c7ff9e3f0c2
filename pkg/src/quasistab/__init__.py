"""Numerical laboratory for exponential stability of normally stable
equilibria of quasilinear parabolic problems."""

from . import errors
from .spectral import (
    MultiplierSymbol,
    PeriodicGrid,
    SpectralField,
    apply_multiplier,
    integral_mean,
    project_low_modes,
    sobolev_norm,
)

__version__ = "0.1.0"

__all__ = [
    "errors",
    "MultiplierSymbol",
    "PeriodicGrid",
    "SpectralField",
    "apply_multiplier",
    "integral_mean",
    "project_low_modes",
    "sobolev_norm",
]
