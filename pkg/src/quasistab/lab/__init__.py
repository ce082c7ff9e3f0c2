"""Decay fitting, limit identification, scenarios and acceptance checks."""

from .decay import DecayFit, fit_decay
from .diagnostics import identify_limit, weighted_norm_track

__all__ = ["DecayFit", "fit_decay", "identify_limit", "weighted_norm_track"]
