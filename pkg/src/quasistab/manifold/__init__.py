"""Finite-dimensional testbed for normally stable equilibrium manifolds."""

from .chart import EquilibriumChart, ReducedTrajectory, build_graph_chart, reduce_trajectory
from .flow import Trajectory, simulate
from .linear import (
    NormalStabilityReport,
    SpectralSplit,
    check_normal_stability,
    linearize_at,
    spectral_split,
)
from .synth import SyntheticSystem, closed_form_system, synthesize_normally_stable
from .system import QuasilinearSystem, polynomial_system, system_from_json

__all__ = [
    "EquilibriumChart",
    "NormalStabilityReport",
    "QuasilinearSystem",
    "ReducedTrajectory",
    "SpectralSplit",
    "SyntheticSystem",
    "Trajectory",
    "build_graph_chart",
    "check_normal_stability",
    "closed_form_system",
    "linearize_at",
    "polynomial_system",
    "reduce_trajectory",
    "simulate",
    "spectral_split",
    "synthesize_normally_stable",
    "system_from_json",
]
