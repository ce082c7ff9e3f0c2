"""Reusable experiment pipelines shared by scenarios and the acceptance suite."""

from dataclasses import dataclass

import numpy as np

from ..manifold import (
    QuasilinearSystem,
    build_graph_chart,
    check_normal_stability,
    closed_form_system,
    linearize_at,
    reduce_trajectory,
    simulate,
    spectral_split,
    synthesize_normally_stable,
)
from .decay import fit_decay
from .diagnostics import identify_limit

__all__ = [
    "synthetic_suite",
    "jordan_counterexample",
    "wrong_tangent_counterexample",
    "ManifoldRun",
    "run_manifold_pipeline",
    "chart_param",
    "closed_form_limit",
    "normal_stability_of",
]

Y_FLOOR = 1e-10  # integrator accuracy sets the usable floor for |y|


def synthetic_suite(n=20, seed=0):
    """``n`` normally stable systems with random dimensions, spectra and curvature."""
    rng = np.random.default_rng(seed)
    suite = []
    for i in range(n):
        m = int(rng.integers(1, 4))
        d = m + int(rng.integers(1, 5))
        eigs = -np.sort(rng.uniform(0.5, 5.0, size=d - m))
        curvature = float(rng.uniform(-1.0, 1.0))
        suite.append(synthesize_normally_stable(m, d, eigs, curvature,
                                                seed=int(rng.integers(2**31))))
    return suite


def jordan_counterexample():
    """Constant ``A = [[0, 1], [0, 0]]``: equilibria ``(xi, 0)`` but a nilpotent zero eigenvalue."""
    J = np.array([[0.0, 1.0], [0.0, 0.0]])
    system = QuasilinearSystem(2, lambda u: J, dA=lambda u, w: np.zeros((2, 2)), name="jordan")
    return system, np.zeros(2), (lambda xi: np.array([xi[0], 0.0])), 1


def wrong_tangent_counterexample():
    """``A(u) = [[0, u1, 0], [0, u2, 0], [0, 0, -1]]``.

    The equilibria contain the line ``(xi, 0, 0)`` and the linearisation at 0
    is ``diag(0, 0, -1)``: its two-dimensional kernel is larger than the
    tangent line, so the tangent condition fails while ``0`` stays semi-simple.
    """
    def A(u):
        return np.array([[0.0, u[0], 0.0], [0.0, u[1], 0.0], [0.0, 0.0, -1.0]])

    def dA(u, w):
        return np.array([[0.0, w[0], 0.0], [0.0, w[1], 0.0], [0.0, 0.0, 0.0]])

    system = QuasilinearSystem(3, A, dA=dA, name="wrong-tangent")
    return system, np.zeros(3), (lambda xi: np.array([xi[0], 0.0, 0.0])), 1


def chart_param(chart):
    """Parametrisation ``xi -> u* + K xi + phi(K xi)`` built from a chart."""
    return lambda xi: chart.point(chart.embed(xi))


@dataclass
class ManifoldRun:
    split: object
    chart: object
    trajectory: object
    reduced: object
    fit: object
    u_hat: np.ndarray
    residual: float


def run_manifold_pipeline(system, u_star, u0, t_end, dt, *, r0=0.5, gap_tol=1e-6,
                          floor=Y_FLOOR):
    """Linearise, split, chart, simulate, reduce, fit and identify the limit."""
    L = linearize_at(system, u_star)
    split = spectral_split(L, gap_tol)
    chart = build_graph_chart(system, u_star, split, r0)
    traj = simulate(system, u0, t_end, dt)
    red = reduce_trajectory(traj, chart)
    fit = fit_decay(red.times, red.y_norm, floor=floor)
    u_hat, res = identify_limit(red, chart)
    return ManifoldRun(split, chart, traj, red, fit, u_hat, res)


def closed_form_limit(x0, y0, t_end=30.0, dt=0.05):
    """Pipeline on the closed-form system from ``(x0, y0)``."""
    system = closed_form_system()
    return run_manifold_pipeline(system, np.zeros(2), np.array([x0, y0]), t_end, dt)


def normal_stability_of(syn, **kw):
    return check_normal_stability(syn.system, syn.u_star, syn.manifold_param, syn.m, **kw)
