"""Limit identification and time-weighted decay statistics."""

import numpy as np

from ..errors import ConfigurationError, NotAnEquilibriumError, PrematureLimitError

__all__ = ["identify_limit", "weighted_norm_track", "LIMIT_TOL"]

LIMIT_TOL = 1e-8


def identify_limit(reduced, chart, *, y_tol=LIMIT_TOL, residual_factor=10.0):
    """Equilibrium ``u* + x(t_end) + phi(x(t_end))`` reached by a reduced trajectory.

    Returns
    -------
    u_hat : ndarray
    residual : float
        ``|A(u_hat) u_hat + f(u_hat)|``.

    Raises
    ------
    PrematureLimitError
        If ``|y(t_end)| > y_tol``.
    NotAnEquilibriumError
        If the residual at ``u_hat`` exceeds ``residual_factor * newton_tol``.
    """
    y_end = float(reduced.y_norm[-1])
    if y_end > y_tol:
        raise PrematureLimitError(
            f"stable component still has norm {y_end:.3e} > {y_tol:.1e}; run longer", y_end
        )
    u_hat = chart.point(reduced.x[-1])
    residual = chart.system.residual(u_hat)
    bound = residual_factor * chart.newton_tol
    if residual > bound:
        raise NotAnEquilibriumError(
            f"limit candidate has residual {residual:.3e} > {bound:.1e}", residual
        )
    return u_hat, float(residual)


def weighted_norm_track(times, norm_alpha, norm_xi, mu, omega, u0_norm):
    """``sup_t e^{omega t} (norm_alpha + t^mu norm_xi) / u0_norm`` over ``t > 0``."""
    t = np.asarray(times, float)
    a = np.asarray(norm_alpha, float)
    x = np.asarray(norm_xi, float)
    if mu < 0:
        raise ConfigurationError("mu must be non-negative")
    if np.any(t <= 0):
        raise ConfigurationError("samples must lie at t > 0")
    if not u0_norm > 0:
        raise ConfigurationError("u0_norm must be positive")
    if t.size == 0:
        return 0.0
    return float(np.max(np.exp(omega * t) * (a + t ** mu * x)) / u0_norm)
