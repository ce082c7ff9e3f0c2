"""Time integration of finite-dimensional quasilinear flows."""

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from ..errors import BreakdownError, ConfigurationError

__all__ = ["Trajectory", "simulate"]


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    n_steps: int = 0

    def to_csv_rows(self):
        return np.column_stack([self.times, self.states])


def simulate(system, u0, t_end, dt, *, rtol=1e-10, atol=1e-13, times=None):
    """Integrate ``u' = A(u)u + f(u)`` and sample every ``dt`` (or at ``times``).

    Uses the 5th-order Radau IIA collocation method with the exact Jacobian
    of the quasilinear vector field and error-controlled step sizes.

    Raises
    ------
    BreakdownError
        When the step size underflows (finite-time blow-up); carries the last
        valid sample.
    """
    u0 = np.asarray(u0, float)
    if u0.shape != (system.dim,):
        raise ConfigurationError(f"u0 must have shape ({system.dim},)")
    if not system.in_domain(u0):
        raise ConfigurationError("u0 lies outside the system's domain ball")
    if not dt > 0 or not t_end > 0:
        raise ConfigurationError("dt and t_end must be positive")
    if times is None:
        n = int(round(t_end / dt))
        times = np.linspace(0.0, n * dt, n + 1)
        times = times[times <= t_end * (1 + 1e-12)]
    times = np.asarray(times, float)

    sol = solve_ivp(
        lambda t, u: system.vector_field(u),
        (0.0, float(times[-1])),
        u0,
        method="Radau",
        t_eval=times,
        jac=lambda t, u: system.jacobian(u),
        rtol=rtol,
        atol=atol,
    )
    if sol.status != 0 or not np.all(np.isfinite(sol.y)):
        if sol.t.size:
            last_t, last_u = float(sol.t[-1]), sol.y[:, -1].copy()
        else:
            last_t, last_u = 0.0, u0.copy()
        raise BreakdownError(f"integration broke down: {sol.message}", last_t, last_u)
    return Trajectory(times=sol.t, states=sol.y.T.copy(), n_steps=int(sol.nfev))
