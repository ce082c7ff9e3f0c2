"""Graph chart of the equilibrium manifold and the reduced (x, y) coordinates."""

from dataclasses import dataclass

import numpy as np

from ..errors import ChartExitError, ChartRadiusError, ConfigurationError

__all__ = ["EquilibriumChart", "build_graph_chart", "ReducedTrajectory", "reduce_trajectory"]


@dataclass
class EquilibriumChart:
    """Equilibria near ``base`` written as ``base + x + phi(x)``.

    ``x`` ranges over ``range(P)`` (given as a d-vector) with ``|x| <= r0``
    and ``phi(x)`` lies in ``range(Q)``.
    """

    system: object
    base: np.ndarray
    split: object
    r0: float
    newton_tol: float = 1e-12
    max_iter: int = 50

    def __post_init__(self):
        self.base = np.asarray(self.base, float)
        self._B = self.split.stable_basis
        self._K = self.split.kernel_basis

    def coords(self, x):
        """Kernel coordinates of ``x`` in the orthonormal kernel basis."""
        return self._K.T @ np.asarray(x, float)

    def embed(self, xi):
        return self._K @ np.asarray(xi, float)

    def phi(self, x):
        x = np.asarray(x, float)
        if np.linalg.norm(x) > self.r0 * (1 + 1e-12):
            raise ChartExitError(f"|x| = {np.linalg.norm(x):.3e} exceeds r0 = {self.r0:.3e}", None)
        z, ok, res = self._solve(x)
        if not ok:
            raise ChartRadiusError(
                f"Newton for phi did not converge at |x| = {np.linalg.norm(x):.3e} "
                f"(residual {res:.3e}); try a smaller r0"
            )
        return z

    def point(self, x):
        """Equilibrium ``base + x + phi(x)``."""
        x = np.asarray(x, float)
        return self.base + x + self.phi(x)

    def _solve(self, x):
        # damped Newton for Q F(base + x + B c) = 0 in stable coordinates c
        B, Q = self._B, self.split.Q
        if B.shape[1] == 0:
            return np.zeros_like(x), True, 0.0
        c = np.zeros(B.shape[1])

        def G(c):
            return B.T @ (Q @ self.system.vector_field(self.base + x + B @ c))

        g = G(c)
        res = np.linalg.norm(g)
        polished = False
        for _ in range(self.max_iter):
            if res <= self.newton_tol:
                if polished:
                    break
                polished = True
            J = B.T @ Q @ self.system.jacobian(self.base + x + B @ c) @ B
            try:
                step = np.linalg.solve(J, -g)
            except np.linalg.LinAlgError:
                return B @ c, False, res
            lam = 1.0
            while lam > 1e-4:
                c_new = c + lam * step
                g_new = G(c_new)
                r_new = np.linalg.norm(g_new)
                if r_new < res or r_new <= self.newton_tol:
                    break
                lam *= 0.5
            else:
                break
            c, g, res = c_new, g_new, r_new
        return B @ c, res <= self.newton_tol, res

    def phi_jacobian_fd(self, h=1e-5):
        """Finite-difference Jacobian of ``xi -> phi(K xi)`` at 0."""
        m = self._K.shape[1]
        cols = [
            (self.phi(self.embed(h * e)) - self.phi(self.embed(-h * e))) / (2 * h)
            for e in np.eye(m)
        ]
        return np.column_stack(cols) if cols else np.zeros((self.base.size, 0))


def build_graph_chart(system, u_star, split, r0, *, newton_tol=1e-12, max_iter=50,
                      n_check=16, seed=0):
    """Construct the graph chart and verify Newton converges inside ``r0``.

    Probes ``n_check`` points with ``|x| <= r0`` (half of them on the
    boundary sphere).

    Raises
    ------
    ChartRadiusError
        If Newton fails at any probe.
    """
    if not r0 > 0:
        raise ConfigurationError("r0 must be positive")
    chart = EquilibriumChart(system, u_star, split, float(r0), newton_tol, max_iter)
    m = split.kernel_dim
    if m == 0:
        return chart
    rng = np.random.default_rng(seed)
    for i in range(n_check):
        xi = rng.standard_normal(m)
        xi *= r0 / np.linalg.norm(xi)
        if i % 2:
            xi *= rng.uniform(0.0, 1.0)
        chart.phi(chart.embed(xi))
    return chart


@dataclass
class ReducedTrajectory:
    """Kernel part ``x = P(u - u*)`` and stable remainder ``y = Q(u - u*) - phi(x)``."""

    times: np.ndarray
    x: np.ndarray
    y: np.ndarray
    phi_x: np.ndarray
    base: np.ndarray

    @property
    def y_norm(self):
        return np.linalg.norm(self.y, axis=1)

    def reconstruct(self):
        return self.base + self.x + self.phi_x + self.y


def reduce_trajectory(traj, chart):
    """Map a full trajectory to reduced coordinates.

    ``traj`` needs ``times`` and ``states`` (n x d).

    Raises
    ------
    ChartExitError
        When some sample has ``|P(u - u*)| > r0``; carries the exit time.
    """
    times = np.asarray(traj.times, float)
    states = np.asarray(traj.states, float)
    v = states - chart.base
    x = v @ chart.split.P.T
    norms = np.linalg.norm(x, axis=1)
    out = np.nonzero(norms > chart.r0)[0]
    if out.size:
        t_exit = float(times[out[0]])
        raise ChartExitError(f"trajectory leaves the chart at t = {t_exit:.6g}", t_exit)
    phi_x = np.array([chart.phi(xi) for xi in x])
    y = v @ chart.split.Q.T - phi_x
    return ReducedTrajectory(times=times, x=x, y=y, phi_x=phi_x, base=chart.base)
