"""Generator of normally stable test systems with known ground truth."""

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError
from .system import QuasilinearSystem

__all__ = ["SyntheticSystem", "synthesize_normally_stable", "closed_form_system"]


@dataclass
class SyntheticSystem:
    """A generated system together with the data it was built from.

    In canonical coordinates ``(xi, eta) = frame.T @ u`` the flow reads

        xi'  = c * diag(xi) C (eta - curvature q(xi))
        eta' = diag(stable_eigs) (eta - curvature q(xi))

    with ``q_j(xi) = |xi|^2 / (j + 1)``, so the equilibria are the graph
    ``eta = curvature q(xi)``.
    """

    system: QuasilinearSystem
    m: int
    d: int
    frame: np.ndarray
    stable_eigs: np.ndarray
    curvature: float
    coupling_matrix: np.ndarray

    @property
    def u_star(self):
        return np.zeros(self.d)

    @property
    def gap(self):
        return float(-np.max(self.stable_eigs))

    def q(self, xi):
        xi = np.asarray(xi, float)
        return (xi @ xi) / (np.arange(self.d - self.m) + 1.0)

    def manifold_param(self, xi):
        xi = np.asarray(xi, float)
        return self.frame @ np.concatenate([xi, self.curvature * self.q(xi)])

    def phi_true(self, x):
        """Ground-truth graph map for ``x`` in the kernel (as a d-vector)."""
        xi = self.frame[:, : self.m].T @ np.asarray(x, float)
        return self.frame[:, self.m:] @ (self.curvature * self.q(xi))

    @property
    def projection(self):
        K = self.frame[:, : self.m]
        return K @ K.T


def _random_frame(d, rng):
    Z, R = np.linalg.qr(rng.standard_normal((d, d)))
    return Z * np.sign(np.diag(R))


def synthesize_normally_stable(m, d, stable_eigs, curvature=0.0, *, seed=0, coupling=0.5):
    """Build a system whose equilibria near 0 form the graph of a quadratic.

    The linearisation at 0 is ``diag(0_m, stable_eigs)`` written in a random
    orthogonal frame; ``A`` is linear in ``u`` and ``f`` collects the
    quadratic and cubic remainders, all with exact derivatives.
    """
    stable_eigs = np.asarray(stable_eigs, float).ravel()
    if m < 1 or d <= m:
        raise ConfigurationError("need 1 <= m < d")
    if stable_eigs.size != d - m:
        raise ConfigurationError(f"need {d - m} stable eigenvalues, got {stable_eigs.size}")
    if np.any(stable_eigs >= 0):
        raise ConfigurationError("stable eigenvalues must be negative")
    rng = np.random.default_rng(seed)
    R = _random_frame(d, rng)
    C = coupling * rng.standard_normal((m, d - m)) / np.sqrt(d - m)
    lam = stable_eigs
    c = float(curvature)
    weights = 1.0 / (np.arange(d - m) + 1.0)

    def split(u):
        w = R.T @ u
        return w[:m], w[m:]

    def A(u):
        xi, _ = split(u)
        Acan = np.zeros((d, d))
        Acan[:m, m:] = xi[:, None] * C
        Acan[m:, m:] = np.diag(lam)
        return R @ Acan @ R.T

    def dA(u, w):
        xw, _ = split(w)
        Acan = np.zeros((d, d))
        Acan[:m, m:] = xw[:, None] * C
        return R @ Acan @ R.T

    def f(u):
        xi, _ = split(u)
        q = (xi @ xi) * weights
        Cq = C @ q
        return R @ np.concatenate([-c * xi * Cq, -c * lam * q])

    def df(u):
        xi, _ = split(u)
        q = (xi @ xi) * weights
        dq = 2.0 * np.outer(weights, xi)  # (d-m, m)
        Cq = C @ q
        J = np.zeros((d, d))
        J[:m, :m] = -c * (np.diag(Cq) + xi[:, None] * (C @ dq))
        J[m:, :m] = -c * lam[:, None] * dq
        return R @ J @ R.T

    system = QuasilinearSystem(d, A, f, dA=dA, df=df, domain_radius=1.0,
                               name=f"synthetic(m={m},d={d})")
    return SyntheticSystem(system=system, m=m, d=d, frame=R, stable_eigs=lam,
                           curvature=c, coupling_matrix=C)


def closed_form_system():
    """``A(u) = [[0, u1], [0, -1]]``, ``f = 0``.

    Solutions: ``u1(t) = x0 exp(y0 (1 - e^-t))``, ``u2(t) = y0 e^-t``; the
    equilibria are the axis ``u2 = 0``.
    """
    def A(u):
        return np.array([[0.0, u[0]], [0.0, -1.0]])

    def dA(u, w):
        return np.array([[0.0, w[0]], [0.0, 0.0]])

    return QuasilinearSystem(2, A, dA=dA, domain_radius=1.0, name="closed-form")
