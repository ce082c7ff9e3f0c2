"""Linearisation, spectral splitting and the normal-stability test."""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from ..errors import (
    ManifoldInputError,
    NotAnEquilibriumError,
    SemiSimplicityError,
    SpectralConditionError,
)
from .system import _fd_jacobian

__all__ = [
    "linearize_at",
    "SpectralSplit",
    "spectral_split",
    "NormalStabilityReport",
    "check_normal_stability",
]

EQUILIBRIUM_TOL = 1e-8


def linearize_at(system, u_star, tol=EQUILIBRIUM_TOL):
    """Matrix of ``w -> A(u*) w + (dA(u*)[w]) u* + df(u*) w``.

    Raises
    ------
    NotAnEquilibriumError
        If ``|A(u*) u* + f(u*)| > tol``.
    """
    u_star = np.asarray(u_star, float)
    res = system.residual(u_star)
    if res > tol:
        raise NotAnEquilibriumError(
            f"u_star is not an equilibrium: residual {res:.3e} > {tol:.1e}", res
        )
    return system.jacobian(u_star)


@dataclass
class SpectralSplit:
    """Spectral projections for the zero cluster of a real matrix.

    ``P`` projects onto the generalised kernel along the stable invariant
    subspace, ``Q = I - P``.  ``kernel_basis`` is orthonormal and spans
    ``range(P)``.
    """

    P: np.ndarray
    Q: np.ndarray
    kernel_dim: int
    kernel_basis: np.ndarray
    gap: float
    stable_eigs: list
    cluster_eigs: list = field(default_factory=list)

    @property
    def dim(self):
        return self.P.shape[0]

    @property
    def stable_basis(self):
        """Orthonormal basis of ``range(Q)``."""
        U, s, _ = np.linalg.svd(self.Q)
        return U[:, : self.dim - self.kernel_dim]

    def projection_defects(self):
        P, Q = self.P, self.Q
        I = np.eye(self.dim)
        return {
            "P2-P": float(np.abs(P @ P - P).max(initial=0.0)),
            "PQ": float(np.abs(P @ Q).max(initial=0.0)),
            "QP": float(np.abs(Q @ P).max(initial=0.0)),
            "P+Q-I": float(np.abs(P + Q - I).max(initial=0.0)),
        }


def spectral_split(M, gap_tol=1e-6):
    """Split ``M`` at its zero eigenvalue cluster.

    Eigenvalues with ``|lambda| <= gap_tol (1 + |M|)`` form the cluster.  An
    ordered real Schur form ``M = Z T Z^T`` puts the cluster first; the
    projection follows from the Sylvester equation decoupling ``T``.  The
    cluster is semi-simple iff its Schur block ``T11`` is numerically zero.

    Raises
    ------
    SemiSimplicityError
        The cluster block has a singular value above ``gap_tol |M|``.
    SpectralConditionError
        Some eigenvalue outside the cluster has ``Re >= 0``.
    """
    M = np.atleast_2d(np.asarray(M, float))
    d = M.shape[0]
    normM = float(np.linalg.norm(M, 2)) if d else 0.0
    thresh = gap_tol * (1.0 + normM)

    T, Z, m = scipy.linalg.schur(
        M, output="real", sort=lambda re, im: np.hypot(re, im) <= thresh
    )
    eigs = scipy.linalg.eigvals(M)
    in_cluster = np.abs(eigs) <= thresh
    cluster = eigs[in_cluster]
    stable = eigs[~in_cluster]

    T11 = T[:m, :m]
    sv = np.linalg.svd(T11, compute_uv=False) if m else np.zeros(0)
    rank = int(np.sum(sv > gap_tol * normM))
    diagnostics = {
        "cluster_eigs": cluster.tolist(),
        "cluster_block_singular_values": sv.tolist(),
        "threshold": thresh,
    }
    if rank > 0:
        raise SemiSimplicityError(
            f"zero eigenvalue is not semi-simple: cluster block has rank {rank}",
            diagnostics,
        )

    gap = float(-np.max(stable.real)) if stable.size else np.inf
    diagnostics["gap"] = gap
    if gap <= 0:
        raise SpectralConditionError(
            f"eigenvalue with Re = {-gap:.3e} >= 0 outside the zero cluster", diagnostics
        )

    if m == 0:
        P_schur = np.zeros((d, d))
    elif m == d:
        P_schur = np.eye(d)
    else:
        # T11 X - X T22 = -T12 block-diagonalises T
        X = scipy.linalg.solve_sylvester(T11, -T[m:, m:], -T[:m, m:])
        P_schur = np.zeros((d, d))
        P_schur[:m, :m] = np.eye(m)
        P_schur[:m, m:] = -X
    P = Z @ P_schur @ Z.T
    return SpectralSplit(
        P=P,
        Q=np.eye(d) - P,
        kernel_dim=int(m),
        kernel_basis=Z[:, :m].copy(),
        gap=gap,
        stable_eigs=sorted(stable.tolist(), key=lambda z: (-z.real, z.imag)),
        cluster_eigs=cluster.tolist(),
    )


@dataclass
class NormalStabilityReport:
    """Outcome of the four normal-stability conditions."""

    rank_ok: bool
    tangent_ok: bool
    semisimple_ok: bool
    spectrum_ok: bool
    gap: float
    manifold_dim: int
    kernel_dim: int
    max_angle: float
    equilibria_ok: bool = True
    worst_residual: float = 0.0
    split: SpectralSplit = None
    reasons: list = field(default_factory=list)

    @property
    def passed(self):
        return self.rank_ok and self.tangent_ok and self.semisimple_ok and self.spectrum_ok

    def as_dict(self):
        return {
            "rank_ok": self.rank_ok,
            "tangent_ok": self.tangent_ok,
            "semisimple_ok": self.semisimple_ok,
            "spectrum_ok": self.spectrum_ok,
            "gap": self.gap,
            "manifold_dim": self.manifold_dim,
            "kernel_dim": self.kernel_dim,
            "equilibria_ok": self.equilibria_ok,
            "reasons": list(self.reasons),
        }


def _null_space(L, rtol=1e-8):
    if L.size == 0:
        return np.zeros((0, 0))
    U, s, Vt = np.linalg.svd(L)
    tol = rtol * max(1.0, s[0] if s.size else 0.0)
    rank = int(np.sum(s > tol))
    return Vt[rank:].T


def check_normal_stability(system, u_star, manifold_param, m, *, gap_tol=1e-6,
                           n_samples=20, sample_radius=1e-2, angle_tol=1e-6,
                           residual_tol=1e-6, seed=0, strict=True):
    """Check that ``u_star`` is normally stable.

    Parameters
    ----------
    manifold_param : callable
        ``xi in R^m -> R^d`` parametrising equilibria with ``psi(0) = u_star``.
    m : int
        Dimension of the parameter space.
    strict : bool
        When true (default) a parametrisation that does not map into
        equilibria raises :class:`ManifoldInputError`; otherwise the failure is
        recorded in the report and the remaining checks still run.
    """
    u_star = np.asarray(u_star, float)
    d = system.dim
    rng = np.random.default_rng(seed)

    psi0 = np.asarray(manifold_param(np.zeros(m)), float)
    if np.linalg.norm(psi0 - u_star) > 1e-8:
        raise ManifoldInputError("manifold_param(0) != u_star", np.linalg.norm(psi0 - u_star))
    worst = 0.0
    for _ in range(n_samples if m else 0):
        xi = rng.uniform(-sample_radius, sample_radius, size=m)
        worst = max(worst, system.residual(manifold_param(xi)))
    equilibria_ok = worst <= residual_tol
    reasons = []
    if not equilibria_ok:
        if strict:
            raise ManifoldInputError(
                f"manifold_param leaves the equilibrium set: residual {worst:.3e}", worst
            )
        reasons.append(f"parametrisation not in equilibria (residual {worst:.3e})")

    L = linearize_at(system, u_star)
    if m:
        dpsi = _fd_jacobian(lambda xi: np.asarray(manifold_param(xi), float), np.zeros(m))
        sv = np.linalg.svd(dpsi, compute_uv=False)
        rank = int(np.sum(sv > 1e-8 * max(1.0, sv[0])))
    else:
        dpsi = np.zeros((d, 0))
        rank = 0
    rank_ok = rank == m
    if not rank_ok:
        reasons.append(f"rank of dPsi(0) is {rank}, expected {m}")

    split = None
    try:
        split = spectral_split(L, gap_tol)
        semisimple_ok = spectrum_ok = True
        gap = split.gap
        kernel = split.kernel_basis
    except SemiSimplicityError as exc:
        semisimple_ok = False
        reasons.append(str(exc))
        kernel = _null_space(L)
        eigs = scipy.linalg.eigvals(L)
        thresh = gap_tol * (1.0 + np.linalg.norm(L, 2))
        rest = eigs[np.abs(eigs) > thresh]
        gap = float(-rest.real.max()) if rest.size else np.inf
        spectrum_ok = gap > 0
        if not spectrum_ok:
            reasons.append("spectrum outside the cluster reaches Re >= 0")
    except SpectralConditionError as exc:
        semisimple_ok = True
        spectrum_ok = False
        reasons.append(str(exc))
        gap = exc.diagnostics.get("gap", -np.inf)
        kernel = _null_space(L)

    kdim = kernel.shape[1]
    if kdim != m or rank != m:
        tangent_ok = False
        max_angle = np.pi / 2
        reasons.append(f"tangent space has dim {rank} but ker A*(0) has dim {kdim}")
    elif m == 0:
        tangent_ok, max_angle = True, 0.0
    else:
        max_angle = float(np.max(scipy.linalg.subspace_angles(dpsi, kernel)))
        tangent_ok = max_angle <= angle_tol
        if not tangent_ok:
            reasons.append(f"tangent space differs from ker A*(0) (angle {max_angle:.3e})")

    return NormalStabilityReport(
        rank_ok=rank_ok,
        tangent_ok=tangent_ok,
        semisimple_ok=semisimple_ok,
        spectrum_ok=spectrum_ok,
        gap=float(gap),
        manifold_dim=m,
        kernel_dim=kdim,
        max_angle=float(max_angle),
        equilibria_ok=equilibria_ok,
        worst_residual=float(worst),
        split=split,
        reasons=reasons,
    )
