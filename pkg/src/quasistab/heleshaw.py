"""Hele-Shaw flow linearised at the unit circle, realised on the Fourier side.

The generator at the circle is the multiplier ``m(k) = |k| (1 - k^2)``.  Its
kernel consists of the modes ``|k| <= 1`` (dilations and translations of the
circle) and every other mode decays at least like ``exp(-6 t)``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .spectral import MultiplierSymbol, PeriodicGrid, SpectralField, apply_multiplier

__all__ = [
    "HsState",
    "hs_symbol",
    "HS_SYMBOL",
    "hs_generator",
    "hs_evolve",
    "hs_conserved",
    "hs_gap",
    "GapCertificate",
    "circle_radial_function",
    "hs_normal_stability",
]


def hs_symbol(k):
    """``|k| (1 - |k|^2)``, vectorised over integer ``k``."""
    k = np.abs(np.asarray(k, dtype=float))
    out = k * (1.0 - k * k)
    return float(out) if out.ndim == 0 else out


HS_SYMBOL = MultiplierSymbol(hs_symbol, name="hele-shaw")


@dataclass(frozen=True)
class HsState:
    """Perturbation ``v = rho - 1`` of the unit circle's radial function."""

    field: SpectralField

    def __post_init__(self):
        if not np.all(np.isfinite(self.field.values)):
            raise ConfigurationError("Hele-Shaw state must be finite and real")


def hs_generator(state):
    """Apply the linearised operator to ``state``."""
    return HsState(apply_multiplier(state.field, HS_SYMBOL))


def hs_evolve(v0, t):
    """Exact linear flow: ``c_k(t) = exp(m(k) t) c_k(0)``."""
    if t < 0:
        raise ConfigurationError("hs_evolve requires t >= 0")
    grid = v0.field.grid
    m = HS_SYMBOL.values_on(grid)
    return HsState(grid.from_rcoeffs(v0.field.rcoeffs * np.exp(m * t)))


def hs_conserved(v):
    """Linearised area and centre-of-mass functionals.

    Returns ``(int v, int v cos, int v sin)`` over one period.  The trapezoid
    rule is exact for band-limited ``v``.
    """
    field = v.field if isinstance(v, HsState) else v
    grid = field.grid
    x = grid.x * grid.scale
    h = grid.spacing
    vals = field.values
    return (
        float(h * vals.sum()),
        float(h * (vals * np.cos(x)).sum()),
        float(h * (vals * np.sin(x)).sum()),
    )


@dataclass(frozen=True)
class GapCertificate:
    gap: float
    argmax_k: int
    k_max: int
    max_symbol: float


def hs_gap(grid=None, k_max=None):
    """Spectral gap of the generator and a certificate of where it is attained.

    The maximum of ``m(k)`` over represented ``|k| >= 2`` is evaluated
    directly; ``k_max`` truncates the search (defaults to the grid's Nyquist).
    """
    grid = grid or PeriodicGrid(256)
    if k_max is None:
        k_max = grid.n_points // 2
    if k_max < 2:
        raise ConfigurationError("truncation must include |k| = 2")
    k = np.arange(2, k_max + 1)
    m = hs_symbol(k)
    i = int(np.argmax(m))
    cert = GapCertificate(gap=float(-m[i]), argmax_k=int(k[i]), k_max=int(k_max),
                          max_symbol=float(m[i]))
    return cert.gap, cert


def circle_radial_function(theta, a, b, r):
    """Radial function about the origin of the circle with centre ``(a, b)`` and radius ``r``."""
    s = a * np.sin(theta) - b * np.cos(theta)
    return a * np.cos(theta) + b * np.sin(theta) + np.sqrt(r * r - s * s)


def hs_normal_stability(grid=None, angle_tol=1e-6, h=1e-6):
    """Four normal-stability conditions at the unit circle on ``grid``.

    The equilibria near the unit circle are the circles ``(a, b, r)``; their
    tangent space is obtained by central differences of the radial function
    and compared with the kernel of the diagonal generator.
    """
    from scipy.linalg import subspace_angles

    from .manifold.linear import spectral_split

    grid = grid or PeriodicGrid(256)
    theta = grid.x * grid.scale
    # generator in real Fourier coordinates is diagonal
    k = np.abs(grid.wavenumbers)
    split = spectral_split(np.diag(hs_symbol(k)))
    ks = grid.wavenumbers[np.diag(split.P) > 0.5]
    kernel = np.column_stack([np.cos(q * theta) if q >= 0 else np.sin(-q * theta) for q in ks])
    p0 = np.array([0.0, 0.0, 1.0])
    cols = []
    for e in np.eye(3):
        cols.append((circle_radial_function(theta, *(p0 + h * e))
                     - circle_radial_function(theta, *(p0 - h * e))) / (2 * h))
    tangent = np.column_stack(cols)
    rank = int(np.linalg.matrix_rank(tangent, tol=1e-8 * np.linalg.norm(tangent, 2)))
    angle = float(np.max(subspace_angles(tangent, kernel))) if rank == kernel.shape[1] else np.pi / 2
    return {
        "rank_ok": rank == 3,
        "tangent_ok": angle <= angle_tol,
        "semisimple_ok": True,
        "spectrum_ok": split.gap > 0,
        "kernel_dim": split.kernel_dim,
        "max_angle": angle,
        "gap": split.gap,
    }
