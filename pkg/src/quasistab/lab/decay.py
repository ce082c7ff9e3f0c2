"""Exponential decay-rate estimation from sampled norms."""

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError, InsufficientDecayDataError

__all__ = ["DecayFit", "fit_decay"]

MIN_SAMPLES = 10
RESIDUAL_TOL = 0.05
DEFAULT_FLOOR = 1e-12


@dataclass(frozen=True)
class DecayFit:
    """Least-squares fit ``log norm ~ log(K norm(0)) - omega t`` on a trailing window."""

    omega_fit: float
    K_fit: float
    window: tuple
    residual: float
    floor: float
    n_samples: int

    def as_dict(self):
        return {
            "omega_fit": self.omega_fit,
            "K_fit": self.K_fit,
            "window": list(self.window),
            "residual": self.residual,
            "floor": self.floor,
            "n_samples": self.n_samples,
        }


def _suffix_fits(t, y):
    """Slope, intercept and RMS residual of the line fit on every suffix."""
    t0, y0 = t.mean(), y.mean()
    tc, yc = t - t0, y - y0
    rev = lambda a: np.cumsum(a[::-1])[::-1]
    n = rev(np.ones_like(tc))
    St, Sy = rev(tc), rev(yc)
    Stt, Sty, Syy = rev(tc * tc), rev(tc * yc), rev(yc * yc)
    vt = Stt - St * St / n
    cty = Sty - St * Sy / n
    vy = Syy - Sy * Sy / n
    with np.errstate(divide="ignore", invalid="ignore"):
        slope = np.where(vt > 0, cty / vt, 0.0)
    sse = np.maximum(vy - slope * cty, 0.0)
    resid = np.sqrt(sse / n)
    icpt = (y0 + Sy / n) - slope * (t0 + St / n)
    return slope, icpt, resid


def fit_decay(times, norms, floor=None):
    """Fit an exponential rate on the largest trailing window with a good fit.

    Only samples with ``norm > 10 floor`` enter, and the series is cut at the
    first sample that falls below that level.  Among trailing windows of at
    least ten samples the longest one with RMS log-residual at most 0.05 is
    chosen (the best-fitting window if none qualifies).

    Parameters
    ----------
    floor : float, optional
        Noise floor; defaults to ``1e-12 * norms[0]``.

    Raises
    ------
    InsufficientDecayDataError
        Fewer than ten usable samples.
    """
    t = np.asarray(times, float).ravel()
    v = np.asarray(norms, float).ravel()
    if t.shape != v.shape:
        raise ConfigurationError("times and norms must have equal length")
    if np.any(v < 0) or not np.all(np.isfinite(v)):
        raise ConfigurationError("norms must be finite and non-negative")
    if t.size and np.any(np.diff(t) <= 0):
        raise ConfigurationError("times must be strictly increasing")
    if floor is None:
        floor = DEFAULT_FLOOR * (v[0] if v.size else 0.0)
    floor = float(floor)
    above = v > 10 * floor
    stop = int(np.argmin(above)) if not above.all() else v.size
    if stop < MIN_SAMPLES:
        raise InsufficientDecayDataError(
            f"only {stop} leading samples above 10*floor = {10 * floor:.3e}; need {MIN_SAMPLES}"
        )
    t, y = t[:stop], np.log(v[:stop])
    slope, icpt, resid = _suffix_fits(t, y)
    starts = np.arange(stop - MIN_SAMPLES + 1)
    good = starts[resid[starts] <= RESIDUAL_TOL]
    i = int(good[0]) if good.size else int(starts[np.argmin(resid[starts])])
    return DecayFit(
        omega_fit=float(-slope[i]),
        K_fit=float(np.exp(icpt[i]) / v[0]),
        window=(float(t[i]), float(t[-1])),
        residual=float(resid[i]),
        floor=floor,
        n_samples=int(stop - i),
    )
