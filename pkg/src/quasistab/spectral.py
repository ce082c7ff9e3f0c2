"""Periodic 1-D grids, Fourier pairs and multiplier operators.

Fourier convention: a real field sampled at ``x_j = period * j / n`` is
written as

    u(x_j) = sum_k c_k exp(i k x_j 2 pi / period),   k = -n/2+1, ..., n/2

with ``c_k = fft(u)[k] / n``, so a constant field ``c`` has ``c_0 = c``.
The Nyquist mode ``k = n/2`` is cosine-only.
"""

import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ConfigurationError

__all__ = [
    "PeriodicGrid",
    "SpectralField",
    "MultiplierSymbol",
    "apply_multiplier",
    "sobolev_norm",
    "integral_mean",
    "project_low_modes",
]


@dataclass(frozen=True)
class PeriodicGrid:
    """Uniform grid on the circle of length ``period``."""

    n_points: int
    period: float = 2 * np.pi

    def __post_init__(self):
        n = self.n_points
        if int(n) != n or n < 8 or n % 2:
            raise ConfigurationError(f"n_points must be an even integer >= 8, got {n!r}")
        if not self.period > 0:
            raise ConfigurationError(f"period must be positive, got {self.period!r}")
        object.__setattr__(self, "n_points", int(n))
        object.__setattr__(self, "period", float(self.period))

    @property
    def spacing(self):
        return self.period / self.n_points

    @cached_property
    def x(self):
        # period * j / n rather than j * spacing: no accumulated rounding
        return self.period * np.arange(self.n_points) / self.n_points

    @cached_property
    def rwavenumbers(self):
        """Non-negative integer wavenumbers 0..n/2 (rfft layout)."""
        return np.arange(self.n_points // 2 + 1)

    @cached_property
    def wavenumbers(self):
        """Integer wavenumbers -n/2+1..n/2 in increasing order."""
        return np.arange(-self.n_points // 2 + 1, self.n_points // 2 + 1)

    @property
    def scale(self):
        """Angular factor turning integer wavenumbers into physical ones."""
        return 2 * np.pi / self.period

    def field(self, values):
        return SpectralField(self, values)

    def from_function(self, func):
        return SpectralField(self, func(self.x))

    def from_modes(self, modes, mean=0.0):
        """Field ``mean + sum a cos(k x)`` from ``[(k, a), ...]``."""
        values = np.full(self.n_points, float(mean))
        for k, a in modes:
            values = values + a * np.cos(k * self.scale * self.x)
        return SpectralField(self, values)

    def from_rcoeffs(self, rc):
        """Field from rfft-layout coefficients normalised as ``c_0 = mean``."""
        return SpectralField(self, np.fft.irfft(np.asarray(rc) * self.n_points, n=self.n_points))


class SpectralField:
    """Real grid function with lazily computed Fourier coefficients.

    Instances are immutable: ``values`` is a read-only copy and every
    operation returns a new field, so the coefficient cache cannot go stale.
    """

    __slots__ = ("grid", "values", "_rcoeffs")

    def __init__(self, grid, values):
        values = np.array(values, dtype=float)
        if values.shape != (grid.n_points,):
            raise ConfigurationError(
                f"expected {grid.n_points} values, got shape {values.shape}"
            )
        values.flags.writeable = False
        self.grid = grid
        self.values = values
        self._rcoeffs = None

    def __repr__(self):
        return f"SpectralField(n={self.grid.n_points}, mean={integral_mean(self):.6g})"

    @property
    def rcoeffs(self):
        """Coefficients for k = 0..n/2 (rfft layout)."""
        if self._rcoeffs is None:
            rc = np.fft.rfft(self.values) / self.grid.n_points
            rc.flags.writeable = False
            self._rcoeffs = rc
        return self._rcoeffs

    @property
    def coeffs(self):
        """Coefficients indexed by ``grid.wavenumbers`` (-n/2+1..n/2)."""
        rc = self.rcoeffs
        neg = np.conj(rc[1:-1][::-1])
        return np.concatenate([neg, rc])

    def __add__(self, other):
        if isinstance(other, SpectralField):
            _check_same_grid(self, other)
            return SpectralField(self.grid, self.values + other.values)
        return SpectralField(self.grid, self.values + other)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, SpectralField):
            _check_same_grid(self, other)
            return SpectralField(self.grid, self.values - other.values)
        return SpectralField(self.grid, self.values - other)

    def __mul__(self, scalar):
        return SpectralField(self.grid, self.values * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return SpectralField(self.grid, -self.values)

    def derivative(self, order=1):
        """Spectral derivative; the Nyquist mode is dropped for odd orders."""
        k = self.grid.rwavenumbers * self.grid.scale
        factor = (1j * k) ** order
        if order % 2:
            factor[-1] = 0.0
        return self.grid.from_rcoeffs(self.rcoeffs * factor)

    def to_csv(self, path):
        data = np.column_stack([self.grid.x, self.values])
        np.savetxt(path, data, delimiter=",", header="x,value", comments="", fmt="%.17g")

    @classmethod
    def from_csv(cls, path, period=2 * np.pi):
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(PeriodicGrid(len(data), period), data[:, 1])

    def to_json(self):
        return json.dumps(
            {
                "grid": {"n": self.grid.n_points, "period": self.grid.period},
                "values": [float(v) for v in self.values],
            }
        )

    @classmethod
    def from_json(cls, text):
        doc = json.loads(text)
        grid = PeriodicGrid(doc["grid"]["n"], doc["grid"]["period"])
        return cls(grid, doc["values"])


def _check_same_grid(a, b):
    if a.grid != b.grid:
        raise ConfigurationError("fields live on different grids")


class MultiplierSymbol:
    """Even Fourier symbol ``k -> m(k)`` acting on integer wavenumbers.

    Parameters
    ----------
    func : callable
        Vectorised map from an integer array of wavenumbers to real values.
        Values that are NaN are treated as "undefined".
    name : str, optional
    """

    def __init__(self, func, name="symbol"):
        self._func = func
        self.name = name

    def __repr__(self):
        return f"MultiplierSymbol({self.name!r})"

    def __call__(self, k):
        k = np.asarray(k)
        return np.asarray(self._func(k), dtype=float) * np.ones(k.shape)

    @classmethod
    def from_table(cls, table, name="table"):
        """Symbol defined by ``table[k]`` for ``k = 0..len(table)-1``."""
        table = np.asarray(table, dtype=float)

        def func(k):
            k = np.abs(np.asarray(k))
            out = np.full(np.shape(k), np.nan)
            inside = k < len(table)
            out[inside] = table[k[inside]]
            return out

        sym = cls(func, name)
        sym.table = table
        return sym

    def values_on(self, grid):
        """Symbol values on ``grid.rwavenumbers``; validates definedness and evenness."""
        k = grid.rwavenumbers
        pos = np.asarray(self._func(k), dtype=float) * np.ones(k.shape)
        bad = ~np.isfinite(pos)
        if bad.any():
            raise ConfigurationError(
                f"{self.name} undefined at wavenumber(s) {k[bad][:5].tolist()}"
            )
        neg = np.asarray(self._func(-k), dtype=float) * np.ones(k.shape)
        if not np.allclose(neg, pos, rtol=1e-12, atol=0.0, equal_nan=False):
            raise ConfigurationError(f"{self.name} is not even in k")
        return pos


def apply_multiplier(field, symbol):
    """Return the field with coefficient ``c_k`` replaced by ``m(k) c_k``."""
    m = symbol.values_on(field.grid)
    return field.grid.from_rcoeffs(field.rcoeffs * m)


def sobolev_norm(field, s):
    """Discrete H^s norm ``(sum_k (1 + k^2)^s |c_k|^2)^(1/2)``.

    ``k`` is the physical wavenumber, which for the default period 2 pi is
    the integer mode index.
    """
    if not -2.0 <= s <= 4.0:
        raise ConfigurationError(f"sobolev exponent {s} outside [-2, 4]")
    grid = field.grid
    k = grid.rwavenumbers * grid.scale
    w = (1.0 + k**2) ** s * np.abs(field.rcoeffs) ** 2
    # +-k pairs counted twice, except k = 0 and the Nyquist mode
    total = w[0] + 2.0 * w[1:-1].sum() + w[-1]
    return float(np.sqrt(total))


def integral_mean(field):
    return float(np.mean(field.values))


def project_low_modes(field, kmax):
    """Keep Fourier modes with ``|k| <= kmax`` and zero the rest."""
    if not 0 <= kmax < field.grid.n_points // 2:
        raise ConfigurationError(f"kmax={kmax} must lie in [0, n/2)")
    rc = np.array(field.rcoeffs)
    rc[kmax + 1:] = 0.0
    return field.grid.from_rcoeffs(rc)
