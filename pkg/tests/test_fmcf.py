from math import factorial

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.special import gamma

from quasistab.errors import BreakdownError, ConfigurationError, ResolutionError
from quasistab.fmcf import (
    FmcfConfig,
    apply_fmcf_A,
    evolve_fmcf,
    flat_symbol_exact,
    fmcf_numeric_symbol,
    mean_drift_experiment,
)
from quasistab.lab import fit_decay
from quasistab.spectral import PeriodicGrid, integral_mean

GRID = PeriodicGrid(64)
X = GRID.x
CFG = FmcfConfig(grid=GRID, delta=2 * np.pi / 64)


def field(values):
    return GRID.field(values)


# --- independent oracles -------------------------------------------------------

def flat_constant(sigma):
    """``(4/sigma) int_0^inf (1 - cos t - t sin t) t^(-2-sigma) dt`` by adaptive quadrature."""
    def g(t):
        if t < 0.1:
            return sum((-1) ** n * t ** (2 * n - 2) * (2 * n - 1) / factorial(2 * n) for n in range(1, 12))
        return (1 - np.cos(t) - t * np.sin(t)) / t**2

    near = quad(g, 0, 1, weight="alg", wvar=(-sigma, 0), epsabs=1e-15, epsrel=1e-13)[0]
    far = (1 / (1 + sigma)
           - quad(lambda t: t ** (-2 - sigma), 1, np.inf, weight="cos", wvar=1)[0]
           - quad(lambda t: t ** (-1 - sigma), 1, np.inf, weight="sin", wvar=1)[0])
    return 4 / sigma * (near + far)


def taylor_remainder(theta):
    """``1 - exp(-i theta)(1 + i theta)`` without cancellation near 0."""
    theta = np.asarray(theta, float)
    out = 1 - np.exp(-1j * theta) * (1 + 1j * theta)
    small = np.abs(theta) < 0.5
    th = theta[small]
    out[small] = sum((-1j * th) ** n * (n - 1) / factorial(n) for n in range(2, 30))
    return out


def trig(modes, x, deriv=False):
    """``sum a cos(kx) + b sin(kx)`` (or its derivative) for ``modes = {k: (a, b)}``."""
    if deriv:
        return sum(k * (-a * np.sin(k * x) + b * np.cos(k * x)) for k, (a, b) in modes.items())
    return sum(a * np.cos(k * x) + b * np.sin(k * x) for k, (a, b) in modes.items())


def operator_oracle(umodes, vmodes, x, sigma=0.5, y_max=40 * np.pi):
    """Direct evaluation of ``A(u)v(x)`` on the real line.

    The paired integrand is integrated with adaptive quadrature up to
    ``y_max`` (after ``y = t^2`` on [0, 1]); beyond that, ``u(x) - u(x-y)`` is
    negligible against ``y`` and the flat tail is integrated with Fourier
    weights.
    """
    s = 2 + sigma
    U = lambda y: trig(umodes, y)

    def numer(y):
        return sum(((a - 1j * b) * np.exp(1j * k * x) * taylor_remainder(k * y)).real
                   for k, (a, b) in vmodes.items())

    def integrand(y):
        y = np.atleast_1d(y)
        return (numer(y) / (y * y + (U(x) - U(x - y)) ** 2) ** (s / 2))[0]

    pair = lambda y: integrand(y) + integrand(-y)
    opts = dict(limit=200, epsabs=1e-14, epsrel=1e-13)
    total = quad(lambda t: 2 * t * pair(t * t), 0, 1, **opts)[0]
    edges = np.r_[1.0, np.arange(1, int(y_max / (np.pi / 2)) + 1) * np.pi / 2]
    total += sum(quad(pair, a, b, **opts)[0] for a, b in zip(edges[:-1], edges[1:]))
    tail = 2 * trig(vmodes, x) * y_max ** (1 - s) / (s - 1)
    for k, (a, b) in vmodes.items():
        ck = a * np.cos(k * x) + b * np.sin(k * x)
        tail -= 2 * ck * quad(lambda y: y ** -s, y_max, np.inf, weight="cos", wvar=k)[0]
        tail -= 2 * k * ck * quad(lambda y: y ** (1 - s), y_max, np.inf, weight="sin", wvar=k)[0]
    return (2 / sigma) * np.sqrt(1 + trig(umodes, x, True) ** 2) * (total + tail)


# --- operator --------------------------------------------------------------------

@pytest.mark.parametrize("c", [0.0, 1.0, -3.5])
def test_constant_v_gives_zero(c, rng):
    u = field(0.05 * rng.standard_normal() * np.cos(X) + 0.02 * np.sin(2 * X))
    out = apply_fmcf_A(u, field(np.full(64, c)), CFG)
    assert np.abs(out.values).max() <= 1e-12 * (1 + abs(c))


@pytest.mark.parametrize("i", [0, 7, 20])
def test_operator_against_direct_quadrature(i):
    umodes = {1: (0.05, 0.0), 3: (0.0, 0.025)}
    vmodes = {2: (1.0, 0.0), 1: (0.0, 0.3)}
    out = apply_fmcf_A(field(trig(umodes, X)), field(trig(vmodes, X)), CFG)
    expected = operator_oracle(umodes, vmodes, X[i])
    assert out.values[i] == pytest.approx(expected, rel=1e-8)


@settings(max_examples=15)
@given(st.integers(0, 2**32 - 1), st.floats(-2, 2), st.floats(-2, 2))
def test_linear_in_v(seed, a, b):
    rng = np.random.default_rng(seed)
    u = field(0.05 * np.cos(X + rng.uniform(0, 6)))
    v1 = field(rng.standard_normal(5) @ np.cos(np.outer(np.arange(5), X)))
    v2 = field(rng.standard_normal(5) @ np.sin(np.outer(np.arange(5), X)))
    lhs = apply_fmcf_A(u, a * v1 + b * v2, CFG).values
    rhs = a * apply_fmcf_A(u, v1, CFG).values + b * apply_fmcf_A(u, v2, CFG).values
    np.testing.assert_allclose(lhs, rhs, atol=1e-10 * (1 + np.abs(lhs).max()))


def test_shift_invariance_in_u():
    u = field(0.05 * np.cos(X))
    v = field(np.cos(2 * X))
    a = apply_fmcf_A(u, v, CFG).values
    b = apply_fmcf_A(u + 7.0, v, CFG).values
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_resolution_error_for_tall_graphs():
    with pytest.raises(ResolutionError, match="far_cells"):
        apply_fmcf_A(field(40 * np.cos(X)), field(np.cos(X)), FmcfConfig(grid=GRID, far_cells=8))


@pytest.mark.parametrize(
    "kw", [{"sigma": 0.0}, {"sigma": 1.0}, {"delta": 2.0}, {"far_cells": 7}, {"quad_order": 1},
           {"grid": PeriodicGrid(64, period=1.0)}],
)
def test_config_validation(kw):
    with pytest.raises(ConfigurationError):
        FmcfConfig(**kw)


# --- flat symbol -----------------------------------------------------------------

@pytest.mark.parametrize("sigma", [0.2, 0.5, 0.8])
def test_closed_form_constant_matches_quadrature(sigma):
    omega0 = 4 * gamma(-sigma) * np.sin(np.pi * sigma / 2) / (1 + sigma)
    assert flat_constant(sigma) == pytest.approx(omega0, rel=1e-9)
    assert flat_symbol_exact(sigma, 1) == pytest.approx(omega0, rel=1e-12)


def test_omega0_for_half():
    assert -flat_symbol_exact(0.5, 1) == pytest.approx(6.684342065682667, rel=1e-12)


@pytest.fixture(scope="module")
def symbol64():
    return fmcf_numeric_symbol(CFG, k_max=16)


def test_numeric_symbol_values(symbol64):
    k = np.arange(17)
    assert symbol64.table[0] == 0.0
    assert np.all(symbol64.table[1:] < 0)
    np.testing.assert_allclose(symbol64.table, flat_constant(0.5) * k**1.5, rtol=1e-8)
    assert symbol64.table[2] / symbol64.table[1] == pytest.approx(2**1.5, rel=0.02)
    assert symbol64.exponent == pytest.approx(1.5, rel=0.02)
    assert symbol64.leakage <= 1e-6


def test_numeric_symbol_acts_as_multiplier(symbol64):
    out = apply_fmcf_A(field(np.zeros(64)), field(np.cos(5 * X)), CFG)
    np.testing.assert_allclose(out.values, symbol64.table[5] * np.cos(5 * X), atol=1e-9)


def test_quadrature_refinement(symbol64):
    fine = fmcf_numeric_symbol(CFG.refined(), k_max=8)
    k = np.arange(1, 9)
    assert np.abs(fine.table[k] / symbol64.table[k] - 1).max() <= 1e-4


def test_k_max_limit():
    with pytest.raises(ConfigurationError):
        fmcf_numeric_symbol(CFG, k_max=17)


# --- evolution -------------------------------------------------------------------

def test_constant_trajectory():
    traj = evolve_fmcf(field(np.full(64, 2.5)), CFG, t_end=0.1, dt=0.01)
    for u in traj.states:
        np.testing.assert_allclose(u.values, 2.5, atol=1e-14)


def test_linear_regime_rate(symbol64):
    traj = evolve_fmcf(field(0.3 + 1e-3 * np.cos(2 * X)), CFG, t_end=1.0, dt=0.005)
    fit = fit_decay(traj.times, traj.deviations)
    assert fit.omega_fit == pytest.approx(-symbol64.table[2], rel=0.05)


def test_nonlinear_convergence(symbol64):
    eps = 1e-2
    traj = evolve_fmcf(field(eps * (np.cos(X) + np.cos(3 * X))), CFG, t_end=3.5, dt=0.01)
    fit = fit_decay(traj.times, traj.deviations, floor=1e-14)
    assert fit.omega_fit >= 0.9 * symbol64.omega0
    limit = traj.final
    assert np.ptp(limit.values) <= 1e-8
    assert np.abs(apply_fmcf_A(limit, limit, CFG).values).max() <= 1e-8


def test_translation_equivariance():
    u0 = field(0.01 * (np.cos(X) + np.sin(3 * X)))
    a = evolve_fmcf(u0, CFG, t_end=0.3, dt=0.01)
    b = evolve_fmcf(u0 + 4.0, CFG, t_end=0.3, dt=0.01)
    np.testing.assert_allclose(b.final.values, a.final.values + 4.0, atol=1e-12)


def test_stability_constant_independent_of_amplitude():
    profile = np.cos(X) + np.cos(3 * X)
    C = [evolve_fmcf(field(eps * profile), CFG, t_end=0.5, dt=0.01).deviations.max() / eps
         for eps in (1e-2, 1e-3)]
    assert C[0] == pytest.approx(C[1], rel=0.01)


def test_breakdown_reports_last_state():
    # too tall for the image expansion: the first explicit remainder fails
    u0 = field(40.0 * np.cos(X))
    with pytest.raises(BreakdownError) as info:
        evolve_fmcf(u0, FmcfConfig(grid=GRID, far_cells=8), t_end=1.0, dt=0.1)
    assert info.value.last_time == 0.0
    np.testing.assert_array_equal(info.value.last_state.values, u0.values)


@pytest.mark.parametrize(
    "values, bound",
    [(np.full(64, 1.5), 0.0), (1e-2 * np.cos(2 * X), 1e-10)],
    ids=["constant", "even-cos2"],
)
def test_mean_drift(values, bound):
    rep = mean_drift_experiment(field(values), CFG, t_end=0.5, dt=0.01)
    assert rep.max_abs_drift <= bound
    assert rep.limit_gap == pytest.approx(abs(rep.u_hat - integral_mean(field(values))))


def test_mean_drift_generic_is_reported():
    rep = mean_drift_experiment(field(1e-2 * (np.cos(X) + np.sin(2 * X))), CFG, t_end=0.2, dt=0.01)
    assert rep.drift.shape == rep.times.shape and np.all(np.isfinite(rep.drift))
