import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import expm

from quasistab.errors import (
    BreakdownError,
    ChartExitError,
    ChartRadiusError,
    ConfigurationError,
    ManifoldInputError,
    NotAnEquilibriumError,
    SchemaError,
    SemiSimplicityError,
    SpectralConditionError,
)
from quasistab.heleshaw import hs_symbol
from quasistab.manifold import (
    QuasilinearSystem,
    build_graph_chart,
    check_normal_stability,
    closed_form_system,
    linearize_at,
    polynomial_system,
    reduce_trajectory,
    simulate,
    spectral_split,
    synthesize_normally_stable,
    system_from_json,
)
from quasistab.manifold.flow import Trajectory

PARABOLA = {"A": [[0, 0], [0, -1]], "f": [0, [[1, [2, 0]]]]}


def parabola_system():
    """A = diag(0, -1), f = (0, u1^2): equilibria u2 = u1^2."""
    return system_from_json(PARABOLA)


def fd_jacobian(F, u, h=1e-6):
    cols = [(F(u + h * e) - F(u - h * e)) / (2 * h) for e in np.eye(u.size)]
    return np.column_stack(cols)


def random_quadratic_system(rng, d):
    """``A(u) = A0 + sum_j u_j Aj`` and ``f(u) = b + Cu + u^T D u`` shifted so that u* is an equilibrium."""
    A0 = rng.standard_normal((d, d))
    Aj = rng.standard_normal((d, d, d)) / d
    C = rng.standard_normal((d, d))
    D = rng.standard_normal((d, d, d)) / d
    u_star = rng.uniform(-0.5, 0.5, d)

    def A(u):
        return A0 + np.tensordot(u, Aj, axes=(0, 0))

    def g(u):
        return C @ u + np.einsum("ijk,j,k->i", D, u, u)

    b = -(A(u_star) @ u_star + g(u_star))
    system = QuasilinearSystem(
        d, A, lambda u: b + g(u),
        dA=lambda u, w: np.tensordot(w, Aj, axes=(0, 0)),
        df=lambda u: C + np.einsum("ijk,k->ij", D, u) + np.einsum("ijk,j->ik", D, u),
        domain_radius=2.0,
    )
    return system, u_star


# --- linearisation ---------------------------------------------------------

@pytest.mark.parametrize(
    "system, expected",
    [
        (parabola_system(), [[0, 0], [0, -1]]),
        (closed_form_system(), [[0, 0], [0, -1]]),
        (QuasilinearSystem(2, lambda u: np.array([[1.0, 2.0], [3.0, -4.0]])), [[1, 2], [3, -4]]),
    ],
    ids=["parabola", "closed-form", "constant-A"],
)
def test_linearize_examples(system, expected):
    np.testing.assert_allclose(linearize_at(system, np.zeros(2)), expected, atol=1e-12)


def test_linearize_requires_equilibrium():
    with pytest.raises(NotAnEquilibriumError) as info:
        linearize_at(parabola_system(), np.array([0.0, 1.0]))
    assert info.value.residual == pytest.approx(1.0)


def test_linearization_matches_fd_on_random_systems(rng):
    for _ in range(50):
        d = int(rng.integers(1, 7))
        system, u_star = random_quadratic_system(rng, d)
        L = linearize_at(system, u_star)
        J = fd_jacobian(system.vector_field, u_star)
        assert np.linalg.norm(L - J) <= 1e-5 * np.linalg.norm(J)


def test_analytic_derivatives_agree_with_fd(rng):
    system, _ = random_quadratic_system(rng, 4)
    for _ in range(10):
        u = rng.uniform(-1, 1, 4)
        w = rng.standard_normal(4)
        dA = system.dA(u, w)
        dA_fd = (system.A(u + 1e-6 * w) - system.A(u - 1e-6 * w)) / 2e-6
        assert np.linalg.norm(dA - dA_fd) <= 1e-5 * np.linalg.norm(dA)
        np.testing.assert_allclose(system.df(u), fd_jacobian(system.f, u), rtol=1e-5, atol=1e-8)


# --- spectral split --------------------------------------------------------

def assert_projection_calculus(split):
    I = np.eye(split.dim)
    P, Q = split.P, split.Q
    for defect in (P @ P - P, P @ Q, Q @ P, P + Q - I):
        assert np.abs(defect).max(initial=0.0) <= 1e-10


def test_split_diagonal():
    split = spectral_split(np.diag([0.0, -1.0]))
    np.testing.assert_allclose(split.P, np.diag([1.0, 0.0]), atol=1e-14)
    assert split.kernel_dim == 1 and split.gap == 1.0


def test_split_jordan_block():
    with pytest.raises(SemiSimplicityError) as info:
        spectral_split(np.array([[0.0, 1.0], [0.0, 0.0]]))
    assert info.value.diagnostics["cluster_block_singular_values"][0] == pytest.approx(1.0)


def test_split_unstable_spectrum():
    with pytest.raises(SpectralConditionError):
        spectral_split(np.diag([0.0, 0.5, -1.0]))


def test_split_heleshaw_truncation():
    k = np.arange(-5, 6)
    split = spectral_split(np.diag(hs_symbol(k)))
    assert split.kernel_dim == 3
    assert split.gap == pytest.approx(6.0)


@given(st.integers(0, 2**32 - 1), st.integers(1, 4), st.integers(1, 6))
def test_split_of_similarity_transform(seed, m, s):
    rng = np.random.default_rng(seed)
    d = m + s
    stable = -rng.uniform(0.5, 5.0, s)
    # non-normal: random (well-conditioned) similarity of diag(0_m, stable)
    V = np.eye(d) + 0.3 * rng.standard_normal((d, d))
    M = V @ np.diag(np.r_[np.zeros(m), stable]) @ np.linalg.inv(V)
    split = spectral_split(M)
    assert split.kernel_dim == m
    assert split.gap == pytest.approx(-stable.max(), rel=1e-8)
    assert_projection_calculus(split)
    # P commutes with M and its range is ker M
    np.testing.assert_allclose(split.P @ M, M @ split.P, atol=1e-9)
    assert np.abs(M @ split.kernel_basis).max() <= 1e-9
    for lam in split.stable_eigs:
        assert lam.real <= -split.gap + 1e-10


# --- normal stability --------------------------------------------------------

def test_normal_stability_closed_form():
    rep = check_normal_stability(closed_form_system(), np.zeros(2), lambda xi: np.array([xi[0], 0.0]), 1)
    assert rep.passed and rep.gap == pytest.approx(1.0)


def test_normal_stability_wrong_parametrisation():
    psi = lambda xi: np.array([xi[0], xi[0]])
    with pytest.raises(ManifoldInputError):
        check_normal_stability(closed_form_system(), np.zeros(2), psi, 1)
    rep = check_normal_stability(closed_form_system(), np.zeros(2), psi, 1, strict=False)
    assert not rep.tangent_ok and not rep.equilibria_ok
    assert rep.rank_ok and rep.semisimple_ok and rep.spectrum_ok


def test_normal_stability_isolated_equilibrium():
    system = QuasilinearSystem(1, lambda u: np.array([[-1.0]]))
    rep = check_normal_stability(system, np.zeros(1), lambda xi: np.zeros(1), 0)
    assert rep.passed and rep.kernel_dim == 0
    np.testing.assert_array_equal(rep.split.P, np.zeros((1, 1)))


def test_normal_stability_base_point_mismatch():
    with pytest.raises(ManifoldInputError):
        check_normal_stability(closed_form_system(), np.zeros(2), lambda xi: np.array([xi[0] + 1, 0.0]), 1)


def test_synthesized_example_passes():
    syn = synthesize_normally_stable(2, 5, [-1.0, -2.0, -5.0], 0.7, seed=4)
    rep = check_normal_stability(syn.system, syn.u_star, syn.manifold_param, syn.m)
    assert rep.passed and rep.gap == pytest.approx(1.0, rel=1e-10)


@pytest.mark.parametrize("args", [(0, 2, [-1.0]), (2, 2, []), (1, 3, [-1.0]), (1, 2, [1.0])])
def test_synthesizer_validates(args):
    with pytest.raises(ConfigurationError):
        synthesize_normally_stable(*args)


# --- chart -------------------------------------------------------------------

@pytest.mark.parametrize("x", [0.0, 0.1, -0.3, 0.5])
def test_chart_parabola(x):
    system = parabola_system()
    chart = build_graph_chart(system, np.zeros(2), spectral_split(linearize_at(system, np.zeros(2))), 0.5)
    np.testing.assert_allclose(chart.phi(np.array([x, 0.0])), [0.0, x * x], atol=1e-13)


def test_chart_flat_manifold():
    syn = synthesize_normally_stable(1, 2, [-1.0], 0.0, seed=1)
    chart = build_graph_chart(syn.system, syn.u_star, spectral_split(linearize_at(syn.system, syn.u_star)), 0.5)
    for xi in np.linspace(-0.5, 0.5, 7):
        assert np.linalg.norm(chart.phi(chart.embed([xi]))) <= 1e-13


@given(st.integers(0, 2**32 - 1), st.integers(1, 3), st.integers(1, 3), st.floats(-1, 1))
def test_chart_invariants_on_synthetic(seed, m, s, curvature):
    rng = np.random.default_rng(seed)
    syn = synthesize_normally_stable(m, m + s, -rng.uniform(0.5, 5.0, s), curvature, seed=seed)
    split = spectral_split(linearize_at(syn.system, syn.u_star))
    chart = build_graph_chart(syn.system, syn.u_star, split, 0.5)
    assert np.linalg.norm(chart.phi(np.zeros(syn.d))) <= 1e-12
    assert np.linalg.norm(chart.phi_jacobian_fd()) <= 1e-6
    for _ in range(5):
        xi = rng.uniform(-0.2, 0.2, m)
        x = chart.embed(xi)
        assert syn.system.residual(chart.point(x)) <= 10 * chart.newton_tol
        np.testing.assert_allclose(chart.phi(x), syn.phi_true(x), atol=1e-10)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_chart_radius_error():
    # equilibria u2 = u1^2 / (1 - u1) leave the ball at u1 -> 1; Newton from z = 0 fails there
    system = QuasilinearSystem(
        2, lambda u: np.diag([0.0, -1.0]),
        lambda u: np.array([0.0, u[0] ** 2 / (1.0 - u[0]) if u[0] != 1 else np.inf]),
        domain_radius=5.0,
    )
    split = spectral_split(linearize_at(system, np.zeros(2)))
    with pytest.raises(ChartRadiusError):
        build_graph_chart(system, np.zeros(2), split, 1.0, n_check=2)


def test_chart_rejects_nonpositive_radius():
    system = parabola_system()
    with pytest.raises(ConfigurationError):
        build_graph_chart(system, np.zeros(2), spectral_split(linearize_at(system, np.zeros(2))), 0.0)


# --- simulation and reduction -------------------------------------------------

def closed_form_solution(t, x0, y0):
    return np.column_stack([x0 * np.exp(y0 * (1 - np.exp(-t))), y0 * np.exp(-t)])


def test_simulate_equilibrium_is_constant():
    system = parabola_system()
    u0 = np.array([0.3, 0.09])
    traj = simulate(system, u0, 5.0, 0.5)
    np.testing.assert_allclose(traj.states, np.tile(u0, (11, 1)), atol=1e-14)


@pytest.mark.parametrize("x0, y0", [(0.01, 0.01), (-0.3, 0.2), (0.5, -0.4)])
def test_simulate_closed_form(x0, y0):
    traj = simulate(closed_form_system(), np.array([x0, y0]), 10.0, 0.25)
    np.testing.assert_allclose(traj.states, closed_form_solution(traj.times, x0, y0), atol=1e-9)


@given(st.integers(0, 2**32 - 1))
def test_simulate_linear_matches_expm(seed):
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((3, 3)) - 2 * np.eye(3)
    u0 = rng.uniform(-0.5, 0.5, 3)
    traj = simulate(QuasilinearSystem(3, lambda u: M), u0, 2.0, 0.5)
    for t, u in zip(traj.times, traj.states):
        np.testing.assert_allclose(u, expm(M * t) @ u0, atol=1e-8)


def test_simulate_blowup_reports_breakdown():
    system = QuasilinearSystem(1, lambda u: np.array([[u[0]]]), domain_radius=2.0)
    with pytest.raises(BreakdownError) as info:
        simulate(system, np.array([1.0]), 3.0, 0.1)
    assert 0.0 <= info.value.last_time <= 1.0
    assert np.all(np.isfinite(info.value.last_state))


@pytest.mark.parametrize("kw", [{"u0": np.zeros(3)}, {"u0": np.array([3.0, 0.0])}, {"dt": 0.0}])
def test_simulate_validates(kw):
    args = {"u0": np.zeros(2), "t_end": 1.0, "dt": 0.1} | kw
    with pytest.raises(ConfigurationError):
        simulate(closed_form_system(), **args)


def closed_form_chart():
    system = closed_form_system()
    return build_graph_chart(system, np.zeros(2), spectral_split(linearize_at(system, np.zeros(2))), 0.5)


def test_reduce_constant_trajectories():
    chart = build_graph_chart(
        parabola_system(), np.zeros(2), spectral_split(np.diag([0.0, -1.0])), 0.5)
    t = np.linspace(0, 1, 5)
    red = reduce_trajectory(Trajectory(t, np.zeros((5, 2))), chart)
    assert np.abs(red.x).max() == 0 and np.abs(red.y).max() == 0
    on = np.array([0.2, 0.04])
    red = reduce_trajectory(Trajectory(t, np.tile(on, (5, 1))), chart)
    np.testing.assert_allclose(red.x, np.tile([0.2, 0.0], (5, 1)), atol=1e-15)
    assert np.abs(red.y).max() <= 1e-14


def test_reduce_closed_form_and_reconstruct():
    x0, y0 = 0.01, -0.01
    traj = simulate(closed_form_system(), np.array([x0, y0]), 10.0, 0.1)
    red = reduce_trajectory(traj, closed_form_chart())
    np.testing.assert_allclose(red.y[:, 1], y0 * np.exp(-traj.times), atol=1e-11)
    np.testing.assert_allclose(red.y[:, 0], 0.0, atol=1e-15)
    np.testing.assert_allclose(red.reconstruct(), traj.states, atol=1e-10)


def test_reduce_chart_exit():
    t = np.array([0.0, 1.0, 2.0])
    states = np.array([[0.0, 0.0], [0.4, 0.0], [0.6, 0.0]])
    with pytest.raises(ChartExitError) as info:
        reduce_trajectory(Trajectory(t, states), closed_form_chart())
    assert info.value.exit_time == 2.0


# --- polynomial JSON systems ---------------------------------------------------

def test_polynomial_system_evaluates():
    system = polynomial_system([[1, [[2.0, [1, 0]]]], [0, -1]], [[[1.0, [0, 2]]], 0])
    u = np.array([0.5, 2.0])
    np.testing.assert_allclose(system.A(u), [[1.0, 1.0], [0.0, -1.0]])
    np.testing.assert_allclose(system.f(u), [4.0, 0.0])
    np.testing.assert_allclose(system.df(u), [[0.0, 4.0], [0.0, 0.0]])


def test_system_from_json_string():
    system = system_from_json(json.dumps(PARABOLA))
    assert system.dim == 2 and system.residual(np.array([0.5, 0.25])) == pytest.approx(0.0)


@pytest.mark.parametrize(
    "doc, key",
    [
        ({"f": [0, 0]}, "A"),
        ({"A": [[0, 0], [0]]}, "A[1]"),
        ({"A": [[0, [[1, [1]]]], [0, 0]]}, "A[0][1][0]"),
        ({"A": [[0, 0], [0, 0]], "f": [0]}, "f"),
        ({"A": [[0, 0], [0, 0]], "g": 1}, "g"),
        ({"A": [[0, 0], [0, 0]], "dim": 3}, "dim"),
    ],
)
def test_system_from_json_errors_name_key(doc, key):
    with pytest.raises(SchemaError) as info:
        system_from_json(doc)
    assert info.value.key == key
