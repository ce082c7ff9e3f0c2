"""1-D Neumann problem ``u_t = (a(u) u_x)_x + |u_x|^kappa`` on ``(0, L)``.

Cell-centred finite volumes: the diffusion part is written in flux form so
its discrete mean vanishes identically, and the gradient term is evaluated
from centred differences with mirrored ghost cells.
"""

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.fft import dct
from scipy.linalg import solve_banded

from .errors import BreakdownError, ConfigurationError, DiagnosticRefusedError
from .lab.diagnostics import weighted_norm_track

__all__ = [
    "RdConfig",
    "RdExponents",
    "alpha_crit",
    "rd_exponents",
    "rd_rhs",
    "RdTrajectory",
    "evolve_rd",
    "cosine_sobolev_norm",
    "WeightedDiagnostic",
    "rd_weighted_diagnostic",
]


@dataclass(frozen=True)
class RdConfig:
    """Discretisation and coefficients.

    ``a_coeffs`` are ascending polynomial coefficients of the diffusivity;
    ``a_min`` is the positivity certificate checked on every computed state.
    """

    length: float = 1.0
    n_cells: int = 256
    a_coeffs: tuple = (1.0, 0.0, 0.5)
    kappa: float = 4.0
    a_min: float = 0.5
    gradient_term: bool = True

    def __post_init__(self):
        if not self.length > 0:
            raise ConfigurationError("length must be positive")
        if int(self.n_cells) != self.n_cells or self.n_cells < 4:
            raise ConfigurationError("n_cells must be an integer >= 4")
        if not self.kappa > 3:
            raise ConfigurationError(f"kappa must exceed 3, got {self.kappa}")
        if not self.a_min > 0:
            raise ConfigurationError("a_min must be positive")
        object.__setattr__(self, "a_coeffs", tuple(float(c) for c in self.a_coeffs))
        if not self.a_coeffs:
            raise ConfigurationError("a_coeffs must be non-empty")

    @property
    def h(self):
        return self.length / self.n_cells

    @property
    def x(self):
        return (np.arange(self.n_cells) + 0.5) * self.h

    def a(self, u):
        return npoly.polyval(u, self.a_coeffs)

    def check_diffusivity(self, u):
        """Raise unless ``a >= a_min`` on ``[min u, max u]``."""
        lo, hi = float(np.min(u)), float(np.max(u))
        pts = [lo, hi]
        if len(self.a_coeffs) > 2:
            crit = npoly.polyroots(npoly.polyder(self.a_coeffs))
            pts += [r.real for r in np.atleast_1d(crit) if abs(r.imag) < 1e-12 and lo < r.real < hi]
        worst = float(np.min(self.a(np.array(pts))))
        if worst < self.a_min:
            raise ConfigurationError(
                f"diffusivity drops to {worst:.3e} < a_min = {self.a_min:.3e} on [{lo:.3e}, {hi:.3e}]"
            )


def alpha_crit(q, xi, gamma):
    """Critical phase-space exponent ``(q xi - 1 - gamma) / (q - 1)``; ``-inf`` for ``q = 1``."""
    if q == 1:
        return -np.inf
    return (q * xi - 1.0 - gamma) / (q - 1.0)


@dataclass(frozen=True)
class RdExponents:
    n: int
    p: float
    kappa: float
    tau: float
    s_bar: float
    s_c: float
    s: float
    mu: float
    alpha_crit: float
    alpha: float
    beta: float
    xi: float
    gamma: float
    theta: float


def rd_exponents(n, p, kappa, tau):
    """Regularity exponents for the critical-space stability statement.

    Raises
    ------
    ConfigurationError
        Listing every violated inequality.
    """
    violations = []
    if not kappa > 3:
        violations.append(f"kappa > 3 fails (kappa = {kappa})")
    lo, hi = 2 * n, (kappa - 1) * n
    if not lo < p < hi:
        violations.append(f"p = {p} not in the open interval (2n, (kappa-1)n) = ({lo:g}, {hi:g})")
    if p == (n - 1) * (kappa - 1):
        violations.append(f"p = (n-1)(kappa-1) = {p:g} is excluded")
    if not 0.5 < 2 * tau < 1 - n / p:
        violations.append(f"1/2 < 2 tau < 1 - n/p fails (2 tau = {2 * tau:g}, 1 - n/p = {1 - n / p:g})")
    if violations:
        raise ConfigurationError("; ".join(violations))

    s_bar = 2 * tau + n / p
    s_c = n / p + (kappa - 2) / (kappa - 1)
    s = 1 + n * (kappa - 1) / (p * kappa)
    mu = 1 / (2 * (kappa - 1)) - n / (2 * p * kappa)
    if not 0 < s_bar < s_c < s < 2 - 2 * tau:
        raise ConfigurationError(
            f"ordering 0 < s_bar < s_c < s < 2 - 2 tau fails: "
            f"{s_bar:g}, {s_c:g}, {s:g}, {2 - 2 * tau:g}"
        )
    gamma = tau
    beta = tau + s_bar / 2
    alpha = tau + s_c / 2
    xi = tau + s / 2
    ac = alpha_crit(kappa, xi, gamma)
    if abs(ac - alpha) > 1e-12:
        raise ConfigurationError(f"alpha_crit = {ac!r} differs from alpha = {alpha!r}")
    return RdExponents(n=n, p=p, kappa=kappa, tau=tau, s_bar=s_bar, s_c=s_c, s=s, mu=mu,
                       alpha_crit=ac, alpha=alpha, beta=beta, xi=xi, gamma=gamma,
                       theta=alpha - beta)


def _face_diffusivity(u, cfg):
    return cfg.a(0.5 * (u[1:] + u[:-1]))


def _centered_gradient(u, h):
    ghost = np.concatenate([[u[0]], u, [u[-1]]])
    return (ghost[2:] - ghost[:-2]) / (2 * h)


def _gradient_source(u, cfg):
    if not cfg.gradient_term:
        return np.zeros_like(u)
    return np.abs(_centered_gradient(u, cfg.h)) ** cfg.kappa


def rd_rhs(u, cfg):
    """Semi-discrete right-hand side."""
    u = np.asarray(u, float)
    h = cfg.h
    flux = np.zeros(u.size + 1)
    flux[1:-1] = _face_diffusivity(u, cfg) * (u[1:] - u[:-1]) / h
    return (flux[1:] - flux[:-1]) / h + _gradient_source(u, cfg)


def _diffusion_banded(u, cfg, dt):
    # banded form of I - dt D(a(u)), D the flux-form Neumann operator
    h2 = cfg.h ** 2
    af = _face_diffusivity(u, cfg) * dt / h2
    n = u.size
    ab = np.zeros((3, n))
    ab[0, 1:] = -af
    ab[2, :-1] = -af
    diag = np.ones(n)
    diag[:-1] += af
    diag[1:] += af
    ab[1] = diag
    return ab


def cosine_sobolev_norm(v, s, length):
    """Discrete ``H^s`` proxy via the cosine series of cell-centred data."""
    v = np.asarray(v, float)
    n = v.size
    c = dct(v, type=2, norm="ortho")
    k = np.arange(n) * np.pi / length
    return float(np.sqrt(length / n * np.sum((1 + k * k) ** s * c * c)))


@dataclass
class RdTrajectory:
    times: np.ndarray
    states: np.ndarray
    means: np.ndarray
    l2_dev: np.ndarray
    h1_dev: np.ndarray
    hsc_dev: np.ndarray
    cfg: RdConfig
    n_halvings: int = 0

    def to_csv_rows(self):
        return np.column_stack([self.times, self.means, self.l2_dev, self.h1_dev])


def _record(u, cfg, s_c):
    m = float(np.mean(u))
    d = u - m
    l2 = float(np.sqrt(cfg.h * np.sum(d * d)))
    g = np.diff(u) / cfg.h
    h1 = float(np.sqrt(l2 * l2 + cfg.h * np.sum(g * g)))
    return m, l2, h1, cosine_sobolev_norm(d, s_c, cfg.length)


def evolve_rd(u0, cfg=None, t_end=2.0, dt=1e-3, *, output_every=10, s_c=16 / 15,
              dt_min=1e-10):
    """Lagged-coefficient implicit diffusion with explicit gradient term.

    Each step solves ``(I - dt D(a(u^n))) u^{n+1} = u^n + dt |grad u^n|^kappa``.
    A step that produces non-finite values or leaves the diffusivity
    certificate is retried with half the step size.

    Raises
    ------
    BreakdownError
        When the step size falls below ``dt_min``.
    """
    cfg = cfg or RdConfig()
    u = np.asarray(u0, float).copy()
    if u.shape != (cfg.n_cells,):
        raise ConfigurationError(f"u0 must have {cfg.n_cells} cell values")
    if not np.all(np.isfinite(u)):
        raise ConfigurationError("u0 must be finite")
    cfg.check_diffusivity(u)

    rows = [_record(u, cfg, s_c)]
    times, states = [0.0], [u.copy()]
    t, n, halvings = 0.0, 0, 0
    h_dt = dt
    while t < t_end * (1 - 1e-12):
        step = min(h_dt, t_end - t)
        rhs = u + step * _gradient_source(u, cfg)
        try:
            new = solve_banded((1, 1), _diffusion_banded(u, cfg, step), rhs)
            ok = np.all(np.isfinite(new))
        except (np.linalg.LinAlgError, ValueError):
            # overflowing data make the lagged matrix singular or non-finite
            ok = False
        if ok:
            try:
                cfg.check_diffusivity(new)
            except ConfigurationError:
                ok = False
        if not ok:
            h_dt *= 0.5
            halvings += 1
            if h_dt < dt_min:
                raise BreakdownError(f"step size underflow at t = {t:.6g}", t, u.copy())
            continue
        u, t, n = new, t + step, n + 1
        if n % output_every == 0 or t >= t_end * (1 - 1e-12):
            times.append(t)
            states.append(u.copy())
            rows.append(_record(u, cfg, s_c))
    rows = np.array(rows)
    return RdTrajectory(np.array(times), np.array(states), rows[:, 0], rows[:, 1],
                        rows[:, 2], rows[:, 3], cfg, halvings)


@dataclass
class WeightedDiagnostic:
    K: float
    K_half: float
    u_hat: float
    omega: float
    t_end_stable: bool
    gap_violation: bool
    history: np.ndarray = field(repr=False, default=None)


def rd_weighted_diagnostic(traj, exps, omega, *, drift_tol=1e-10, stable_tol=0.05):
    """Empirical constant ``K`` of the time-weighted decay estimate.

    ``K`` is the supremum over samples of
    ``e^{omega t} (|u - u_hat|_{s_c} + t^mu |u - u_hat|_s) / |u0 - u_hat|_{s_c}``
    with ``L^2``-based cosine proxies for the Bessel norms.  The statistic is
    also evaluated on the first half of the trajectory; growth beyond
    ``stable_tol`` flags a gap violation.

    Raises
    ------
    DiagnosticRefusedError
        If the mean still moves by more than ``drift_tol`` per unit time over
        the last tenth of the run.
    """
    t, means = traj.times, traj.means
    k = int(np.searchsorted(t, 0.9 * t[-1]))
    k = min(k, t.size - 2)
    rate = abs(means[-1] - means[k]) / max(t[-1] - t[k], 1e-300)
    if rate > drift_tol:
        raise DiagnosticRefusedError(
            f"trajectory not converged: mean drifts {rate:.3e} per unit time"
        )
    u_hat = float(means[-1])
    L = traj.cfg.length
    dev = traj.states - u_hat
    na = np.array([cosine_sobolev_norm(d, exps.s_c, L) for d in dev])
    nx = np.array([cosine_sobolev_norm(d, exps.s, L) for d in dev])
    u0n = na[0]
    # data equal to u_hat up to rounding carry no decay information
    if u0n <= 100 * np.finfo(float).eps * np.abs(traj.states[0]).max():
        return WeightedDiagnostic(0.0, 0.0, u_hat, omega, True, False, np.zeros(t.size))
    pos = t > 0
    history = np.maximum.accumulate(
        np.exp(omega * t[pos]) * (na[pos] + t[pos] ** exps.mu * nx[pos]) / u0n
    )
    K = weighted_norm_track(t[pos], na[pos], nx[pos], exps.mu, omega, u0n)
    half = t[pos] <= 0.5 * t[-1]
    K_half = float(history[half][-1]) if np.any(half) else K
    stable = K <= K_half * (1 + stable_tol)
    return WeightedDiagnostic(K, K_half, u_hat, omega, bool(stable), bool(not stable), history)
