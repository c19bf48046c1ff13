"""Coherence functions of a resonantly driven two-level emitter.

Closed forms for the first- and second-order coherence are provided next to
an independent reference that integrates the optical Bloch equations and
applies the quantum regression theorem. All rates are angular (rad/s).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .curves import CorrelationCurve, grid_step

TWO_PI_MHZ = 2e6 * math.pi
"""Angular frequency (rad/s) of 1 MHz."""


class NumericalError(RuntimeError):
    """A numerical procedure failed to converge or became unstable."""


@dataclass(frozen=True)
class EmitterParams:
    """One driven two-level emitter.

    Attributes
    ----------
    gamma : float
        Radiative decay rate, rad/s.
    omega : float
        Resonant Rabi frequency, rad/s.
    sigma_diffusion : float
        Standard deviation of slow spectral diffusion, rad/s.
    impurity : float
        Fraction of detected light that is leaked laser, in ``[0, 1)``.
    """

    gamma: float
    omega: float = 0.0
    sigma_diffusion: float = 0.0
    impurity: float = 0.0

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma!r}")
        if not self.omega >= 0:
            raise ValueError(f"omega must be non-negative, got {self.omega!r}")
        if not self.sigma_diffusion >= 0:
            raise ValueError("sigma_diffusion must be non-negative")
        if not 0 <= self.impurity < 1:
            raise ValueError(f"impurity must lie in [0, 1), got {self.impurity!r}")

    @classmethod
    def from_mhz(cls, gamma_mhz_over_2pi, omega_over_gamma=None, *, omega_mhz_over_2pi=None,
                 sigma_mhz_over_2pi=0.0, impurity=0.0):
        """Build from linewidth-style frequencies (value = rate / 2pi, in MHz).

        The drive is given either relative to gamma or as an absolute
        frequency, not both.
        """
        gamma = gamma_mhz_over_2pi * TWO_PI_MHZ
        omega = _resolve_omega(gamma, omega_over_gamma, omega_mhz_over_2pi)
        return cls(gamma, omega, sigma_mhz_over_2pi * TWO_PI_MHZ, impurity)

    @classmethod
    def from_per_ns(cls, gamma_per_ns, omega_over_gamma=None, *, omega_mhz_over_2pi=None,
                    sigma_mhz_over_2pi=0.0, impurity=0.0):
        """Build from a decay rate in ns^-1 (e.g. a fitted lifetime)."""
        gamma = gamma_per_ns * 1e9
        omega = _resolve_omega(gamma, omega_over_gamma, omega_mhz_over_2pi)
        return cls(gamma, omega, sigma_mhz_over_2pi * TWO_PI_MHZ, impurity)

    @property
    def gamma_mhz_over_2pi(self):
        return self.gamma / TWO_PI_MHZ

    @property
    def omega_over_gamma(self):
        return self.omega / self.gamma


def _resolve_omega(gamma, omega_over_gamma, omega_mhz_over_2pi):
    if omega_over_gamma is not None and omega_mhz_over_2pi is not None:
        raise ValueError("give the Rabi frequency either relative to gamma or in MHz, not both")
    if omega_mhz_over_2pi is not None:
        return omega_mhz_over_2pi * TWO_PI_MHZ
    return (omega_over_gamma or 0.0) * gamma


def _check(params):
    if not params.gamma > 0:
        raise ValueError("gamma must be positive")


def generalized_rabi(params):
    """Complex oscillation frequency ``sqrt(omega**2 - gamma**2 / 16)``.

    Purely imaginary below ``omega = gamma / 4`` (overdamped branch), zero at
    the branch point.
    """
    d = params.omega ** 2 - params.gamma ** 2 / 16
    if d >= 0:
        return complex(math.sqrt(d), 0.0)
    return complex(0.0, math.sqrt(-d))


def excited_population(params):
    """Steady-state excited-state population under resonant drive."""
    g2, o2 = params.gamma ** 2, params.omega ** 2
    return o2 / (g2 + 2 * o2)


def elastic_fraction(params):
    """Long-delay limit of the normalized first-order coherence."""
    g2, o2 = params.gamma ** 2, params.omega ** 2
    return g2 / (g2 + 2 * o2)


def _damped_oscillators(mu, rate, tau):
    """``exp(-rate*tau)`` times ``cos(mu*tau)`` and ``sin(mu*tau)/mu``.

    For imaginary ``mu`` the hyperbolic continuation is used; the exponentials
    are combined so that large delays do not overflow.
    """
    tau = np.abs(np.asarray(tau, dtype=float))
    if mu.imag == 0.0:
        m = mu.real
        damp = np.exp(-rate * tau)
        return damp * np.cos(m * tau), damp * tau * np.sinc(m * tau / math.pi)
    k = mu.imag
    grow = np.exp((k - rate) * tau)
    decay = np.exp(-(k + rate) * tau)
    c = 0.5 * (grow + decay)
    x = k * tau
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(
            x < 1e-3,
            np.exp(-rate * tau) * tau * (1 + x * x / 6 + x ** 4 / 120),
            0.5 * (grow - decay) / k,
        )
    return c, s


def g1_normalized(params, tau):
    """Normalized first-order coherence of resonance fluorescence.

    Evaluated at ``|tau|``. Pure dephasing is neglected; the incoherent
    central component decays as ``exp(-gamma*tau/2)``.
    """
    _check(params)
    g, o2 = params.gamma, params.omega ** 2
    s = g * g + 2 * o2
    tau = np.abs(np.asarray(tau, dtype=float))
    c, sn = _damped_oscillators(generalized_rabi(params), 0.75 * g, tau)
    coeff_cos = 0.5 * (2 * o2 - g * g) / s
    coeff_sin = (5 * g * o2 - 0.5 * g ** 3) / (4 * s)
    out = g * g / s + 0.5 * np.exp(-0.5 * g * tau) + coeff_cos * c + coeff_sin * sn
    return out if out.ndim else float(out)


def G1_raw(params, tau):
    """Unnormalized first-order coherence ``<sigma_+(tau) sigma_-(0)>``."""
    return excited_population(params) * g1_normalized(params, tau)


def g2_tls(params, tau):
    """Second-order coherence of an ideal resonantly driven emitter.

    ``1 - exp(-3 gamma |tau| / 4) [cos(mu tau) + 3 gamma / (4 mu) sin(mu tau)]``
    """
    _check(params)
    g = params.gamma
    c, sn = _damped_oscillators(generalized_rabi(params), 0.75 * g, tau)
    out = 1.0 - c - 0.75 * g * sn
    return out if out.ndim else float(out)


# -- Bloch-equation reference -------------------------------------------------

_SM = np.array([[0, 1], [0, 0]], dtype=complex)  # |g><e| in basis (g, e)
_SP = _SM.conj().T
_EYE = np.eye(2)


def _vec(m):
    return m.reshape(-1, order="F")


def _unvec(v):
    return v.reshape(2, 2, order="F")


def liouvillian(params):
    """Column-stacked Lindblad generator in the frame rotating with the laser."""
    h = 0.5 * params.omega * (_SM + _SP)
    n = _SP @ _SM

    def spre(a):
        return np.kron(_EYE, a)

    def spost(a):
        return np.kron(a.T, _EYE)

    return (-1j * (spre(h) - spost(h))
            + params.gamma * (np.kron(_SP.T, _SM) - 0.5 * spre(n) - 0.5 * spost(n)))


def _rk4_matrix(gen, h):
    # One classical RK4 step of the linear ODE x' = gen x.
    a = h * gen
    a2 = a @ a
    a3 = a2 @ a
    return np.eye(gen.shape[0]) + a + a2 / 2 + a3 / 6 + a3 @ a / 24


@dataclass
class OracleResult:
    """Output of :func:`bloch_oracle`.

    ``g1``/``g2`` are ``None`` when the drive is off (zero population), since
    the normalized functions are then undefined. Unpacks as ``(g1, g2)``.
    """

    g1: CorrelationCurve | None
    g2: CorrelationCurve | None
    population: float
    G1: np.ndarray
    G2: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    def __iter__(self):
        return iter((self.g1, self.g2))


def steady_state(params, step_fraction=1 / 200, tol=1e-13, max_time=None):
    """Integrate the Bloch equations from the ground state to steady state.

    Returns ``(rho, diagnostics)``. Raises :class:`NumericalError` when the
    fixed RK4 step is unstable or convergence is not reached.
    """
    gen = liouvillian(params)
    scale = max(params.gamma, params.omega)
    h = step_fraction / scale
    prop = _rk4_matrix(gen, h)
    radius = float(np.max(np.abs(np.linalg.eigvals(prop))))
    diag = {"step_s": h, "spectral_radius": radius}
    if radius > 1 + 1e-12:
        raise NumericalError(
            f"RK4 step {h:.3e} s is unstable (spectral radius {radius:.6f}); reduce step_fraction")
    if max_time is None:
        max_time = 2000.0 / params.gamma
    block = 256
    prop_block = np.linalg.matrix_power(prop, block)
    x = _vec(np.diag([1.0 + 0j, 0.0]))
    t = 0.0
    change = np.inf
    while t < max_time:
        new = prop_block @ x
        change = float(np.max(np.abs(new - x)))
        x = new
        t += block * h
        if change < tol:
            break
    else:
        diag.update(time_s=t, last_change=change)
        raise NumericalError(f"steady state not reached within {max_time:.3e} s: {diag}")
    rho = _unvec(x)
    diag.update(time_s=t, last_change=change,
                residual=float(np.max(np.abs(gen @ x))), trace=float(np.trace(rho).real))
    return rho, diag


def bloch_oracle(params, tau_grid, step_fraction=1 / 200):
    """Reference g1/g2 from the Bloch equations and quantum regression.

    The steady state is found by fixed-step RK4 integration; two-time
    correlations are then propagated with the same integrator, with step no
    larger than ``step_fraction * min(1/gamma, 1/omega)``. Negative delays are
    evaluated at ``|tau|``.
    """
    tau_grid = np.asarray(tau_grid, dtype=float)
    start, step = grid_step(tau_grid)
    rho, diag = steady_state(params, step_fraction)
    pop = float(rho[1, 1].real)
    gen = liouvillian(params)
    h_max = step_fraction / max(params.gamma, params.omega)

    abs_tau = np.abs(tau_grid)
    order = np.argsort(abs_tau, kind="stable")
    x1 = _vec(_SM @ rho)
    x2 = _vec(_SM @ rho @ _SP)
    obs1 = _vec(_SP.T)  # Tr[A X] = vec(A^T) . vec(X)
    obs2 = _vec((_SP @ _SM).T)
    G1 = np.empty(tau_grid.size, dtype=complex)
    G2 = np.empty(tau_grid.size, dtype=complex)
    cache = {}
    t_prev = 0.0
    total_steps = 0
    for i in order:
        dt = abs_tau[i] - t_prev
        if dt > 0:
            n = max(1, math.ceil(dt / h_max - 1e-9))
            key = (n, round(dt / step, 9))
            if key not in cache:
                cache[key] = np.linalg.matrix_power(_rk4_matrix(gen, dt / n), n)
            x1 = cache[key] @ x1
            x2 = cache[key] @ x2
            total_steps += n
            t_prev = abs_tau[i]
        G1[i] = obs1 @ x1
        G2[i] = obs2 @ x2
    diag.update(propagation_steps=total_steps, max_imag_G1=float(np.max(np.abs(G1.imag))))
    meta = {"source": "bloch_oracle", "population": pop}
    if pop <= 0:
        return OracleResult(None, None, 0.0, G1.real, G2.real, diag)
    g1 = CorrelationCurve(start, step, G1.real / pop, "g1_normalized", dict(meta))
    g2 = CorrelationCurve(start, step, np.maximum(G2.real / pop ** 2, 0.0), "g2", dict(meta))
    return OracleResult(g1, g2, pop, G1.real, G2.real, diag)


def g1_curve(params, tau_grid):
    return CorrelationCurve.from_grid(tau_grid, g1_normalized(params, tau_grid), "g1_normalized")


def g2_curve(params, tau_grid):
    return CorrelationCurve.from_grid(tau_grid, g2_tls(params, tau_grid), "g2")
