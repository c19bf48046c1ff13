"""Two-photon interference between two independent emitters.

Coincidence models for cross-polarized (distinguishable) and co-polarized
photons, the long-delay normalization constant, visibility, and averaging
over a Gaussian distribution of mutual detuning.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .correlation import mix_impurity
from .curves import CorrelationCurve, grid_step
from .irf import convolve_gaussian
from .tls import EmitterParams, elastic_fraction, g1_normalized, g2_tls


@dataclass(frozen=True)
class FixedDetuning:
    delta_omega: float = 0.0  # rad/s


@dataclass(frozen=True)
class GaussianDetuning:
    sigma: float  # rad/s

    def __post_init__(self):
        if not self.sigma >= 0:
            raise ValueError("detuning spread must be non-negative")


@dataclass(frozen=True)
class HomConfig:
    """Two emitters feeding the interferometer.

    ``weight_a``/``weight_b`` are intensity fractions ``I_n / (I_A + I_B)``.
    ``r_constant`` of ``None`` means "solve from the long-delay condition".
    """

    emitter_a: EmitterParams
    emitter_b: EmitterParams
    weight_a: float
    weight_b: float | None = None
    g2zero_a: float = 0.0
    g2zero_b: float = 0.0
    r_constant: float | None = None
    detuning: FixedDetuning | GaussianDetuning = field(default_factory=FixedDetuning)

    def __post_init__(self):
        if self.weight_b is None:
            object.__setattr__(self, "weight_b", 1.0 - self.weight_a)
        if self.weight_a < 0 or self.weight_b < 0:
            raise ValueError("intensity weights must be non-negative")
        if abs(self.weight_a + self.weight_b - 1.0) > 1e-9:
            raise ValueError("intensity weights must sum to 1")
        for name in ("g2zero_a", "g2zero_b"):
            # g2(0) = 1 (zeta = 0) is the fully distinguishable limit.
            if not 0 <= getattr(self, name) <= 1:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.r_constant is not None and not self.r_constant > 0:
            raise ValueError("R must be positive")

    @property
    def zeta_a(self):
        return purity_factor(self.g2zero_a)

    @property
    def zeta_b(self):
        return purity_factor(self.g2zero_b)

    def swapped(self):
        return HomConfig(self.emitter_b, self.emitter_a, self.weight_b, self.weight_a,
                         self.g2zero_b, self.g2zero_a, self.r_constant, self.detuning)


def purity_factor(g2zero):
    """``sqrt(1 - g2(0))``: amplitude of the single-photon part of the field."""
    return math.sqrt(1.0 - g2zero)


def combine_diffusion(sigma_a, sigma_b):
    """Spread of the mutual detuning for uncorrelated Gaussian diffusion."""
    return math.hypot(sigma_a, sigma_b)


def _aligned(*curves):
    first = curves[0]
    for c in curves[1:]:
        if not first.same_grid(c):
            raise ValueError("correlation curves are sampled on different delay grids")


def g2_cross(config, g2_a, g2_b):
    """Coincidences for orthogonally polarized (distinguishable) photons."""
    _aligned(g2_a, g2_b)
    ca, cb = config.weight_a, config.weight_b
    values = ca * ca * g2_a.values + cb * cb * g2_b.values + 2 * ca * cb
    return g2_a.with_values(values, "g2_cross", source="g2_cross")


def solve_r(config):
    """Normalization that makes the co-polarized curve tend to 1 at long delay.

    Uses the elastic (long-delay) plateau of each emitter's ``|g1|`` at zero
    detuning.
    """
    overlap = (config.zeta_a * config.zeta_b
               * elastic_fraction(config.emitter_a) * elastic_fraction(config.emitter_b))
    denom = 1.0 - overlap
    if denom <= 1e-15:
        raise ValueError("R is undefined: interference term does not decay (undriven ideal emitters)")
    return 1.0 / denom


def _r_of(config, r):
    if r is not None:
        return r
    if config.r_constant is not None:
        return config.r_constant
    return solve_r(config)


def _parallel_values(config, g2_a, g2_b, g1_a, g1_b, phase_factor, r):
    ca, cb = config.weight_a, config.weight_b
    overlap = config.zeta_a * config.zeta_b * np.abs(g1_a.values) * np.abs(g1_b.values)
    return (ca * ca * g2_a.values + cb * cb * g2_b.values
            + 2 * r * ca * cb * (1.0 - overlap * phase_factor))


def g2_parallel(config, g2_a, g2_b, g1_a, g1_b, delta_omega=0.0, r=None):
    """Coincidences for co-polarized photons at a fixed mutual detuning (rad/s)."""
    _aligned(g2_a, g2_b, g1_a, g1_b)
    r = _r_of(config, r)
    tau = g2_a.tau
    values = _parallel_values(config, g2_a, g2_b, g1_a, g1_b, np.cos(delta_omega * tau), r)
    return g2_a.with_values(values, "g2_parallel", source="g2_parallel", r=r,
                            delta_omega=delta_omega)


def gaussian_dephasing_factor(tau, sigma):
    """Mean of ``cos(dw * tau)`` for ``dw ~ N(0, sigma**2)``."""
    return np.exp(-0.5 * (sigma * np.asarray(tau, dtype=float)) ** 2)


def _ensemble_sigma(config, sigma):
    if sigma is not None:
        return sigma
    if isinstance(config.detuning, GaussianDetuning):
        return config.detuning.sigma
    raise ValueError("ensemble averaging needs a Gaussian detuning spread")


def ensemble_average_parallel(config, g2_a, g2_b, g1_a, g1_b, sigma=None, r=None):
    """Co-polarized curve averaged over Gaussian mutual detuning (analytic)."""
    _aligned(g2_a, g2_b, g1_a, g1_b)
    sigma = _ensemble_sigma(config, sigma)
    r = _r_of(config, r)
    factor = gaussian_dephasing_factor(g2_a.tau, sigma)
    values = _parallel_values(config, g2_a, g2_b, g1_a, g1_b, factor, r)
    return g2_a.with_values(values, "g2_parallel", source="ensemble_analytic", r=r,
                            sigma_detuning=sigma)


def monte_carlo_parallel(config, g2_a, g2_b, g1_a, g1_b, n_samples, seed=0, sigma=None,
                         r=None, n_chunks=1):
    """Brute-force ensemble average over sampled detunings.

    Returns ``(curve, standard_error)``. Samples are drawn in ``n_chunks``
    independent streams spawned from ``seed`` so chunked evaluation is
    reproducible regardless of how chunks are scheduled.
    """
    _aligned(g2_a, g2_b, g1_a, g1_b)
    sigma = _ensemble_sigma(config, sigma)
    r = _r_of(config, r)
    tau = g2_a.tau
    children = np.random.SeedSequence(seed).spawn(n_chunks)
    sizes = [n_samples // n_chunks + (i < n_samples % n_chunks) for i in range(n_chunks)]
    total = np.zeros_like(tau)
    total_sq = np.zeros_like(tau)
    for child, size in zip(children, sizes):
        rng = np.random.default_rng(child)
        dw = rng.normal(0.0, sigma, size)
        for start in range(0, size, 4096):
            c = np.cos(np.outer(dw[start:start + 4096], tau))
            total += c.sum(axis=0)
            total_sq += (c * c).sum(axis=0)
    mean = total / n_samples
    var = np.maximum(total_sq / n_samples - mean * mean, 0.0) * n_samples / max(n_samples - 1, 1)
    values = _parallel_values(config, g2_a, g2_b, g1_a, g1_b, mean, r)
    ca, cb = config.weight_a, config.weight_b
    slope = 2 * r * ca * cb * config.zeta_a * config.zeta_b * np.abs(g1_a.values * g1_b.values)
    stderr = slope * np.sqrt(var / n_samples)
    curve = g2_a.with_values(values, "g2_parallel", source="ensemble_monte_carlo", r=r,
                             sigma_detuning=sigma, n_samples=n_samples, seed=seed)
    return curve, stderr


def visibility(parallel, cross):
    """Pointwise ``1 - g2_parallel / g2_cross``."""
    _aligned(parallel, cross)
    bad = np.flatnonzero(~(cross.values > 0))
    if bad.size:
        i = int(bad[0])
        raise ValueError(f"g2_cross is not positive at index {i} (tau = {cross.tau[i]:.6e} s)")
    return parallel.with_values(1.0 - parallel.values / cross.values, "visibility",
                                source="visibility")


def peak_fwhm(curve):
    """Full width of the central peak at half its zero-delay value.

    Crossings are located by linear interpolation on each side of ``tau = 0``.
    Returns ``inf`` when the curve never drops below half height.
    """
    tau, v = curve.tau, curve.values
    i0 = int(np.argmin(np.abs(tau)))
    half = 0.5 * v[i0]
    edges = []
    for direction in (1, -1):
        i = i0
        while 0 <= i + direction < tau.size and v[i + direction] >= half:
            i += direction
        j = i + direction
        if not 0 <= j < tau.size:
            return math.inf
        frac = (v[i] - half) / (v[i] - v[j])
        edges.append(tau[i] + frac * (tau[j] - tau[i]))
    return abs(edges[0] - edges[1])


# -- convenience pipeline -------------------------------------------------------


def emitter_g2_curve(emitter, g2zero, tau_grid, irf_fwhm=0.0):
    """g2 of one emitter whose zero-delay value is set to ``g2zero`` by leakage."""
    tau_grid = np.asarray(tau_grid, dtype=float)
    _, step = grid_step(tau_grid)
    if not 0 <= g2zero <= 1:
        raise ValueError("g2zero must lie in [0, 1]")
    values = mix_impurity(g2_tls(emitter, tau_grid), 1.0 - math.sqrt(1.0 - g2zero))
    values = convolve_gaussian(values, step, irf_fwhm)
    return CorrelationCurve.from_grid(tau_grid, 0.5 * (values + values[::-1]), "g2",
                                      source="emitter_g2", g2zero=g2zero)


@dataclass
class HomResult:
    g2_a: CorrelationCurve
    g2_b: CorrelationCurve
    g1_a: CorrelationCurve
    g1_b: CorrelationCurve
    cross: CorrelationCurve
    parallel: CorrelationCurve
    visibility: CorrelationCurve
    r: float

    def summary(self):
        i0 = int(np.argmin(np.abs(self.visibility.tau)))
        return {
            "R": self.r,
            "V_peak": float(self.visibility.values[i0]),
            "g2_parallel_zero": float(self.parallel.values[i0]),
            "g2_cross_zero": float(self.cross.values[i0]),
            "visibility_fwhm_s": peak_fwhm(self.visibility),
        }


def simulate_hom(config, tau_grid, irf_fwhm=0.0, sigma=None):
    """Build every curve of the interference measurement on a symmetric grid.

    With ``sigma`` (or a Gaussian detuning in ``config``) the co-polarized
    curve is ensemble averaged; otherwise the fixed detuning is used.
    """
    g2_a = emitter_g2_curve(config.emitter_a, config.g2zero_a, tau_grid, irf_fwhm)
    g2_b = emitter_g2_curve(config.emitter_b, config.g2zero_b, tau_grid, irf_fwhm)
    g1_a = CorrelationCurve.from_grid(tau_grid, g1_normalized(config.emitter_a, tau_grid), "g1_normalized")
    g1_b = CorrelationCurve.from_grid(tau_grid, g1_normalized(config.emitter_b, tau_grid), "g1_normalized")
    r = _r_of(config, None)
    cross = g2_cross(config, g2_a, g2_b)
    if sigma is not None or isinstance(config.detuning, GaussianDetuning):
        par = ensemble_average_parallel(config, g2_a, g2_b, g1_a, g1_b, sigma, r)
    else:
        par = g2_parallel(config, g2_a, g2_b, g1_a, g1_b, config.detuning.delta_omega, r)
    return HomResult(g2_a, g2_b, g1_a, g1_b, cross, par, visibility(par, cross), r)
