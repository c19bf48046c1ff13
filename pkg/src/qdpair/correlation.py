"""Measured second-order correlation: ideal emitter plus experimental dressing.

The ideal antibunching curve is multiplied by a bunching envelope, mixed with
Poissonian laser leakage and finally smoothed by the detector response.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .curves import CorrelationCurve, grid_step, is_symmetric, symmetric_grid
from .irf import FWHM_PER_SIGMA, convolve_gaussian
from .tls import EmitterParams, g2_tls


@dataclass(frozen=True)
class BunchingEnvelope:
    """``1 + amplitude * exp(-|tau| / timescale)``; timescale in seconds."""

    amplitude: float = 0.0
    timescale: float = 1e-9

    def __post_init__(self):
        if not self.amplitude >= 0:
            raise ValueError("bunching amplitude must be non-negative")
        if not self.timescale > 0:
            raise ValueError("bunching timescale must be positive")

    def __call__(self, tau):
        return 1.0 + self.amplitude * np.exp(-np.abs(tau) / self.timescale)


@dataclass(frozen=True)
class MeasuredG2Model:
    emitter: EmitterParams
    bunching: BunchingEnvelope = field(default_factory=BunchingEnvelope)
    irf_fwhm: float = 0.0

    def __post_init__(self):
        if not self.irf_fwhm >= 0:
            raise ValueError("irf_fwhm must be non-negative")


def impurity_to_g2zero(xi):
    """Zero-delay g2 produced by a laser-leakage fraction ``xi``: ``2 xi - xi**2``."""
    if not 0 <= xi < 1:
        raise ValueError(f"impurity must lie in [0, 1), got {xi!r}")
    return 2 * xi - xi * xi


def g2zero_to_impurity(g2zero):
    """Inverse of :func:`impurity_to_g2zero` on ``[0, 1)``."""
    if not 0 <= g2zero < 1:
        raise ValueError(f"g2(0) must lie in [0, 1), got {g2zero!r}")
    return 1.0 - math.sqrt(1.0 - g2zero)


def mix_impurity(g2_ideal, xi):
    # Signal fraction (1 - xi) keeps its statistics; cross and laser terms are flat.
    keep = (1.0 - xi) ** 2
    return keep * np.asarray(g2_ideal, dtype=float) + (1.0 - keep)


def g2_measured_values(model, tau):
    """Dressed g2 on a uniform, symmetric delay grid (plain array)."""
    tau = np.asarray(tau, dtype=float)
    _, step = grid_step(tau)
    if not is_symmetric(tau):
        raise ValueError("g2_measured needs a delay grid symmetric about zero")
    dressed = g2_tls(model.emitter, tau) * model.bunching(tau)
    mixed = mix_impurity(dressed, model.emitter.impurity)
    out = convolve_gaussian(mixed, step, model.irf_fwhm)
    # Even by construction; average with the mirror to remove summation-order noise.
    return 0.5 * (out + out[::-1])


def g2_measured(model, tau_grid):
    """Model of a measured HBT histogram normalized to unity at long delay."""
    values = g2_measured_values(model, tau_grid)
    return CorrelationCurve.from_grid(
        tau_grid, values, "g2",
        source="g2_measured",
        impurity=model.emitter.impurity,
        bunching_amplitude=model.bunching.amplitude,
        bunching_timescale_s=model.bunching.timescale,
        irf_fwhm_s=model.irf_fwhm,
    )


def g2_model_function(tau_s, gamma, omega_over_gamma, impurity, bunching_amplitude,
                      bunching_time, irf_fwhm):
    """Dressed g2 at arbitrary delays, for fitting measured histograms.

    Evaluated on an internal symmetric grid fine enough for the IRF and
    linearly interpolated at ``tau_s``. Times in seconds, ``gamma`` in rad/s.
    """
    tau_s = np.asarray(tau_s, dtype=float)
    span = float(np.max(np.abs(tau_s))) if tau_s.size else 0.0
    step = min(irf_fwhm / 8 if irf_fwhm > 0 else np.inf, 0.02 / gamma)
    if tau_s.size > 1:
        step = min(step, float(np.min(np.diff(np.sort(tau_s)))) or step)
    # Reach past the kernel so edge extension cannot bias the requested delays.
    reach = 6 * irf_fwhm / FWHM_PER_SIGMA + 4 * step
    grid = symmetric_grid(span + reach, step)
    model = MeasuredG2Model(
        EmitterParams(gamma, omega_over_gamma * gamma, impurity=impurity),
        BunchingEnvelope(bunching_amplitude, bunching_time),
        irf_fwhm,
    )
    return np.interp(tau_s, grid, g2_measured_values(model, grid))
