"""Gaussian detector timing jitter."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .curves import symmetric_grid
from .tls import TWO_PI_MHZ, EmitterParams, g2_tls

FWHM_PER_SIGMA = 2 * math.sqrt(2 * math.log(2))
KERNEL_HALF_WIDTH = 5.0  # in standard deviations


class GridTooCoarseError(ValueError):
    """The sampling step cannot resolve the instrument response."""


@dataclass(frozen=True)
class IrfParams:
    """Gaussian instrument response; ``fwhm`` in seconds, zero disables it."""

    fwhm: float = 0.0

    def __post_init__(self):
        if not self.fwhm >= 0:
            raise ValueError(f"IRF fwhm must be non-negative, got {self.fwhm!r}")

    @property
    def sigma(self):
        return self.fwhm / FWHM_PER_SIGMA

    @classmethod
    def from_ps(cls, fwhm_ps):
        return cls(fwhm_ps * 1e-12)


def fwhm_to_sigma(fwhm):
    return fwhm / FWHM_PER_SIGMA


def sigma_to_fwhm(sigma):
    return sigma * FWHM_PER_SIGMA


def gaussian_kernel(step, fwhm):
    """Sampled Gaussian truncated at +/-5 sigma and scaled to unit sum."""
    if fwhm <= 0:
        return np.ones(1)
    if step > fwhm / 4:
        raise GridTooCoarseError(
            f"grid step {step:.3e} s exceeds fwhm/4 = {fwhm / 4:.3e} s")
    sigma = fwhm_to_sigma(fwhm)
    half = int(math.floor(KERNEL_HALF_WIDTH * sigma / step))
    x = np.arange(-half, half + 1) * step
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def convolve_gaussian(values, step, fwhm):
    """Convolve uniformly sampled ``values`` with the Gaussian IRF.

    The ends are extended with their edge values, so the output has the
    input's length and a constant signal is returned unchanged.
    """
    values = np.asarray(values, dtype=float)
    kernel = gaussian_kernel(step, fwhm)
    if kernel.size == 1:
        return values.copy()
    half = kernel.size // 2
    padded = np.pad(values, half, mode="edge")
    return np.convolve(padded, kernel, mode="valid")


def convolve_irf(curve, irf):
    """Return ``curve`` convolved with ``irf`` on the same delay grid."""
    out = convolve_gaussian(curve.values, curve.tau_step, irf.fwhm)
    return curve.with_values(out, irf_fwhm_s=irf.fwhm)


def jitter_limited_g2zero(gamma, irf, omega_ratio=0.3, samples_per_fwhm=40):
    """Zero-delay g2 of an ideal emitter as seen through the IRF alone.

    ``gamma`` is the decay rate (rad/s); the drive is ``omega_ratio * gamma``.
    """
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    if irf.fwhm == 0:
        return 0.0
    step = irf.fwhm / samples_per_fwhm
    params = EmitterParams(gamma, omega_ratio * gamma)
    tau = symmetric_grid(KERNEL_HALF_WIDTH * irf.sigma + 2 * step, step)
    smoothed = convolve_gaussian(g2_tls(params, tau), step, irf.fwhm)
    return float(smoothed[tau.size // 2])


DEFAULT_SWEEP_MHZ = np.linspace(100.0, 500.0, 81)


def jitter_sweep(irf, gamma_mhz_over_2pi=DEFAULT_SWEEP_MHZ, omega_ratio=0.3):
    """Jitter-limited g2(0) over decay rates given as gamma/2pi in MHz.

    Returns a 2-column array ``(gamma_mhz_over_2pi, g2_zero)``.
    """
    axis = np.asarray(gamma_mhz_over_2pi, dtype=float)
    g2 = [jitter_limited_g2zero(g * TWO_PI_MHZ, irf, omega_ratio) for g in axis]
    return np.column_stack([axis, g2])


def sweep_to_csv(rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["gamma_mhz_over_2pi", "g2_zero"])
    for g, v in rows:
        writer.writerow([repr(float(g)), repr(float(v))])
    return buf.getvalue()
