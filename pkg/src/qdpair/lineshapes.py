"""Spectral lineshapes, saturation and power broadening, and lifetime decays.

Spectral quantities are linewidth-style frequencies (rate / 2pi) in MHz;
Rabi frequencies are angular (rad/s). Decay curves use ns and ns^-1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate
from scipy.special import roots_hermite, wofz

from .irf import IrfParams, convolve_gaussian
from .tls import TWO_PI_MHZ

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class LineshapeParams:
    center: float = 0.0
    lorentz_fwhm: float = 0.0
    gauss_sigma: float = 0.0
    amplitude: float = 1.0
    offset: float = 0.0

    def __post_init__(self):
        if self.lorentz_fwhm < 0 or self.gauss_sigma < 0:
            raise ValueError("linewidths must be non-negative")
        if self.lorentz_fwhm == 0 and self.gauss_sigma == 0:
            raise ValueError("at least one of lorentz_fwhm, gauss_sigma must be positive")


def lorentzian(nu, center, fwhm, amplitude=1.0, offset=0.0):
    """Peak-normalized Lorentzian: ``amplitude + offset`` at ``center``."""
    x = 2.0 * (np.asarray(nu, dtype=float) - center) / fwhm
    return amplitude / (1.0 + x * x) + offset


def gaussian(nu, center, sigma, amplitude=1.0, offset=0.0):
    """Peak-normalized Gaussian with standard deviation ``sigma``."""
    x = (np.asarray(nu, dtype=float) - center) / sigma
    return amplitude * np.exp(-0.5 * x * x) + offset


def _faddeeva_density(d, lorentz_fwhm, sigma):
    z = (d + 0.5j * lorentz_fwhm) / (sigma * SQRT2)
    return wofz(z).real / (sigma * math.sqrt(2 * math.pi))


@lru_cache(maxsize=8)
def _hermite(deg):
    return roots_hermite(deg)


def _quadrature_density(d, lorentz_fwhm, sigma):
    # Area-normalized Lorentzian averaged over a Gaussian shift of its centre.
    hwhm = 0.5 * lorentz_fwhm
    a = hwhm / (SQRT2 * sigma)  # distance of the Lorentzian poles in Hermite units
    if a < 0.2:
        def point(x):
            f = lambda s: hwhm / math.pi / ((x - s) ** 2 + hwhm ** 2) * math.exp(-0.5 * (s / sigma) ** 2)
            lim = 12 * sigma
            val, _ = integrate.quad(f, -lim, lim, points=[x] if abs(x) < lim else None,
                                    limit=400, epsabs=0, epsrel=1e-12)
            return val / (sigma * math.sqrt(2 * math.pi))
        return np.vectorize(point, otypes=[float])(d)
    deg = int(min(max(math.ceil(60.0 / a ** 2), 64), 4000))
    x, w = _hermite(deg)
    d = d[..., None] - SQRT2 * sigma * x
    return (w * (hwhm / math.pi) / (d * d + hwhm * hwhm)).sum(axis=-1) / math.sqrt(math.pi)


def voigt_density(nu, center, lorentz_fwhm, gauss_sigma, method="faddeeva"):
    """Area-normalized Voigt profile (per MHz) for positive widths."""
    if not (lorentz_fwhm > 0 and gauss_sigma > 0):
        raise ValueError("voigt_density needs positive Lorentzian and Gaussian widths")
    d = np.asarray(nu, dtype=float) - center
    if method == "faddeeva":
        return _faddeeva_density(d, lorentz_fwhm, gauss_sigma)
    if method == "quadrature":
        return _quadrature_density(d, lorentz_fwhm, gauss_sigma)
    raise ValueError(f"unknown Voigt method {method!r}")


def voigt(nu, center, lorentz_fwhm, gauss_sigma, amplitude=1.0, offset=0.0, method="faddeeva"):
    """Peak-normalized Voigt profile.

    ``method="faddeeva"`` uses the real part of the scaled complex error
    function; ``method="quadrature"`` convolves numerically and serves as an
    independent check. Either width may be zero, giving the pure limits.
    """
    if lorentz_fwhm < 0 or gauss_sigma < 0:
        raise ValueError("linewidths must be non-negative")
    if gauss_sigma == 0:
        return lorentzian(nu, center, lorentz_fwhm, amplitude, offset)
    if lorentz_fwhm == 0:
        return gaussian(nu, center, gauss_sigma, amplitude, offset)
    shape = (voigt_density(nu, center, lorentz_fwhm, gauss_sigma, method)
             / voigt_density(center, center, lorentz_fwhm, gauss_sigma, method))
    return amplitude * shape + offset


def lineshape(nu, params, kind="voigt"):
    if kind == "lorentzian":
        return lorentzian(nu, params.center, params.lorentz_fwhm, params.amplitude, params.offset)
    if kind == "gaussian":
        return gaussian(nu, params.center, params.gauss_sigma, params.amplitude, params.offset)
    return voigt(nu, params.center, params.lorentz_fwhm, params.gauss_sigma,
                 params.amplitude, params.offset)


# -- power dependence -------------------------------------------------------------


@dataclass(frozen=True)
class SaturationParams:
    i_inf: float
    p_sat: float
    b_offset: float = 0.0  # MHz

    def __post_init__(self):
        if not (self.i_inf > 0 and self.p_sat > 0 and self.b_offset >= 0):
            raise ValueError("need i_inf > 0, p_sat > 0 and b_offset >= 0")


def saturation_intensity(power, i_inf, p_sat):
    """``I_inf / (1 + P_sat / P)`` for strictly positive power."""
    power = np.asarray(power, dtype=float)
    if np.any(power <= 0):
        raise ValueError("saturation curve needs strictly positive power")
    out = i_inf / (1.0 + p_sat / power)
    return out if out.ndim else float(out)


def rabi_from_power(power, p_sat, gamma):
    """Rabi frequency reached at ``power``, in the units of ``gamma``.

    Matches the saturation curve to the resonant two-level population, so
    ``power = 2 * p_sat`` drives at ``omega = gamma``.
    """
    if not p_sat > 0:
        raise ValueError("p_sat must be positive")
    power = np.asarray(power, dtype=float)
    if np.any(power < 0):
        raise ValueError("power must be non-negative")
    out = gamma / SQRT2 * np.sqrt(power / p_sat)
    return out if out.ndim else float(out)


def power_from_rabi(omega, p_sat, gamma):
    return 2.0 * p_sat * (np.asarray(omega, dtype=float) / gamma) ** 2


def power_broadened_fwhm(omega, gamma_fwhm_mhz, b_mhz=0.0):
    """Resonance-fluorescence linewidth (MHz) at Rabi frequency ``omega`` (rad/s).

    ``gamma_fwhm_mhz`` is the natural linewidth gamma/2pi; ``b_mhz`` collects
    broadening not caused by the drive.
    """
    gamma = gamma_fwhm_mhz * TWO_PI_MHZ
    omega = np.asarray(omega, dtype=float)
    out = np.sqrt(gamma * gamma + 2.0 * omega * omega) / TWO_PI_MHZ + b_mhz
    return out if out.ndim else float(out)


# -- time-resolved decay ------------------------------------------------------------


@dataclass(frozen=True)
class DecayModelParams:
    """Double exponential with optional fine-structure beating on the fast part.

    Rates in ns^-1, ``fss_splitting`` in GHz (splitting / 2pi), ``t0`` in ns.
    """

    gamma_fast: float
    gamma_slow: float
    amp_fast: float
    amp_slow: float = 0.0
    fss_splitting: float | None = None
    beat_visibility: float = 0.0
    beat_phase: float = 0.0
    irf: IrfParams = field(default_factory=IrfParams)
    t0: float = 0.0

    def __post_init__(self):
        if not (self.gamma_fast > 0 and self.gamma_slow > 0):
            raise ValueError("decay rates must be positive")
        if not self.gamma_slow < self.gamma_fast:
            raise ValueError("gamma_slow must be smaller than gamma_fast")
        if not 0 <= self.beat_visibility <= 1:
            raise ValueError("beat_visibility must lie in [0, 1]")
        if self.fss_splitting is None and self.beat_visibility:
            raise ValueError("beating needs a fine-structure splitting")


def decay_intensity(t, params):
    """Time-resolved intensity on a uniform grid ``t`` (ns), IRF included.

    Samples are treated as histogram bins centred on ``t``. The IRF fwhm in
    ``params.irf`` is in seconds, as elsewhere in the package.
    """
    t = np.asarray(t, dtype=float)
    dt = t - params.t0
    if t.size > 1:
        # Each sample is a histogram bin; the onset bin is weighted by the
        # fraction after t0, keeping the model continuous in t0.
        on = np.clip(dt / float(t[1] - t[0]) + 0.5, 0.0, 1.0)
    else:
        on = (dt >= 0).astype(float)
    x = np.maximum(dt, 0.0)
    fast = params.amp_fast * np.exp(-params.gamma_fast * x)
    if params.fss_splitting is not None and params.beat_visibility:
        fast = fast * (1.0 + params.beat_visibility
                       * np.cos(2 * math.pi * params.fss_splitting * x + params.beat_phase))
    raw = on * (fast + params.amp_slow * np.exp(-params.gamma_slow * x))
    if params.irf.fwhm == 0 or t.size < 2:
        return raw
    step_ns = float(t[1] - t[0])
    return convolve_gaussian(raw, step_ns, params.irf.fwhm * 1e9)
