"""Named fit models with parameter names and data-driven starting guesses."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .correlation import g2_model_function
from .fitting import FitProblem, fit
from .irf import IrfParams
from .lineshapes import (DecayModelParams, decay_intensity, gaussian, lorentzian,
                         power_broadened_fwhm, saturation_intensity, voigt)
from .tls import TWO_PI_MHZ


@dataclass(frozen=True)
class FitModel:
    name: str
    params: tuple
    function: object
    guess: object
    bounds: dict
    x_unit: str
    fixed: tuple = ()


def _peak_guess(x, y):
    offset = float(np.min(y))
    amp = float(np.max(y)) - offset
    center = float(x[np.argmax(y)])
    above = x[y >= offset + amp / 2]
    width = float(above.max() - above.min()) if above.size > 1 else float(np.ptp(x)) / 10
    return center, max(width, 1e-12), amp, offset


def _lorentz_guess(x, y):
    c, w, a, o = _peak_guess(x, y)
    return {"center": c, "fwhm": w, "amplitude": a, "offset": o}


def _gauss_guess(x, y):
    c, w, a, o = _peak_guess(x, y)
    return {"center": c, "sigma": w / 2.3548, "amplitude": a, "offset": o}


def _voigt_guess(x, y):
    c, w, a, o = _peak_guess(x, y)
    return {"center": c, "lorentz_fwhm": w / 2, "gauss_sigma": w / 4.7, "amplitude": a, "offset": o}


def _saturation_guess(x, y):
    i_inf = float(np.max(y)) * 1.2
    # P_sat from the point closest to half of the asymptote.
    half = x[np.argmin(np.abs(y - i_inf / 2))]
    return {"i_inf": i_inf, "p_sat": float(half)}


def _broadening_guess(x, y):
    return {"gamma_fwhm_mhz": float(np.min(y)) * 0.8, "b_mhz": float(np.min(y)) * 0.2}


def _decay_guess(x, y):
    i0 = int(np.argmax(y))
    peak = float(y[i0])
    tail = y[i0:]
    t = x[i0:] - x[i0]
    late = t > 0.6 * t.max()
    slow = 0.2
    if np.count_nonzero(late & (tail > 0)) > 2:
        m = late & (tail > 0)
        slope = np.polyfit(t[m], np.log(tail[m]), 1)[0]
        slow = float(max(-slope, 1e-3))
    fss, vis = _beat_guess(t, tail)
    return {"amp_fast": peak, "gamma_fast": 1.0, "amp_slow": peak * 0.1, "gamma_slow": slow,
            "fss_ghz": fss, "beat_visibility": vis, "beat_phase": 0.0,
            "t0": float(x[i0]), "irf_fwhm_ps": 0.0}


def _beat_guess(t, tail):
    # Strongest oscillation left after removing a smooth exponential trend.
    early = (t < 4.0) & (tail > 0)
    if np.count_nonzero(early) < 16:
        return 3.0, 0.1
    te, ye = t[early], tail[early]
    trend = np.exp(np.polyval(np.polyfit(te, np.log(ye), 2), te))
    resid = ye / trend - 1.0
    step = float(te[1] - te[0])
    spec = np.abs(np.fft.rfft(resid * np.hanning(resid.size)))
    freqs = np.fft.rfftfreq(resid.size, step)
    usable = freqs > 0.5
    if not usable.any():
        return 3.0, 0.1
    k = np.flatnonzero(usable)[np.argmax(spec[usable])]
    vis = float(np.clip(2 * np.std(resid) * math.sqrt(2), 0.05, 0.9))
    return float(freqs[k]), vis


def _g2_guess(x, y):
    return {"gamma_per_ns": 1.0, "omega_over_gamma": 0.3, "impurity": 0.01,
            "bunching_amplitude": 0.0, "bunching_time_ns": 5.0, "irf_fwhm_ps": 0.0}


def _decay_fn(p, t):
    (amp_fast, gamma_fast, amp_slow, gamma_slow, fss, vis, phase, t0, irf_ps) = p
    params = DecayModelParams(
        gamma_fast=gamma_fast, gamma_slow=min(gamma_slow, gamma_fast * (1 - 1e-12)),
        amp_fast=amp_fast, amp_slow=amp_slow, fss_splitting=fss,
        beat_visibility=float(np.clip(vis, 0, 1)), beat_phase=phase,
        irf=IrfParams(max(irf_ps, 0.0) * 1e-12), t0=t0)
    return decay_intensity(t, params)


def _g2_fn(p, tau_ns):
    gamma_ns, ratio, xi, amp, tb_ns, irf_ps = p
    return g2_model_function(np.asarray(tau_ns) * 1e-9, gamma_ns * 1e9, ratio, xi, amp,
                             tb_ns * 1e-9, irf_ps * 1e-12)


MODELS = {
    "lorentzian": FitModel(
        "lorentzian", ("center", "fwhm", "amplitude", "offset"),
        lambda p, x: lorentzian(x, *p), _lorentz_guess,
        {"fwhm": (0, None)}, "MHz"),
    "gaussian": FitModel(
        "gaussian", ("center", "sigma", "amplitude", "offset"),
        lambda p, x: gaussian(x, *p), _gauss_guess,
        {"sigma": (0, None)}, "MHz"),
    "voigt": FitModel(
        "voigt", ("center", "lorentz_fwhm", "gauss_sigma", "amplitude", "offset"),
        lambda p, x: voigt(x, *p), _voigt_guess,
        {"lorentz_fwhm": (0, None), "gauss_sigma": (0, None)}, "MHz"),
    "saturation": FitModel(
        "saturation", ("i_inf", "p_sat"),
        lambda p, x: saturation_intensity(x, *p), _saturation_guess,
        {"i_inf": (1e-300, None), "p_sat": (1e-300, None)}, "power"),
    "power-broadening": FitModel(
        "power-broadening", ("gamma_fwhm_mhz", "b_mhz"),
        lambda p, x: power_broadened_fwhm(np.asarray(x) * TWO_PI_MHZ, p[0], p[1]),
        _broadening_guess, {"gamma_fwhm_mhz": (0, None), "b_mhz": (0, None)},
        "omega_mhz_over_2pi"),
    "decay": FitModel(
        "decay",
        ("amp_fast", "gamma_fast", "amp_slow", "gamma_slow", "fss_ghz", "beat_visibility",
         "beat_phase", "t0", "irf_fwhm_ps"),
        _decay_fn, _decay_guess,
        {"gamma_fast": (1e-6, None), "gamma_slow": (1e-6, None), "amp_slow": (0, None),
         "beat_visibility": (0, 1), "irf_fwhm_ps": (0, None)},
        "ns", fixed=("irf_fwhm_ps",)),
    "g2": FitModel(
        "g2",
        ("gamma_per_ns", "omega_over_gamma", "impurity", "bunching_amplitude",
         "bunching_time_ns", "irf_fwhm_ps"),
        _g2_fn, _g2_guess,
        {"gamma_per_ns": (1e-6, None), "omega_over_gamma": (0, None), "impurity": (0, 0.999),
         "bunching_amplitude": (0, None), "bunching_time_ns": (1e-6, None),
         "irf_fwhm_ps": (0, None)},
        "ns", fixed=("omega_over_gamma", "irf_fwhm_ps")),
}


def fit_named(name, x, y, sigma=None, initial=None, fixed=None, bounds=None):
    """Fit one of :data:`MODELS` to ``(x, y[, sigma])``.

    ``initial`` overrides the automatic guesses by parameter name; ``fixed``
    lists parameter names held constant (the model's defaults when ``None``);
    ``bounds`` maps names to ``(lo, hi)``.
    """
    try:
        model = MODELS[name]
    except KeyError:
        raise ValueError(f"unknown model {name!r}; choose from {sorted(MODELS)}") from None
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    start = model.guess(x, y)
    for key, value in (initial or {}).items():
        if key not in model.params:
            raise ValueError(f"model {name!r} has no parameter {key!r}")
        start[key] = value
    fixed_names = model.fixed if fixed is None else tuple(fixed)
    for key in fixed_names:
        if key not in model.params:
            raise ValueError(f"model {name!r} has no parameter {key!r}")
    merged = dict(model.bounds)
    merged.update(bounds or {})
    problem = FitProblem(
        model.function, x, y,
        [start[k] for k in model.params],
        sigma=sigma,
        bounds=[merged.get(k) for k in model.params],
        fixed=[k in fixed_names for k in model.params],
        names=list(model.params),
    )
    return fit(problem)
