"""Photon-statistics toolkit for resonantly driven quantum-dot emitters.

Closed-form and Bloch-equation correlation functions, measured-model g2
with laser background and detector jitter, two-photon interference between
two emitters, lineshape and decay fitting, and device yield estimates.
"""

from .correlation import (BunchingEnvelope, MeasuredG2Model, g2_measured, g2zero_to_impurity,
                          impurity_to_g2zero, mix_impurity)
from .curves import CorrelationCurve, positive_grid, symmetric_grid
from .fitmodels import MODELS, fit_named
from .fitting import FitProblem, FitResult, fit, least_squares_fit
from .hom import (FixedDetuning, GaussianDetuning, HomConfig, combine_diffusion,
                  ensemble_average_parallel, g2_cross, g2_parallel, monte_carlo_parallel,
                  simulate_hom, solve_r, visibility)
from .irf import IrfParams, convolve_irf, jitter_limited_g2zero, jitter_sweep
from .lineshapes import (DecayModelParams, decay_intensity, gaussian, lorentzian,
                         power_broadened_fwhm, saturation_intensity, voigt)
from .tls import (EmitterParams, NumericalError, bloch_oracle, g1_curve, g1_normalized, g2_curve,
                  g2_tls)
from .yields import YieldConfig, expected_pairs, pair_probability, yield_map

__version__ = "0.1.0"

__all__ = [
    "BunchingEnvelope", "CorrelationCurve", "DecayModelParams", "EmitterParams", "FitProblem",
    "FitResult", "FixedDetuning", "GaussianDetuning", "HomConfig", "IrfParams", "MODELS",
    "MeasuredG2Model", "NumericalError", "YieldConfig", "bloch_oracle", "combine_diffusion",
    "convolve_irf", "decay_intensity", "ensemble_average_parallel", "expected_pairs", "fit",
    "fit_named", "g1_curve", "g1_normalized", "g2_cross", "g2_curve", "g2_measured",
    "g2_parallel", "g2_tls", "g2zero_to_impurity", "gaussian", "impurity_to_g2zero",
    "jitter_limited_g2zero", "jitter_sweep", "least_squares_fit", "lorentzian", "mix_impurity",
    "monte_carlo_parallel", "pair_probability", "positive_grid", "power_broadened_fwhm",
    "saturation_intensity", "simulate_hom", "solve_r", "symmetric_grid", "visibility", "voigt",
    "yield_map",
]
