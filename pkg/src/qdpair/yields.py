"""Expected number of spectrally matched emitter pairs for a device layout."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erf

PAIR_CONVENTIONS = ("squared", "combinations")


@dataclass(frozen=True)
class YieldConfig:
    """Device and ensemble description.

    ``sigma_nm`` is the inhomogeneous spread of emission wavelengths,
    ``area_um2`` the active device area and ``penalty`` the fraction of pairs
    kept after device imperfections. ``pair_convention`` selects how emitters
    are paired: ``"squared"`` counts ``(A rho)**2`` ordered pairs,
    ``"combinations"`` counts ``N (N - 1) / 2`` unordered ones.
    """

    area_um2: float
    density_per_um2: float
    sigma_nm: float = 15.0
    center_nm: float = 930.0
    penalty: float = 0.5
    pair_convention: str = "squared"

    def __post_init__(self):
        if not self.area_um2 > 0 or not self.sigma_nm > 0 or not self.center_nm > 0:
            raise ValueError("area, sigma and center must be positive")
        if not self.density_per_um2 >= 0:
            raise ValueError("density must be non-negative")
        if not 0 < self.penalty <= 1:
            raise ValueError("penalty must lie in (0, 1]")
        if self.pair_convention not in PAIR_CONVENTIONS:
            raise ValueError(f"pair_convention must be one of {PAIR_CONVENTIONS}")

    @classmethod
    def waveguide(cls, length_um=40.0, width_um=0.2, **kwargs):
        return cls(area_um2=length_um * width_um, **kwargs)


def pair_probability(delta_lambda_nm, sigma_nm=15.0):
    """Probability that the wavelength offset falls within the tuning range.

    Closed form of the half-normal integral ``int_0^dl sqrt(2/pi)/sigma
    exp(-l^2 / 2 sigma^2) dl``.
    """
    if not sigma_nm > 0:
        raise ValueError("sigma must be positive")
    dl = np.asarray(delta_lambda_nm, dtype=float)
    if np.any(dl < 0):
        raise ValueError("tuning range must be non-negative")
    out = erf(dl / (sigma_nm * math.sqrt(2.0)))
    return out if out.ndim else float(out)


def half_normal_density(lam, sigma_nm):
    return math.sqrt(2.0 / math.pi) / sigma_nm * np.exp(-0.5 * (np.asarray(lam) / sigma_nm) ** 2)


def pair_count(config, density=None):
    n = config.area_um2 * (config.density_per_um2 if density is None else density)
    if config.pair_convention == "squared":
        return n * n
    # N(N-1)/2 is negative below one emitter; no pairs there.
    return max(n * (n - 1) / 2, 0.0)


def expected_pairs(config, delta_lambda_nm):
    """Pairs expected within ``delta_lambda_nm`` after the penalty."""
    return config.penalty * pair_probability(delta_lambda_nm, config.sigma_nm) * pair_count(config)


@dataclass(frozen=True)
class YieldGrid:
    delta_lambda_nm: np.ndarray
    density_per_um2: np.ndarray
    counts: np.ndarray  # shape (len(delta_lambda_nm), len(density_per_um2))

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["delta_lambda_nm", "density_per_um2", "expected_pairs"])
        for i, dl in enumerate(self.delta_lambda_nm):
            for j, rho in enumerate(self.density_per_um2):
                writer.writerow([repr(float(dl)), repr(float(rho)), repr(float(self.counts[i, j]))])
        return buf.getvalue()


def _increasing(axis, name):
    axis = np.asarray(axis, dtype=float)
    if axis.ndim != 1 or axis.size == 0 or np.any(np.diff(axis) <= 0):
        raise ValueError(f"{name} axis must be strictly increasing")
    return axis


def yield_map(config, delta_lambda_nm, density_per_um2):
    """Expected pair counts over tuning range (rows) and density (columns)."""
    dl = _increasing(delta_lambda_nm, "tuning-range")
    rho = _increasing(density_per_um2, "density")
    if np.any(dl < 0) or np.any(rho < 0):
        raise ValueError("axes must be non-negative")
    prob = np.asarray(pair_probability(dl, config.sigma_nm))
    pairs = np.array([pair_count(config, r) for r in rho])
    return YieldGrid(dl, rho, config.penalty * np.outer(prob, pairs))
