"""Command-line interface: simulate curves, run fits, emit sweep tables.

Exit codes: 0 success, 2 configuration/input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import tempfile
from pathlib import Path

import jsonschema
import numpy as np

from .correlation import BunchingEnvelope, MeasuredG2Model, g2_measured, g2zero_to_impurity
from .curves import symmetric_grid
from .fitmodels import MODELS, fit_named
from .hom import (FixedDetuning, GaussianDetuning, HomConfig, monte_carlo_parallel,
                  simulate_hom)
from .irf import IrfParams, jitter_sweep, sweep_to_csv
from .tls import TWO_PI_MHZ, EmitterParams, NumericalError, bloch_oracle, g1_curve, g2_tls
from .yields import YieldConfig, expected_pairs, yield_map

log = logging.getLogger("qdpair")

EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


class ConfigError(ValueError):
    pass


_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_NONNEG = {"type": "number", "minimum": 0}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "emitters": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "additionalProperties": False,
                "properties": {
                    "name": {"type": "string", "pattern": "^[A-Za-z0-9_-]+$"},
                    "gamma_mhz_over_2pi": _POS,
                    "gamma_per_ns": _POS,
                    "omega_over_gamma": _NONNEG,
                    "omega_mhz_over_2pi": _NONNEG,
                    "sigma_diffusion_mhz_over_2pi": _NONNEG,
                    "impurity": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                    "g2_zero": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                    "bunching": {
                        "type": "object",
                        "additionalProperties": False,
                        "properties": {"amplitude": _NONNEG, "timescale_ns": _POS},
                    },
                },
                "oneOf": [
                    {"required": ["gamma_mhz_over_2pi"], "not": {"required": ["gamma_per_ns"]}},
                    {"required": ["gamma_per_ns"], "not": {"required": ["gamma_mhz_over_2pi"]}},
                ],
                "not": {"required": ["omega_over_gamma", "omega_mhz_over_2pi"]},
            },
        },
        "hom": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "weight_a": {"type": "number", "minimum": 0, "maximum": 1},
                "r_constant": _POS,
                "detuning_mhz_over_2pi": _NUM,
                "ensemble_sigma_mhz_over_2pi": _NONNEG,
                "mc_samples": {"type": "integer", "minimum": 0},
            },
            "required": ["weight_a"],
        },
        "irf": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"fwhm_ps": _NONNEG},
        },
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"tau_max_ns": _POS, "tau_step_ps": _POS},
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "path": {"type": "string"},
                "format": {"enum": ["csv", "json", "both"]},
            },
        },
        "yield": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "sigma_nm": _POS,
                "center_nm": _POS,
                "area_um2": _POS,
                "length_um": _POS,
                "width_um": _POS,
                "penalty": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "pair_convention": {"enum": ["squared", "combinations"]},
                "delta_lambda_nm": {"type": "array", "items": _NONNEG, "minItems": 1},
                "density_per_um2": {"type": "array", "items": _NONNEG, "minItems": 1},
            },
        },
        "irf_sweep": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "gamma_mhz_over_2pi": {"type": "array", "items": _POS, "minItems": 1},
                "omega_over_gamma": _NONNEG,
            },
        },
        "fit": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "data": {"type": "string"},
                "initial": {"type": "object", "additionalProperties": _NUM},
                "fixed": {"type": "array", "items": {"type": "string"}},
                "bounds": {
                    "type": "object",
                    "additionalProperties": {
                        "type": "array", "minItems": 2, "maxItems": 2,
                        "items": {"type": ["number", "null"]},
                    },
                },
            },
        },
    },
}


def _pointer(path):
    return "/" + "/".join(str(p) for p in path)


def validate_config(config):
    """Raise :class:`ConfigError` listing every schema violation by JSON pointer."""
    validator = jsonschema.Draft7Validator(SCHEMA)
    errors = sorted(validator.iter_errors(config), key=lambda e: list(e.absolute_path))
    if errors:
        lines = [f"{_pointer(e.absolute_path)}: {e.message}" for e in errors]
        raise ConfigError("invalid configuration:\n  " + "\n  ".join(lines))


def load_config(path):
    if path is None:
        return {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        config = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    validate_config(config)
    return config


# -- config -> domain objects -------------------------------------------------------


def emitter_from_config(entry):
    kwargs = {
        "omega_over_gamma": entry.get("omega_over_gamma"),
        "omega_mhz_over_2pi": entry.get("omega_mhz_over_2pi"),
        "sigma_mhz_over_2pi": entry.get("sigma_diffusion_mhz_over_2pi", 0.0),
        "impurity": _impurity(entry),
    }
    if "gamma_mhz_over_2pi" in entry:
        return EmitterParams.from_mhz(entry["gamma_mhz_over_2pi"], **kwargs)
    return EmitterParams.from_per_ns(entry["gamma_per_ns"], **kwargs)


def _impurity(entry):
    if "impurity" in entry:
        return entry["impurity"]
    if "g2_zero" in entry:
        return g2zero_to_impurity(entry["g2_zero"])
    return 0.0


def _emitters(config):
    entries = config.get("emitters")
    if not entries:
        raise ConfigError("/emitters: at least one emitter is required")
    named = []
    for i, entry in enumerate(entries):
        named.append((entry.get("name", chr(ord("A") + i) if i < 26 else f"E{i}"),
                      emitter_from_config(entry), entry))
    names = [n for n, _, _ in named]
    if len(set(names)) != len(names):
        raise ConfigError("/emitters: emitter names must be unique")
    return named


def _grid(config, default_max_ns=10.0, default_step_ps=10.0):
    grid = config.get("grid", {})
    return symmetric_grid(grid.get("tau_max_ns", default_max_ns) * 1e-9,
                          grid.get("tau_step_ps", default_step_ps) * 1e-12)


def _irf_fwhm(config):
    return config.get("irf", {}).get("fwhm_ps", 0.0) * 1e-12


def _format(config):
    return config.get("output", {}).get("format", "both")


def _curve_files(stem, curve, fmt, extra=None):
    files = {}
    if fmt in ("csv", "both"):
        files[f"{stem}.csv"] = curve.to_csv(extra)
    if fmt in ("json", "both"):
        obj = curve.to_dict()
        for key, col in (extra or {}).items():
            obj[key] = [float(v) for v in col]
        files[f"{stem}.json"] = json.dumps(obj, indent=1, sort_keys=True) + "\n"
    return files


def _dumps(obj):
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def write_outputs(out_dir, files):
    """Write all ``files`` (name -> text) or none of them.

    Everything is first written to temporary files in ``out_dir``; they are
    renamed into place only once all writes have succeeded.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    staged = []
    try:
        for name, text in files.items():
            fd, tmp = tempfile.mkstemp(prefix=f".{name}.", suffix=".tmp", dir=out)
            staged.append((tmp, out / name))
            with os.fdopen(fd, "w", newline="") as fh:
                fh.write(text)
    except BaseException:
        for tmp, _ in staged:
            if os.path.exists(tmp):
                os.unlink(tmp)
        raise
    for tmp, dest in staged:
        os.replace(tmp, dest)
    return [dest for _, dest in staged]


# -- commands -----------------------------------------------------------------------


def _oracle_residual(params, tau, closed, which):
    result = bloch_oracle(params, tau)
    if result.g1 is None:
        raise NumericalError("oracle undefined for an undriven emitter (omega = 0)")
    ref = result.g1 if which == "g1" else result.g2
    return closed - ref.values


def cmd_g1(args, config):
    tau = _grid(config)
    files, summary = {}, {"curves": {}}
    for name, params, _ in _emitters(config):
        curve = g1_curve(params, tau).with_values(
            g1_curve(params, tau).values, emitter=name,
            gamma_rad_s=params.gamma, omega_rad_s=params.omega)
        extra = None
        if args.oracle:
            resid = _oracle_residual(params, tau, curve.values, "g1")
            extra = {"oracle_residual": resid}
            summary["curves"][name] = {"max_oracle_residual": float(np.max(np.abs(resid)))}
        files.update(_curve_files(f"g1_{name}", curve, _format(config), extra))
    return files, summary


def cmd_g2(args, config):
    tau = _grid(config)
    fwhm = _irf_fwhm(config)
    files, summary = {}, {"curves": {}}
    for name, params, entry in _emitters(config):
        b = entry.get("bunching", {})
        model = MeasuredG2Model(
            params, BunchingEnvelope(b.get("amplitude", 0.0), b.get("timescale_ns", 1.0) * 1e-9),
            fwhm)
        curve = g2_measured(model, tau).with_values(
            g2_measured(model, tau).values, emitter=name)
        info = {"g2_zero": curve.at(0.0)}
        extra = None
        if args.oracle:
            resid = _oracle_residual(params, tau, g2_tls(params, tau), "g2")
            extra = {"oracle_residual": resid}
            info["max_oracle_residual"] = float(np.max(np.abs(resid)))
        summary["curves"][name] = info
        files.update(_curve_files(f"g2_{name}", curve, _format(config), extra))
    return files, summary


def hom_config_from(config, ensemble_mhz=None):
    emitters = _emitters(config)
    if len(emitters) != 2:
        raise ConfigError("/emitters: the hom command needs exactly two emitters")
    if "hom" not in config:
        raise ConfigError("/hom: section is required for the hom command")
    (_, a, ea), (_, b, eb) = emitters
    h = config["hom"]
    sigma = ensemble_mhz if ensemble_mhz is not None else h.get("ensemble_sigma_mhz_over_2pi")
    if sigma is not None:
        detuning = GaussianDetuning(sigma * TWO_PI_MHZ)
    else:
        detuning = FixedDetuning(h.get("detuning_mhz_over_2pi", 0.0) * TWO_PI_MHZ)
    return HomConfig(a, b, h["weight_a"], 1.0 - h["weight_a"],
                     ea.get("g2_zero", 2 * a.impurity - a.impurity ** 2),
                     eb.get("g2_zero", 2 * b.impurity - b.impurity ** 2),
                     h.get("r_constant"), detuning)


def cmd_hom(args, config):
    hom = hom_config_from(config, args.ensemble)
    tau = _grid(config)
    result = simulate_hom(hom, tau, _irf_fwhm(config))
    fmt = _format(config)
    files = {}
    files.update(_curve_files("g2_cross", result.cross, fmt))
    files.update(_curve_files("g2_parallel", result.parallel, fmt))
    files.update(_curve_files("visibility", result.visibility, fmt))
    summary = result.summary()
    if isinstance(hom.detuning, GaussianDetuning):
        summary["ensemble_sigma_mhz_over_2pi"] = hom.detuning.sigma / TWO_PI_MHZ
        n_mc = args.mc_samples if args.mc_samples is not None else config["hom"].get("mc_samples", 0)
        if n_mc:
            mc, se = monte_carlo_parallel(hom, result.g2_a, result.g2_b, result.g1_a,
                                          result.g1_b, n_mc, seed=args.seed, r=result.r)
            diff = np.abs(mc.values - result.parallel.values)
            ok = se > 0
            summary["monte_carlo"] = {
                "samples": n_mc,
                "seed": args.seed,
                "max_abs_difference": float(diff.max()),
                "max_difference_in_standard_errors": float((diff[ok] / se[ok]).max()) if ok.any() else 0.0,
            }
    files["hom_summary.json"] = _dumps(summary)
    return files, summary


def read_xy_csv(path):
    """Two- or three-column numeric CSV (``x,y[,sigma_y]``); a header row is optional."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read data file {path}: {exc.strerror}") from None
    rows = [r for r in csv.reader(io.StringIO(text)) if r and not r[0].startswith("#")]
    if rows:
        try:
            float(rows[0][0])
        except ValueError:
            rows = rows[1:]
    try:
        data = np.array([[float(v) for v in r] for r in rows], dtype=float)
    except ValueError as exc:
        raise ConfigError(f"{path}: non-numeric data ({exc})") from None
    if data.ndim != 2 or data.shape[0] == 0 or data.shape[1] not in (2, 3):
        raise ConfigError(f"{path}: expected columns x,y[,sigma_y]")
    sigma = data[:, 2] if data.shape[1] == 3 else None
    return data[:, 0], data[:, 1], sigma


def cmd_fit(args, config):
    section = config.get("fit", {})
    data_path = args.data or section.get("data")
    if data_path is None:
        raise ConfigError("no data file given (use --data or /fit/data)")
    if args.config and not Path(data_path).is_absolute() and not args.data:
        data_path = str(Path(args.config).parent / data_path)
    x, y, sigma = read_xy_csv(data_path)
    bounds = {k: tuple(v) for k, v in section.get("bounds", {}).items()}
    try:
        result = fit_named(args.model, x, y, sigma, section.get("initial"), section.get("fixed"),
                           bounds)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    report = result.to_dict()
    report["model"] = args.model
    report["data"] = str(data_path)
    if not result.converged:
        raise NumericalError(f"fit did not converge: {result.message}")
    return {f"fit_{args.model}.json": _dumps(report)}, report


def cmd_yield_map(args, config):
    y = config.get("yield", {})
    if "area_um2" in y:
        area = y["area_um2"]
    else:
        area = y.get("length_um", 40.0) * y.get("width_um", 0.2)
    base = YieldConfig(area_um2=area, density_per_um2=0.0, sigma_nm=y.get("sigma_nm", 15.0),
                       center_nm=y.get("center_nm", 930.0), penalty=y.get("penalty", 0.5),
                       pair_convention=y.get("pair_convention", "squared"))
    dl = y.get("delta_lambda_nm", [0.05, 0.1, 0.2, 0.5, 1.0, 2.0])
    rho = y.get("density_per_um2", [1.0, 2.0, 5.0, 10.0, 20.0, 50.0])
    grid = yield_map(base, dl, rho)
    cell = YieldConfig(area_um2=area, density_per_um2=10.0, sigma_nm=base.sigma_nm,
                       penalty=base.penalty, pair_convention=base.pair_convention)
    summary = {"area_um2": area, "cells": int(grid.counts.size),
               "expected_pairs_0p1nm_10um2": expected_pairs(cell, 0.1)}
    return {"yield_map.csv": grid.to_csv()}, summary


def cmd_irf_sweep(args, config):
    fwhm_ps = config.get("irf", {}).get("fwhm_ps", 226.0)
    s = config.get("irf_sweep", {})
    axis = s.get("gamma_mhz_over_2pi")
    axis = np.linspace(100.0, 500.0, 81) if axis is None else np.asarray(axis, dtype=float)
    rows = jitter_sweep(IrfParams(fwhm_ps * 1e-12), axis, s.get("omega_over_gamma", 0.3))
    summary = {"fwhm_ps": fwhm_ps, "points": int(len(rows)),
               "g2_zero_min": float(rows[:, 1].min()), "g2_zero_max": float(rows[:, 1].max())}
    return {"irf_sweep.csv": sweep_to_csv(rows)}, summary


COMMANDS = {
    "g1": cmd_g1,
    "g2": cmd_g2,
    "hom": cmd_hom,
    "fit": cmd_fit,
    "yield-map": cmd_yield_map,
    "irf-sweep": cmd_irf_sweep,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--out", help="output directory (overrides /output/path)")
    common.add_argument("--seed", type=int, default=0, help="seed for Monte Carlo sampling")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="qdpair", parents=[common],
                                     description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("g1", parents=[common], help="first-order coherence curves")
    p.add_argument("--oracle", action="store_true", help="add Bloch-equation residual column")
    p = sub.add_parser("g2", parents=[common], help="measured-model second-order correlation")
    p.add_argument("--oracle", action="store_true", help="add Bloch-equation residual column")
    p = sub.add_parser("hom", parents=[common], help="two-photon interference curves")
    p.add_argument("--ensemble", type=float, metavar="SIGMA_MHZ",
                   help="average over Gaussian detuning with this sigma/2pi (MHz)")
    p.add_argument("--mc-samples", type=int, help="Monte Carlo cross-check sample count")
    p = sub.add_parser("fit", parents=[common], help="fit a model to x,y[,sigma_y] data")
    p.add_argument("model", choices=sorted(MODELS))
    p.add_argument("--data", help="data CSV (overrides /fit/data)")
    sub.add_parser("yield-map", parents=[common], help="expected emitter-pair counts")
    sub.add_parser("irf-sweep", parents=[common], help="jitter-limited g2(0) versus decay rate")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = load_config(args.config)
        files, summary = COMMANDS[args.command](args, config)
        out_dir = args.out or config.get("output", {}).get("path", ".")
        written = write_outputs(out_dir, files)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    for path in written:
        log.info("wrote %s", path)
    print(json.dumps(summary, indent=2, sort_keys=True, default=float))
    return 0


if __name__ == "__main__":
    sys.exit(main())
