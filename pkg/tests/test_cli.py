import json
import os

import numpy as np
import pytest

from qdpair.cli import SCHEMA, ConfigError, main, validate_config, write_outputs

from .synthetic import decay_data, lorentzian_data

TWO_DOTS = {
    "emitters": [
        {"name": "A", "gamma_mhz_over_2pi": 233, "omega_over_gamma": 0.48, "g2_zero": 0.13},
        {"name": "B", "gamma_mhz_over_2pi": 167, "omega_over_gamma": 0.34, "g2_zero": 0.04},
    ],
    "hom": {"weight_a": 0.59},
    "grid": {"tau_max_ns": 10, "tau_step_ps": 20},
    "output": {"format": "both"},
}


def _write(tmp_path, obj, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(obj))
    return str(path)


def _run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def _files(directory):
    return sorted(p.name for p in directory.iterdir()) if directory.exists() else []


def test_g1_minimal_config(tmp_path, capsys):
    cfg = _write(tmp_path, {"emitters": [{"gamma_per_ns": 1.46, "omega_over_gamma": 0.3}],
                            "output": {"format": "both"}})
    out = tmp_path / "out"
    code, _, _ = _run(capsys, "g1", "--config", cfg, "--out", out)
    assert code == 0
    assert _files(out) == ["g1_A.csv", "g1_A.json"]
    assert (out / "g1_A.csv").read_text().splitlines()[0] == "tau_s,value"
    assert "oracle_residual" not in (out / "g1_A.json").read_text()


def test_g1_oracle_residual(tmp_path, capsys):
    cfg = _write(tmp_path, {"emitters": [TWO_DOTS["emitters"][1]], "output": {"format": "csv"}})
    code, out, _ = _run(capsys, "g1", "--config", cfg, "--out", tmp_path / "o", "--oracle")
    assert code == 0
    summary = json.loads(out)
    assert summary["curves"]["B"]["max_oracle_residual"] <= 1e-6
    header = (tmp_path / "o" / "g1_B.csv").read_text().splitlines()[0]
    assert header == "tau_s,value,oracle_residual"


def test_g2_with_irf_and_oracle(tmp_path, capsys):
    conf = {"emitters": [{"gamma_mhz_over_2pi": 167, "omega_over_gamma": 0.34, "impurity": 0.017}],
            "irf": {"fwhm_ps": 226}, "grid": {"tau_max_ns": 5, "tau_step_ps": 10}}
    code, out, _ = _run(capsys, "g2", "--config", _write(tmp_path, conf), "--out", tmp_path / "o",
                        "--oracle")
    assert code == 0
    s = json.loads(out)["curves"]["A"]
    assert 0.02 <= s["g2_zero"] <= 0.08
    assert s["max_oracle_residual"] <= 1e-6


@pytest.mark.parametrize("conf, pointer", [
    ({"emitters": [{"gamma": 233}]}, "/emitters/0"),
    ({"emitters": [{"gamma_mhz_over_2pi": 233, "gamma_per_ns": 1.4}]}, "/emitters/0"),
    ({"emitters": [{"gamma_mhz_over_2pi": -1}]}, "/emitters/0/gamma_mhz_over_2pi"),
    ({"grid": {"tau_step_ps": "fast"}}, "/grid/tau_step_ps"),
    ({"output": {"format": "xlsx"}}, "/output/format"),
    ({"hom": {"weight_a": 1.5}}, "/hom/weight_a"),
])
def test_schema_errors_use_json_pointers(conf, pointer):
    with pytest.raises(ConfigError) as exc:
        validate_config(conf)
    assert f"{pointer}:" in str(exc.value)


def test_malformed_config_writes_nothing(tmp_path, capsys):
    cfg = _write(tmp_path, {"emitters": [{"gamma": 233}]})
    out = tmp_path / "out"
    code, _, err = _run(capsys, "g1", "--config", cfg, "--out", out)
    assert code == 2
    assert "/emitters/0" in err
    assert _files(out) == []


def test_invalid_json_and_missing_config(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert _run(capsys, "g1", "--config", bad)[0] == 2
    assert _run(capsys, "g1", "--config", tmp_path / "nope.json")[0] == 2


def test_coarse_grid_is_config_error(tmp_path, capsys):
    conf = {"emitters": [{"gamma_mhz_over_2pi": 167, "omega_over_gamma": 0.34}],
            "irf": {"fwhm_ps": 226}, "grid": {"tau_max_ns": 5, "tau_step_ps": 100}}
    out = tmp_path / "o"
    code, _, err = _run(capsys, "g2", "--config", _write(tmp_path, conf), "--out", out)
    assert code == 2 and "fwhm/4" in err
    assert _files(out) == []


def test_numerical_failure_exit_code(tmp_path, capsys, monkeypatch):
    from qdpair import cli
    from qdpair.tls import NumericalError

    def boom(*a, **k):
        raise NumericalError("did not converge")

    monkeypatch.setattr(cli, "bloch_oracle", boom)
    cfg = _write(tmp_path, {"emitters": [TWO_DOTS["emitters"][0]]})
    out = tmp_path / "o"
    code, _, err = _run(capsys, "g1", "--config", cfg, "--out", out, "--oracle")
    assert code == 3 and "did not converge" in err
    assert _files(out) == []


def test_hom_summary(tmp_path, capsys):
    out = tmp_path / "hom"
    code, stdout, _ = _run(capsys, "hom", "--config", _write(tmp_path, TWO_DOTS), "--out", out)
    assert code == 0
    summary = json.loads((out / "hom_summary.json").read_text())
    assert summary == json.loads(stdout)
    assert {"R", "V_peak", "g2_parallel_zero"} <= set(summary)
    assert summary["R"] == pytest.approx(2.03, abs=0.005)
    assert summary["V_peak"] == pytest.approx(0.75, abs=0.01)
    for stem in ("g2_cross", "g2_parallel", "visibility"):
        assert (out / f"{stem}.csv").exists() and (out / f"{stem}.json").exists()


def test_hom_ensemble_does_not_raise_peak(tmp_path, capsys):
    cfg = _write(tmp_path, TWO_DOTS)
    _run(capsys, "hom", "--config", cfg, "--out", tmp_path / "fixed")
    code, _, _ = _run(capsys, "hom", "--config", cfg, "--out", tmp_path / "ens", "--ensemble", 177,
                      "--mc-samples", 2000, "--seed", 3)
    assert code == 0
    fixed = json.loads((tmp_path / "fixed" / "hom_summary.json").read_text())
    ens = json.loads((tmp_path / "ens" / "hom_summary.json").read_text())
    assert ens["V_peak"] <= fixed["V_peak"] + 1e-12
    assert ens["monte_carlo"]["seed"] == 3


def test_hom_identical_ideal_emitters(tmp_path, capsys):
    e = {"gamma_mhz_over_2pi": 200, "omega_over_gamma": 0.5}
    conf = {"emitters": [dict(e, name="X"), dict(e, name="Y")], "hom": {"weight_a": 0.5}}
    out = tmp_path / "o"
    assert _run(capsys, "hom", "--config", _write(tmp_path, conf), "--out", out)[0] == 0
    assert json.loads((out / "hom_summary.json").read_text())["V_peak"] == pytest.approx(1.0)


def test_hom_needs_two_emitters(tmp_path, capsys):
    conf = {"emitters": TWO_DOTS["emitters"][:1], "hom": {"weight_a": 0.5}}
    assert _run(capsys, "hom", "--config", _write(tmp_path, conf))[0] == 2


def test_reruns_are_byte_identical(tmp_path, capsys):
    cfg = _write(tmp_path, TWO_DOTS)
    for d in ("r1", "r2"):
        _run(capsys, "hom", "--config", cfg, "--out", tmp_path / d, "--ensemble", 177,
             "--mc-samples", 1000, "--seed", 11)
    names = _files(tmp_path / "r1")
    assert names == _files(tmp_path / "r2")
    for n in names:
        assert (tmp_path / "r1" / n).read_bytes() == (tmp_path / "r2" / n).read_bytes()


def _save_xy(path, x, y, s=None):
    cols = [x, y] if s is None else [x, y, s]
    header = "x,y" if s is None else "x,y,sigma_y"
    np.savetxt(path, np.column_stack(cols), delimiter=",", header=header, comments="")
    return str(path)


def test_fit_lorentzian(tmp_path, capsys):
    data = _save_xy(tmp_path / "rf.csv", *lorentzian_data())
    out = tmp_path / "fit"
    code, _, _ = _run(capsys, "fit", "lorentzian", "--data", data, "--out", out)
    assert code == 0
    report = json.loads((out / "fit_lorentzian.json").read_text())
    fwhm = next(p for p in report["parameters"] if p["parameter"] == "fwhm")
    assert fwhm["value"] == pytest.approx(468.0, rel=0.01)
    assert set(fwhm) == {"parameter", "value", "uncertainty", "fixed"}


def test_fit_fixed_mask_passthrough(tmp_path, capsys):
    t, y, s = decay_data()
    data = _save_xy(tmp_path / "decay.csv", t, y, s)
    conf = {"fit": {"data": "decay.csv", "initial": {"gamma_fast": 1.46, "irf_fwhm_ps": 50},
                    "fixed": ["gamma_fast", "irf_fwhm_ps"]}}
    cfg = _write(tmp_path, conf)
    code, stdout, _ = _run(capsys, "fit", "decay", "--config", cfg, "--out", tmp_path / "o")
    assert code == 0
    params = {p["parameter"]: p for p in json.loads(stdout)["parameters"]}
    assert params["gamma_fast"]["fixed"] and params["gamma_fast"]["value"] == 1.46
    assert params["gamma_fast"]["uncertainty"] == 0.0
    assert not params["gamma_slow"]["fixed"]
    assert os.path.basename(data) == "decay.csv"


def test_fit_missing_data_file(tmp_path, capsys):
    code, _, err = _run(capsys, "fit", "voigt", "--data", tmp_path / "missing.csv")
    assert code == 2 and "missing.csv" in err


def test_fit_unknown_parameter(tmp_path, capsys):
    data = _save_xy(tmp_path / "rf.csv", *lorentzian_data()[:2])
    cfg = _write(tmp_path, {"fit": {"fixed": ["width"]}})
    assert _run(capsys, "fit", "lorentzian", "--data", data, "--config", cfg)[0] == 2


def test_yield_map(tmp_path, capsys):
    conf = {"yield": {"length_um": 40, "width_um": 0.2, "delta_lambda_nm": [0.1, 1.0],
                      "density_per_um2": [0, 10]}}
    out = tmp_path / "y"
    code, stdout, _ = _run(capsys, "yield-map", "--config", _write(tmp_path, conf), "--out", out)
    assert code == 0
    assert json.loads(stdout)["expected_pairs_0p1nm_10um2"] == pytest.approx(17.02, abs=0.01)
    rows = (out / "yield_map.csv").read_text().splitlines()
    assert rows[0] == "delta_lambda_nm,density_per_um2,expected_pairs"
    values = [float(r.split(",")[2]) for r in rows[1:]]
    assert values[0] == 0.0 and values[2] == 0.0
    assert values[1] == pytest.approx(17.02, abs=0.01)


def test_irf_sweep(tmp_path, capsys):
    out = tmp_path / "s"
    assert _run(capsys, "irf-sweep", "--out", out)[0] == 0
    rows = np.loadtxt(out / "irf_sweep.csv", delimiter=",", skiprows=1)
    assert rows.shape == (81, 2)
    assert np.all(np.diff(rows[:, 1]) > 0)


def test_write_outputs_is_all_or_nothing(tmp_path, monkeypatch):
    import qdpair.cli as cli

    calls = {"n": 0}
    real = os.fdopen

    def flaky(fd, *a, **k):
        calls["n"] += 1
        if calls["n"] == 2:
            os.close(fd)
            raise OSError("disk full")
        return real(fd, *a, **k)

    monkeypatch.setattr(cli.os, "fdopen", flaky)
    with pytest.raises(OSError):
        write_outputs(tmp_path, {"a.txt": "1", "b.txt": "2"})
    assert _files(tmp_path) == []


def test_schema_labels_every_frequency():
    props = SCHEMA["properties"]["emitters"]["items"]["properties"]
    freq = [k for k in props if k.startswith(("gamma", "omega", "sigma"))]
    assert all(k.endswith(("_mhz_over_2pi", "_per_ns", "_over_gamma")) for k in freq)
