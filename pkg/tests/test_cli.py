import csv
import json
import math
import os
import subprocess
import sys
from importlib import resources

import jsonschema
import pytest

from collapsar.cli import main
from collapsar.config import RunConfig
from collapsar.errors import InvalidArgument
from collapsar.profile import integrate_profile

CRITERION_1 = {"case": "Case1a", "N": 3, "delta": 1, "K": 1.0, "kappa": 1.0, "m": -1.0, "n": 1.0, "alpha_ic": 1.0}


def schema():
    text = resources.files("collapsar").joinpath("schemas/summary.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


def run(tmp_path, command, config, fmt=None, name="cfg.json"):
    path = tmp_path / name
    path.write_text(config if isinstance(config, str) else json.dumps(config), encoding="utf-8")
    out = tmp_path / "out"
    argv = [command, "--config", str(path), "--out", str(out)]
    if fmt:
        argv += ["--format", fmt]
    return main(argv), out


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def test_verify_passes_and_summary_is_schema_valid(tmp_path):
    code, out = run(tmp_path, "verify", CRITERION_1)
    assert code == 0
    summary = json.loads((out / "summary.json").read_text())
    jsonschema.validate(summary, schema())
    assert summary["pass"] is True
    header, rows = read_csv(out / "residuals.csv")
    assert header == ["t", "r", "mass_raw", "mass_scaled", "momentum_raw", "momentum_scaled"]
    assert len(rows) == 5 * 50
    assert all(len(v.split("e")[0].replace("-", "").replace(".", "")) == 17 for v in rows[3])


def test_zero_threshold_exits_4(tmp_path):
    code, out = run(tmp_path, "verify", CRITERION_1 | {"mass_threshold": 0.0, "momentum_threshold": 0.0})
    assert code == 4
    summary = json.loads((out / "summary.json").read_text())
    assert summary["pass"] is False


@pytest.mark.parametrize("text", ['{"case": "Case1a", "N": 3,', "[1, 2]", '{"case": "Case1a", "colour": 1}',
                                  '{"case": "Case9"}', '{"rel_tol": "small"}', '{"formats": ["pdf"]}'])
def test_bad_configs_exit_2(tmp_path, text, capsys):
    code, _ = run(tmp_path, "verify", text)
    assert code == 2
    assert "configuration error" in capsys.readouterr().err


def test_invalid_physics_exit_2(tmp_path):
    assert run(tmp_path, "verify", {"case": "Case2", "Lambda": 0.0})[0] == 2


def test_missing_config_file_and_bad_flags(tmp_path):
    assert main(["verify", "--config", str(tmp_path / "nope.json")]) == 2
    assert main(["verify"]) == 2
    assert run(tmp_path, "solve", CRITERION_1, fmt="csv,pdf")[0] == 2


def test_numerical_failure_exits_3(tmp_path):
    # the viscous term cancels pressure once f falls to (9 kappa / 4)**3
    assert run(tmp_path, "solve", CRITERION_1 | {"kappa": 0.2, "m": 1.0})[0] == 3


def test_solve_constant_profile(tmp_path):
    code, out = run(tmp_path, "solve", {"case": "Case1a", "delta": 0, "alpha_ic": 2.5}, fmt="csv,json,svg")
    assert code == 0
    header, rows = read_csv(out / "profile.csv")
    assert header == ["z", "f", "fprime", "M"]
    assert {float(r[1]) for r in rows} == {2.5}
    assert (out / "profile.svg").exists()


def test_solve_reports_first_zero_and_round_trips(tmp_path):
    cfg = {"case": "Case1a", "kappa": 0.0}
    code, out = run(tmp_path, "solve", cfg)
    assert code == 0
    meta = json.loads((out / "profile.json").read_text())
    config = RunConfig.from_dict(cfg)
    prof = integrate_profile(config.params(), "Case1a")
    assert meta["Z_mu"] == prof.Z_mu  # bit-exact
    assert meta["support_kind"] == "ZeroCrossing"
    assert meta["params"] == config.params().to_dict()
    assert meta["integrator_stats"] == prof.integrator_stats


def test_outputs_are_deterministic(tmp_path):
    first, second = tmp_path / "a", tmp_path / "b"
    first.mkdir()
    second.mkdir()
    for where in (first, second):
        assert run(where, "verify", CRITERION_1, fmt="csv,json,svg")[0] == 0
        assert run(where, "solve", CRITERION_1, fmt="csv,json,svg")[0] == 0
    names = sorted(p.name for p in (first / "out").iterdir())
    assert "momentum_residual.svg" in names and "profile.svg" in names
    for name in names:
        assert (first / "out" / name).read_bytes() == (second / "out" / name).read_bytes(), name


def test_blowup_report(tmp_path):
    code, out = run(tmp_path, "blowup", CRITERION_1, fmt="json,csv,svg")
    assert code == 0
    report = json.loads((out / "blowup.json").read_text())
    assert report["T"] == 1.0
    row = next(r for r in report["table"] if r["t"] == 0.99)
    assert row["central_density"] == pytest.approx(1.0 / 0.01**3, rel=1e-12)
    assert report["amplification_windows"]["1000000.0"] == pytest.approx(0.01, rel=1e-12)
    assert (out / "scaling.svg").exists()


@pytest.mark.parametrize("cfg,message", [
    ({"case": "Case1a", "m": 1.0}, "no blowup"),
    ({"case": "Case2", "Lambda": 0.01}, "no blowup (exponential scaling)"),
])
def test_no_blowup_reports(tmp_path, cfg, message):
    code, out = run(tmp_path, "blowup", cfg)
    assert code == 0
    report = json.loads((out / "blowup.json").read_text())
    assert report["T"] is None and report["message"] == message


def test_legacy_blowup_collapse(tmp_path):
    cfg = {"case": "LegacyGW", "N": 3, "lambda_legacy": 1.0, "a0": 1.0, "a1": 0.0, "t_max": 5.0}
    code, out = run(tmp_path, "blowup", cfg)
    assert code == 0
    report = json.loads((out / "blowup.json").read_text())
    assert report["T"] == pytest.approx(math.pi / (2 * math.sqrt(2)), rel=1e-6)
    assert report["relative_energy_drift"] <= 1e-9


def test_legacy_lane_emden(tmp_path):
    cfg = {"case": "LegacyGW", "emden_kind": "PowerLaw", "N": 3, "K": math.pi, "mu": 0.0, "z_max": 20.0}
    code, out = run(tmp_path, "legacy", cfg, fmt="json,csv,svg")
    assert code == 0
    meta = json.loads((out / "profile.json").read_text())
    assert meta["Z_mu"] == pytest.approx(6.8968, abs=1e-3)


def test_legacy_constant_balance(tmp_path):
    K = 2.0
    cfg = {"case": "Legacy2D", "N": 2, "emden_kind": "Exponential2D", "K": K, "mu": 2 * math.pi / K * math.e}
    code, out = run(tmp_path, "legacy", cfg)
    assert code == 0
    _, rows = read_csv(out / "profile.csv")
    assert {float(r[1]) for r in rows} == {1.0}


def test_legacy_power_law_needs_n3(tmp_path):
    assert run(tmp_path, "legacy", {"case": "LegacyGW", "emden_kind": "PowerLaw", "N": 2})[0] == 2


def test_config_defaults_documented():
    cfg = RunConfig()
    assert (cfg.rel_tol, cfg.abs_tol, cfg.z0, cfg.eps_cut) == (1e-10, 1e-12, 1e-6, 1e-8)
    with pytest.raises(InvalidArgument):
        RunConfig.from_dict({"unknown": 1})


def test_console_entry_and_log_level(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(CRITERION_1), encoding="utf-8")
    env = os.environ | {"COLLAPSAR_LOG": "info"}
    proc = subprocess.run([sys.executable, "-m", "collapsar.cli", "solve", "--config", str(path),
                           "--out", str(tmp_path / "o"), "--format", "json"],
                          capture_output=True, text=True, env=env, check=False)
    assert proc.returncode == 0
    assert "INFO collapsar.profile" in proc.stderr
    quiet = subprocess.run([sys.executable, "-m", "collapsar.cli", "solve", "--config", str(path),
                            "--out", str(tmp_path / "o"), "--format", "json"],
                           capture_output=True, text=True, env=os.environ | {"COLLAPSAR_LOG": "error"}, check=False)
    assert quiet.returncode == 0 and quiet.stderr == ""
