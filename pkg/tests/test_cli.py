import hashlib
import json
import math

import numpy as np
import pytest

from atomcavity.cli import main
from atomcavity.qpg import read_slope_csv
from atomcavity.response import read_samples_csv


def run_cli(*args):
    return main([str(a) for a in args])


def write_config(tmp_path, payload, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return path


def test_chsh_experiment(tmp_path):
    cfg = write_config(tmp_path, {"chsh": {"delta_deg": 16.0}})
    out = tmp_path / "out"
    assert run_cli("chsh", "--config", cfg, "--out", out) == 0
    payload = json.loads((out / "chsh.json").read_text())
    assert payload["s_max"] == pytest.approx(2.0193, abs=5e-4)
    assert payload["violating"] is True
    assert payload["s_max_formula"] == pytest.approx(payload["s_max"], abs=1e-9)
    assert (out / "manifest.json").exists()


def test_chsh_with_mask(tmp_path):
    cfg = write_config(tmp_path, {"chsh": {"delta_deg": 16.0, "mask_d": 0.0}})
    out = tmp_path / "out"
    assert run_cli("chsh", "--config", cfg, "--out", out) == 0
    payload = json.loads((out / "chsh.json").read_text())
    assert payload["s_max"] <= 2.0 + 1e-9
    assert payload["violating"] is False


def test_response_experiment_empty_cavity(tmp_path):
    cfg = write_config(
        tmp_path,
        {"mean_atoms": 0.0, "response": {"omega_min_mhz": -60, "omega_max_mhz": 60, "points": 11}},
    )
    out = tmp_path / "out"
    assert run_cli("response", "--config", cfg, "--out", out) == 0
    samples = read_samples_csv(out / "response.csv")
    assert len(samples) == 11
    assert all(s.transmission == 1.0 for s in samples)
    assert all(s.phase_deg == 0.0 for s in samples)


def test_gate_experiment_truth_table(tmp_path):
    cfg = write_config(
        tmp_path, {"gate": {"phi_a_deg": 17.5, "phi_b_deg": 12.5, "delta_deg": 16.0}}
    )
    out = tmp_path / "out"
    assert run_cli("gate", "--config", cfg, "--out", out) == 0
    lines = (out / "truth_table.csv").read_text().strip().splitlines()
    assert lines[0] == "basis,phase_deg"
    rows = [line.split(",") for line in lines[1:]]
    assert [r[0] for r in rows] == ["--", "-+", "+-", "++"]
    assert [float(r[1]) for r in rows] == pytest.approx([0.0, 12.5, 17.5, 46.0], abs=1e-9)


def test_fit_experiment_synthesized(tmp_path):
    cfg = write_config(
        tmp_path,
        {
            "seed": 1234,
            "fit": {"synthesize": {"mean_atoms": 1.0, "points": 41}, "initial_guess": 0.5},
        },
    )
    out = tmp_path / "out"
    assert run_cli("fit", "--config", cfg, "--out", out) == 0
    payload = json.loads((out / "fit.json").read_text())
    assert abs(payload["mean_atoms"] - 1.0) <= 3.0 * payload["std_error"]
    assert payload["std_error"] <= 0.1
    assert payload["converged"] is True


def test_fit_experiment_from_csv(tmp_path):
    from atomcavity.params import RateSet
    from atomcavity.response import response_curve, write_samples_csv

    data = tmp_path / "data.csv"
    write_samples_csv(data, response_curve(np.linspace(-60, 60, 21), RateSet.cesium_default(), 0.7))
    cfg = write_config(tmp_path, {"fit": {"data_csv": "data.csv"}})
    out = tmp_path / "out"
    assert run_cli("fit", "--config", cfg, "--out", out) == 0
    payload = json.loads((out / "fit.json").read_text())
    assert payload["mean_atoms"] == pytest.approx(0.7, abs=1e-6)


def test_damping_experiment(tmp_path):
    cfg = write_config(
        tmp_path,
        {"damping": {"delta_deg": 16.0, "family": "uniform", "d_min": 0.9, "d_max": 1.0, "points": 5}},
    )
    out = tmp_path / "out"
    assert run_cli("damping", "--config", cfg, "--out", out) == 0
    lines = (out / "damping.csv").read_text().strip().splitlines()
    assert lines[0] == "d,s_max"
    rows = [tuple(map(float, line.split(","))) for line in lines[1:]]
    assert rows[-1][1] == pytest.approx(2.0193, abs=5e-4)


def test_saturation_experiment(tmp_path):
    cfg = write_config(
        tmp_path,
        {
            "mean_atoms": 0.6,
            "n_max": 5,
            "saturation": {"drive_min_mhz": 0.0, "drive_max_mhz": 10.0, "points": 3},
        },
    )
    out = tmp_path / "out"
    assert run_cli("saturation", "--config", cfg, "--out", out) == 0
    lines = (out / "saturation.csv").read_text().strip().splitlines()
    assert lines[0] == "m_a,transmission"
    first = tuple(map(float, lines[1].split(",")))
    assert first[1] == pytest.approx(0.1924, abs=2e-3)


def test_kerr_experiment_with_extraction(tmp_path):
    cfg = write_config(
        tmp_path,
        {
            "mean_atoms": 0.9,
            "detunings": {"probe_offset_mhz": 30.0, "pump_offset_mhz": 20.0},
            "phase_sign": -1,
            "kerr": {"pump_drive_min_mhz": 0.0, "pump_drive_max_mhz": 24.0, "points": 4, "n_max": 4},
        },
    )
    out = tmp_path / "out"
    assert run_cli("kerr", "--config", cfg, "--out", out) == 0
    curve = read_slope_csv(out / "kerr.csv")
    assert len(curve) == 4
    # flipped sign convention: positive phases decreasing with pump power
    assert curve[0][1] > 0
    assert curve[-1][1] < curve[0][1]
    extraction = json.loads((out / "kerr_delta.json").read_text())
    assert extraction["delta_deg"] > 0


def test_kerr_from_supplied_curve(tmp_path):
    data = tmp_path / "curve.csv"
    rows = ["m_pump,phi_probe_deg"]
    for m in np.linspace(0.0, 0.3, 7):
        phi = 20.0 - 2.0 * math.sin(math.radians(8.0)) * math.degrees(m)
        rows.append(f"{float(m)!r},{float(phi)!r}")
    data.write_text("\n".join(rows) + "\n")
    cfg = write_config(tmp_path, {"kerr": {"curve_csv": "curve.csv"}})
    out = tmp_path / "out"
    assert run_cli("kerr", "--config", cfg, "--out", out) == 0
    extraction = json.loads((out / "kerr_delta.json").read_text())
    assert extraction["delta_deg"] == pytest.approx(16.0, abs=1e-6)


def test_manifest_checksums_match(tmp_path):
    cfg = write_config(tmp_path, {"chsh": {"delta_deg": 16.0}})
    out = tmp_path / "out"
    assert run_cli("chsh", "--config", cfg, "--out", out) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["experiment"] == "chsh"
    assert "atomcavity" in manifest["versions"]
    for name, digest in manifest["outputs"].items():
        actual = hashlib.sha256((out / name).read_bytes()).hexdigest()
        assert actual == digest


def test_runs_are_deterministic(tmp_path):
    cfg = write_config(
        tmp_path, {"seed": 77, "fit": {"synthesize": {"mean_atoms": 1.0, "points": 21}}}
    )
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert run_cli("fit", "--config", cfg, "--out", out_a) == 0
    assert run_cli("fit", "--config", cfg, "--out", out_b) == 0
    for name in ("fit.json", "manifest.json"):
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes()


def test_seed_flag_changes_noise(tmp_path):
    cfg = write_config(tmp_path, {"fit": {"synthesize": {"mean_atoms": 1.0, "points": 21}}})
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert run_cli("fit", "--config", cfg, "--out", out_a, "--seed", 1) == 0
    assert run_cli("fit", "--config", cfg, "--out", out_b, "--seed", 2) == 0
    a = json.loads((out_a / "fit.json").read_text())
    b = json.loads((out_b / "fit.json").read_text())
    assert a["mean_atoms"] != b["mean_atoms"]


def test_phase_sign_flag_flips_phases(tmp_path):
    cfg = write_config(tmp_path, {"response": {"points": 5, "omega_min_mhz": 5, "omega_max_mhz": 45}})
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert run_cli("response", "--config", cfg, "--out", out_a) == 0
    assert run_cli("response", "--config", cfg, "--out", out_b, "--phase-sign", "-1") == 0
    sa = read_samples_csv(out_a / "response.csv")
    sb = read_samples_csv(out_b / "response.csv")
    for x, y in zip(sa, sb):
        assert x.phase_deg == pytest.approx(-y.phase_deg, rel=1e-12)


def test_config_validation_errors(tmp_path):
    # declared experiment mismatch
    cfg = write_config(tmp_path, {"experiment": "gate"})
    assert run_cli("chsh", "--config", cfg, "--out", tmp_path / "o1") == 2
    # missing referenced file
    cfg2 = write_config(tmp_path, {"fit": {"data_csv": "nope.csv"}}, name="c2.json")
    assert run_cli("fit", "--config", cfg2, "--out", tmp_path / "o2") == 2
    # invalid JSON
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run_cli("fit", "--config", bad, "--out", tmp_path / "o3") == 2
    # invalid rates
    cfg3 = write_config(tmp_path, {"rates": {"kappa_mhz": -1.0}}, name="c3.json")
    assert run_cli("chsh", "--config", cfg3, "--out", tmp_path / "o4") == 2
    # missing config file entirely
    assert run_cli("chsh", "--config", tmp_path / "absent.json", "--out", tmp_path / "o5") == 4


def test_numerical_failure_exit_code(tmp_path):
    # degenerate pump/probe frequencies make the resolvent singular
    cfg = write_config(
        tmp_path,
        {
            "detunings": {"probe_offset_mhz": 20.0, "pump_offset_mhz": 20.0},
            "kerr": {"pump_drive_min_mhz": 0.0, "pump_drive_max_mhz": 5.0, "points": 2, "n_max": 2},
        },
    )
    assert run_cli("kerr", "--config", cfg, "--out", tmp_path / "out") == 3


def test_defaults_without_config(tmp_path):
    out = tmp_path / "out"
    assert run_cli("gate", "--out", out) == 0
    lines = (out / "truth_table.csv").read_text().strip().splitlines()
    assert [float(line.split(",")[1]) for line in lines[1:]] == pytest.approx(
        [0.0, 12.5, 17.5, 46.0], abs=1e-9
    )
