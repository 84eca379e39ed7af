import json
import os

import numpy as np
import pytest

from cmcs3 import cli, families


def run(argv):
    return cli.main(argv)


def test_check_revolution_passes(tmp_path, capsys):
    out = str(tmp_path / "report.json")
    code = run(["check", "--family", "revolution", "--H", "0", "--alpha", "0.25", "--out", out])
    assert code == cli.EXIT_OK
    with open(out) as fh:
        rep = json.load(fh)
    assert rep["A"] and rep["B"]["pass"] and rep["C"]["pass"]
    assert rep["G"] == 1
    kappas = sorted(
        e["kappa"] for e in rep["branch_points"] if e["kind"] in ("double_point", "both")
    )
    assert np.allclose(kappas, [-1.0, 1.0], atol=1e-6)


def test_check_from_json_file(tmp_path):
    data = families.clifford_spectral_data()
    path = str(tmp_path / "data.json")
    with open(path, "w") as fh:
        json.dump(data.to_json(), fh)
    code = run(["check", path, "--window", "-3", "3"])
    assert code == cli.EXIT_OK


def test_check_detuned_data_fails(tmp_path):
    data, _ = families.revolution_family(families.RevolutionParams(0.0, 0.25))
    obj = data.to_json()
    obj["b"] = [c * 1.1 for c in obj["b"]]
    path = str(tmp_path / "bad.json")
    with open(path, "w") as fh:
        json.dump(obj, fh)
    code = run(["check", path])
    assert code == cli.EXIT_CHECK_FAILED


def test_check_schema_errors(tmp_path):
    missing = str(tmp_path / "missing.json")
    assert run(["check", missing]) == cli.EXIT_SCHEMA
    assert run(["check"]) == cli.EXIT_SCHEMA
    bad = str(tmp_path / "bad.json")
    with open(bad, "w") as fh:
        fh.write("{not json")
    assert run(["check", bad]) == cli.EXIT_SCHEMA


def test_surface_clifford(tmp_path):
    out = str(tmp_path / "surf.obj")
    rep = str(tmp_path / "surf.json")
    csv = str(tmp_path / "surf.csv")
    tau = float(np.pi * np.sqrt(2.0))
    code = run(
        [
            "surface", "--family", "clifford",
            "--grid", "24", "10",
            "--domain", "-0.5", "0.5", "-0.2", "0.2",
            "--out", out, "--report", rep, "--csv", csv,
            "--period", f"{tau}", "0",
        ]
    )
    assert code == cli.EXIT_OK
    assert os.path.exists(out) and os.path.exists(csv)
    with open(rep) as fh:
        report = json.load(fh)
    assert report["passes"]
    assert report["periodicity"]["passes"]
    assert abs(report["H_expected"]) < 1e-12


def test_surface_delaunay_hopf_scaling(tmp_path):
    out = str(tmp_path / "del.obj")
    rep = str(tmp_path / "del.json")
    code = run(
        [
            "surface", "--family", "delaunay",
            "--grid", "24", "10",
            "--domain", "-0.4", "0.4", "-0.15", "0.15",
            "--out", out, "--report", rep,
        ]
    )
    assert code == cli.EXIT_OK
    with open(rep) as fh:
        report = json.load(fh)
    # expected Hopf coefficient carries the model's 4 a_r b_r weight
    assert abs(abs(complex(*report["Q_expected"])) - 0.6 * 0.5) < 1e-6


def test_surface_usage_errors(tmp_path):
    assert run(["surface", "--out", str(tmp_path / "x.obj")]) == cli.EXIT_SCHEMA
    code = run(
        ["surface", "--family", "clifford", "--grid", "4", "4", "--out", str(tmp_path / "y.obj")]
    )
    assert code == cli.EXIT_SCHEMA


def test_flow_zero(tmp_path):
    out = str(tmp_path / "traj.csv")
    final = str(tmp_path / "final.json")
    code = run(
        [
            "flow", "--family", "revolution", "--H", "0", "--alpha", "0.25",
            "--c", "zero", "--t-final", "0.01", "--dt0", "0.005",
            "--samples", "2", "--out", out, "--final-json", final,
        ]
    )
    assert code == cli.EXIT_OK
    with open(final) as fh:
        obj = json.load(fh)
    assert obj["completed"]
    assert obj["res_C0"] < 1e-6
    with open(out) as fh:
        lines = fh.read().splitlines()
    assert lines[0].startswith("t,a0")
    assert len(lines) >= 3


def test_flow_bad_c(tmp_path):
    code = run(
        [
            "flow", "--family", "clifford", "--c", "bogus",
            "--out", str(tmp_path / "t.csv"),
        ]
    )
    assert code == cli.EXIT_SCHEMA


def test_delta_scan(tmp_path):
    out = str(tmp_path / "delta.csv")
    rep = str(tmp_path / "delta.json")
    code = run(
        [
            "delta", "--family", "clifford", "--window", "-2", "2",
            "--samples", "41", "--out", out, "--report", rep,
        ]
    )
    assert code == cli.EXIT_OK
    with open(out) as fh:
        lines = fh.read().splitlines()
    assert lines[0] == "kappa,delta,abs_le_2"
    assert len(lines) == 42
    with open(rep) as fh:
        obj = json.load(fh)
    assert obj["condition_F"]
    kappas = sorted(e["kappa"] for e in obj["branch_points"])
    assert np.allclose(kappas, [-1.0, 0.0, 1.0], atol=1e-6)


def test_delta_bad_window(tmp_path):
    code = run(
        ["delta", "--family", "clifford", "--window", "2", "-2", "--out", str(tmp_path / "d.csv")]
    )
    assert code == cli.EXIT_SCHEMA


def test_verify_missing_dir(tmp_path):
    code = run(["verify", "--tests-dir", str(tmp_path / "nope")])
    assert code == cli.EXIT_SCHEMA
