import json
import subprocess
import sys

import numpy as np
import pytest

from cablearm import reports
from cablearm.cli import main
from cablearm.experiments import RepeatabilityReport


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_fk_zero_pose(capsys):
    code, out, _ = run(capsys, "fk", "--config", "d3arm.json", "--joints", "0,0,0,0,0,0")
    assert code == 0
    doc = json.loads(out)
    assert doc["schema_version"] == 1
    assert np.allclose(doc["position_m"], [0.776, 0, 0], atol=1e-12)
    assert np.allclose(np.array(doc["rotation"]) @ np.array(doc["rotation"]).T, np.eye(3), atol=1e-12)


def test_fk_radians_and_csv(capsys):
    code, out, _ = run(capsys, "fk", "--units", "rad", "--joints", "0.1,0,0,0,0,0", "--format", "csv")
    assert code == 0
    header, rows = reports.read_csv(out)
    assert header[:3] == ["x_m", "y_m", "z_m"]
    assert rows[0][2] == pytest.approx(0.776 * np.sin(0.1), rel=1e-12)


def _pass_columns(out):
    header, rows = reports.read_csv(out)
    table = {r[0]: np.array(r[1:], dtype=float) for r in rows}
    return header, table


def test_coupling_contrast(capsys):
    code, out, _ = run(capsys, "coupling", "--config", "naive.json")
    assert code == 0
    header, naive = _pass_columns(out)
    assert header[0] == "cable_id" and header[1] == "theta1_m_per_rad"
    code, out, _ = run(capsys, "coupling", "--config", "d3arm.json")
    _, d3 = _pass_columns(out)
    assert naive["J2+"][0] == 0.01 and d3["J2+"][0] == 0.0
    assert np.any(naive["J4+"][:5] != 0) and np.all(d3["J4+"][:5] == 0)


def test_coupling_fd_flag(capsys):
    code, out, _ = run(capsys, "coupling", "--fd", "--joints", "10,20,30,40,50,60", "--format", "json")
    assert code == 0
    assert np.max(np.abs(np.array(json.loads(out)["entries"])[2::2, 0])) < 1e-8


def test_ik_converges(capsys):
    code, out, _ = run(capsys, "ik", "--target-joints", "10,20,30,10,20,30", "--initial", "12,18,33,8,22,27")
    doc = json.loads(out)
    assert code == 0 and doc["converged"]
    assert np.allclose(np.degrees(doc["solution_rad"]), [10, 20, 30, 10, 20, 30], atol=1e-4)


def test_ik_unreachable_exit_2(capsys):
    code, out, _ = run(capsys, "ik", "--target", "10,0,0")
    assert code == 2
    doc = json.loads(out)
    assert doc["converged"] is False
    assert doc["residual_position_m"] > 8.0 and "residual_orientation_rad" in doc


def test_unknown_flag_exit_1(capsys):
    code, out, err = run(capsys, "fk", "--bogus")
    assert code == 1 and out == ""
    assert "usage:" in err


def test_missing_subcommand(capsys):
    code, _, err = run(capsys)
    assert code == 1 and "usage:" in err


def test_validation_error_exit_1(capsys, tmp_path):
    code, _, err = run(capsys, "fk", "--joints", "1,2,3")
    assert code == 1 and "6 values" in err
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code, _, err = run(capsys, "fk", "--config", str(bad))
    assert code == 1 and "line 1" in err
    code, _, err = run(capsys, "fk", "--format", "svg")
    assert code == 1
    code, _, _ = run(capsys, "trajectory", "--waypoints", "0,0,0,0,0,0;90,0,0,0,0,0")
    assert code == 1


def test_decouple_test(capsys, tmp_path):
    out_path = tmp_path / "d.json"
    code, out, _ = run(capsys, "decouple-test", "--output", str(out_path))
    assert code == 0 and out == ""
    doc = reports.read_json(out_path)
    assert doc["max_tension_change_N"] == 0.0 and doc["schema_version"] == 1
    code, out, _ = run(capsys, "decouple-test", "--config", "naive.json", "--sweep", "1")
    assert json.loads(out)["joints"][0]["max_displacement_m"] == pytest.approx(0.010472, abs=1e-6)


def test_repeatability_sources(capsys, tmp_path):
    code, out, _ = run(capsys, "repeatability", "--reference")
    assert code == 0
    assert json.loads(out)["total"]["mean_mm"] == pytest.approx(1.2896, abs=1e-4)

    rng = np.random.default_rng(1)
    rows = [(f"P{k}", *rng.normal(size=3)) for k in (1, 2) for _ in range(10)]
    src = tmp_path / "pts.csv"
    reports.write_csv(["pose", "x_mm", "y_mm", "z_mm"], rows, src)
    out_csv = tmp_path / "rep.csv"
    code, _, _ = run(capsys, "repeatability", "--input", str(src), "--format", "csv", "--output", str(out_csv))
    assert code == 0
    rep = RepeatabilityReport.from_table(*reports.read_csv(out_csv))
    assert len(rep.poses) == 2 and rep.poses[0].count == 10

    code, out1, _ = run(capsys, "repeatability", "--seed", "4")
    code, out2, _ = run(capsys, "repeatability", "--seed", "4")
    assert out1 == out2


def test_trajectory_csv_and_svg(capsys, tmp_path):
    code, out, _ = run(capsys, "trajectory", "--waypoints", "0,0,0,0,0,0;30,0,0,0,0,0", "--times", "0,1", "--dt", "0.05")
    assert code == 0
    header, rows = reports.read_csv(out)
    assert header[0] == "time_s" and "speed_m_per_s" in header
    assert len(rows) == 21
    svg = tmp_path / "speed.svg"
    code, _, _ = run(capsys, "trajectory", "--waypoints", "0,0,0,0,0,0;30,0,0,0,0,0", "--format", "svg", "--output", str(svg))
    assert code == 0 and "<svg" in svg.read_text()


def test_workspace_seeded(capsys, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(capsys, "workspace", "--samples", "3000", "--seed", "2", "--output", str(a))[0] == 0
    assert run(capsys, "workspace", "--samples", "3000", "--seed", "2", "--jobs", "3", "--output", str(b))[0] == 0
    assert a.read_bytes() == b.read_bytes()
    code, out, _ = run(capsys, "workspace", "--samples", "100", "--seed", "2", "--format", "json")
    assert json.loads(out)["count"] == 100


def test_load_check(capsys):
    code, out, _ = run(capsys, "load-check", "--mass", "2", "--find-max")
    doc = json.loads(out)
    assert code == 0 and doc["feasible"]
    assert max(c["tension_N"] for c in doc["cables"]) == pytest.approx(507.5, abs=0.5)
    assert doc["max_payload_kg"] == pytest.approx(3.4154, abs=1e-3)
    code, out, _ = run(capsys, "load-check", "--mass", "10")
    assert code == 0 and not json.loads(out)["feasible"]


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "cablearm.cli", "ik", "--target", "10,0,0"], capture_output=True, text=True
    )
    assert proc.returncode == 2
    assert json.loads(proc.stdout)["converged"] is False
    proc = subprocess.run([sys.executable, "-m", "cablearm.cli", "nope"], capture_output=True, text=True)
    assert proc.returncode == 1 and "usage" in proc.stderr
