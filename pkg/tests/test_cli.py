import csv
import io
import json
import math

import pytest

from pouchclutch.cli import fmt, main, parse_floats


def run(tmp_path, *argv, name="out.csv"):
    out = tmp_path / name
    code = main([*argv, "--out", str(out), "--report", str(tmp_path / "report.json")])
    report = json.loads((tmp_path / "report.json").read_text())
    return code, out, report


def rows(path):
    return list(csv.reader(io.StringIO(path.read_text())))


def test_fmt_and_parse():
    assert fmt(-0.0) == "0"
    assert fmt(0.1 + 0.2) == "0.3"
    assert parse_floats("0:300:50") == [0, 50, 100, 150, 200, 250, 300]
    assert parse_floats("1, 2.5") == [1.0, 2.5]


def test_deflection(tmp_path):
    code, out, report = run(tmp_path, "deflection")
    assert code == 0
    table = rows(out)
    assert table[0] == ["p_kPa", "w0_mm", "w0_ritz_mm"]
    assert len(table) == 8
    assert table[1][1] == "0"
    for _, w0, wr in table[2:]:
        assert float(w0) == pytest.approx(float(wr), rel=0.05)
    assert report["row_counts"] == {"csv": 7} and report["checks"]["closed_form_vs_ritz_within_5pct"]


def test_deflection_rejects_negative_pressure(tmp_path):
    code, out, report = run(tmp_path, "deflection", "--pressures=-10,0")
    assert code == 2
    assert not out.exists()
    assert report["status"] == "failed" and "error" in report


def test_pull_calibrated(tmp_path):
    code, out, _ = run(tmp_path, "pull", "--calibrate-reference")
    table = rows(out)
    assert code == 0 and len(table) == 32
    assert table[0] == ["x_mm", "F_0kPa_N", "F_100kPa_N", "F_200kPa_N", "F_300kPa_N"]
    assert float(table[1][1]) == pytest.approx(0.53) and float(table[1][4]) == pytest.approx(12.67)


def test_pull_bad_step(tmp_path):
    code, out, _ = run(tmp_path, "pull", "--step", "40")
    assert code == 2 and not out.exists()


def test_calibrate_output_is_a_config(tmp_path):
    code, out, report = run(tmp_path, "calibrate", "--calibrate-reference", name="cal.json")
    assert code == 0
    assert report["calibration"]["held_fixed"] == ["stiffness_k"]
    code, pulled, _ = run(tmp_path, "pull", "--config", str(out), "--x-max", "1")
    assert code == 0
    assert rows(pulled)[1][1:] == ["0.53", "3.42374853", "7.82347302", "12.67"]


def test_calibrate_from_anchor_file(tmp_path):
    anchors = tmp_path / "a.csv"
    anchors.write_text("x_mm,p_kPa,F_N\n0,0,0.5\n10,0,1.0\n0,300,12\n10,300,12.5\n")
    code, out, report = run(tmp_path, "calibrate", "--anchors", str(anchors), name="cal.json")
    assert code == 0
    assert json.loads(out.read_text())["clutch"]["spring"]["stiffness_k"] == pytest.approx(0.05)


def test_calibrate_unidentifiable(tmp_path):
    anchors = tmp_path / "a.csv"
    anchors.write_text("0,0,0.5\n5,0,0.7\n")
    code, out, report = run(tmp_path, "calibrate", "--anchors", str(anchors), name="cal.json")
    assert code == 2 and "pressures" in report["error"]


def test_encoder_profile(tmp_path):
    prof = tmp_path / "p.csv"
    prof.write_text("time_s,displacement_mm\n0,0\n10,10\n15,5\n")
    code, out, report = run(tmp_path, "encoder", "--profile", str(prof))
    table = rows(out)
    assert code == 0
    assert table[0] == ["time_s", "est_mm", "true_mm", "fault_flag"]
    assert len(table) == 1502
    assert report["metrics"]["final_count"] == 5
    assert report["metrics"]["max_abs_error_mm"] <= 1.0


def test_encoder_fault_reported(tmp_path):
    prof = tmp_path / "p.csv"
    prof.write_text("0,0\n10,20\n")
    code, out, report = run(tmp_path, "encoder", "--profile", str(prof), "--sample-rate", "1")
    assert code == 1
    assert not report["checks"]["fault_free"]
    assert any("fault" in w for w in report["warnings"])
    assert any(r[3] == "1" for r in rows(out)[1:])


def test_encoder_empty_profile(tmp_path):
    prof = tmp_path / "p.csv"
    prof.write_text("time_s,displacement_mm\n")
    code, out, report = run(tmp_path, "encoder", "--profile", str(prof))
    assert code == 2 and "empty" in report["error"] and not out.exists()


def test_workspace_deterministic(tmp_path):
    code1, out1, rep = run(tmp_path, "workspace", "--check-symmetry", name="w1.csv")
    code4, out4, _ = run(tmp_path, "workspace", "--workers", "4", name="w4.csv")
    assert code1 == code4 == 0
    assert out1.read_bytes() == out4.read_bytes()
    assert len(rows(out1)) == 626
    assert rep["checks"]["rotation_invariant"]


def test_posture(tmp_path):
    readings = tmp_path / "r.csv"
    readings.write_text(f"t,dL1,dL2\n0,{15 * math.pi / 2},0\n1,-1,2\n")
    code, out, report = run(tmp_path, "posture", "--readings", str(readings))
    table = rows(out)
    assert code == 0
    assert float(table[1][1]) == pytest.approx(90.0)
    assert table[2] == ["1", "", "", "1"]
    assert report["warnings"]


def test_missing_input_is_io_error(tmp_path):
    code, _, report = run(tmp_path, "posture", "--readings", str(tmp_path / "nope.csv"))
    assert code == 4


def test_report_on_stderr(capsys):
    assert main(["pull", "--x-max", "2"]) == 0
    captured = capsys.readouterr()
    assert captured.out.startswith("x_mm,")
    assert json.loads(captured.err)["row_counts"] == {"csv": 3}
