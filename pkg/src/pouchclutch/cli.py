"""Command-line front end.

    pouchclutch deflection --config scenario.yaml --out deflection.csv
    pouchclutch pull --calibrate-reference --pressures 0,100,200,300 --out pull.csv
    pouchclutch encoder --profile ramp.csv --out trace.csv
    pouchclutch workspace --calibrate-reference --check-symmetry --out ws.csv
    pouchclutch posture --readings strips.csv --out angles.csv
    pouchclutch calibrate --calibrate-reference --out clutch.json

CSV goes to ``--out`` (stdout if omitted). A JSON run report goes to
``--report``, else ``<out>.report.json``, else stderr. Outputs are written
only after the whole run succeeds.

Exit codes: 0 success, 1 a self-check failed, 2 validation error,
3 numeric failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import os
import sys
import tempfile
import time
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from .apps import (
    calibrate_grip,
    calibrate_stiffness,
    finger_angles,
    rotation_invariance,
    workspace_sample,
)
from .clutch import REFERENCE_ANCHORS, calibrate, pull_curve
from .config import Scenario, clutch_to_dict, load_scenario
from .encoder import read_profile_csv, track_profile
from .errors import ConvergenceError, ValidationError
from .pouch import center_deflection
from .ritz import ritz_center_deflection

EXIT_OK, EXIT_SELFCHECK, EXIT_VALIDATION, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3, 4

DEFLECTION_RTOL = 0.05
DEFLECTION_CHECK_MIN_P = 10.0  # kPa; below this both columns are tiny
SYMMETRY_TOL = 1e-6  # mm


def fmt(x: float) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if math.isnan(x):
        return "nan"
    return format(float(x) + 0.0, ".9g")  # + 0.0 folds -0.0 into 0.0


def render_csv(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([c if isinstance(c, str) else fmt(c) for c in row])
    return buf.getvalue()


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def parse_floats(text: str) -> List[float]:
    """'0,50,100' or 'start:stop:step' (stop inclusive)."""
    text = text.strip()
    try:
        if ":" in text:
            start, stop, step = (float(v) for v in text.split(":"))
            if step <= 0:
                raise ValidationError(f"range step must be > 0 in {text!r}")
            n = int(math.floor((stop - start) / step + 1e-9))
            return [start + i * step for i in range(n + 1)]
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ValidationError(f"cannot parse number list {text!r}") from None


def parse_range(text: str) -> tuple:
    vals = parse_floats(text.replace(":", ","))
    if len(vals) != 2:
        raise ValidationError(f"expected LO:HI, got {text!r}")
    return tuple(vals)


def read_numeric_csv(path: str, columns: int) -> List[List[float]]:
    rows = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != columns:
                raise ValidationError(f"{path}:{lineno}: expected {columns} columns, got {len(row)}")
            try:
                rows.append([float(c) for c in row])
            except ValueError:
                if lineno == 1 and not rows:
                    continue  # header
                raise ValidationError(f"{path}:{lineno}: non-numeric value in {row}") from None
    if not rows:
        raise ValidationError(f"{path}: no data rows")
    return rows


class Run:
    """Collects outputs, warnings and self-check results for one invocation."""

    def __init__(self, args, scenario: Scenario):
        self.args = args
        self.scenario = scenario
        self.output = ""
        self.row_counts: Dict[str, int] = {}
        self.warnings: List[str] = []
        self.checks: Dict[str, bool] = {}
        self.metrics: Dict[str, float] = {}
        self.details: Dict[str, dict] = {}

    def emit(self, name: str, text: str, rows: int) -> None:
        self.output = text
        self.row_counts[name] = rows


def _override(obj, **changes):
    """Apply the command-line values that were actually given."""
    given = {k: v for k, v in changes.items() if v is not None and v != [] and v != ()}
    return dataclasses.replace(obj, **given) if given else obj


def _clutch(run: Run):
    cfg = run.scenario.clutch
    if run.args.calibrate_reference:
        cal = calibrate(REFERENCE_ANCHORS, cfg)
        run.metrics["calibration_rms_N"] = cal.rms
        cfg = cal.config
    return cfg


def cmd_deflection(run: Run) -> None:
    sweep = _override(run.scenario.deflection, pressures=run.args.pressures and parse_floats(run.args.pressures),
                      ritz_terms=run.args.ritz_terms)
    c = run.scenario.clutch
    rows, worst = [], 0.0
    for p in sweep.pressures:
        w0 = center_deflection(p, c.geometry, c.material, c.beta).center_deflection_w0
        wr = ritz_center_deflection(p, c.geometry, c.material, sweep.ritz_terms)
        rows.append((p, w0, wr))
        if p >= DEFLECTION_CHECK_MIN_P:
            worst = max(worst, abs(w0 / wr - 1.0))
    run.metrics["max_rel_dev_vs_ritz"] = worst
    run.checks["closed_form_vs_ritz_within_5pct"] = worst <= DEFLECTION_RTOL
    run.emit("csv", render_csv(["p_kPa", "w0_mm", "w0_ritz_mm"], rows), len(rows))


def cmd_pull(run: Run) -> None:
    sweep = _override(run.scenario.pull, pressures=run.args.pressures and parse_floats(run.args.pressures),
                      x_max=run.args.x_max, step=run.args.step)
    cfg = _clutch(run)
    curves = [pull_curve(p, sweep.x_max, sweep.step, cfg) for p in sweep.pressures]
    header = ["x_mm"] + [f"F_{fmt(p)}kPa_N" for p in sweep.pressures]
    x = curves[0].displacement
    rows = [(xi, *(c.force[i] for c in curves)) for i, xi in enumerate(x)]
    run.emit("csv", render_csv(header, rows), len(rows))


def cmd_encoder(run: Run) -> None:
    es = _override(run.scenario.encoder, sample_rate=run.args.sample_rate, debounce=run.args.debounce,
                   pressure_kpa=run.args.pressure)
    pattern = es.pattern()
    profile = read_profile_csv(run.args.profile)
    result = track_profile(pattern, profile, es.sample_rate, es.debounce, es.pressure_kpa,
                           glitch_rate=run.args.glitch_rate, seed=run.args.seed)
    rows = list(zip(result.times, result.est_mm, result.true_mm, result.fault_flag))
    run.metrics["max_abs_error_mm"] = result.max_abs_error
    run.metrics["final_count"] = result.final_state.position_count
    run.metrics["zeroing_events"] = len(result.zeroing_times)
    if result.fault_times:
        run.warnings.append(f"encoder fault(s): {len(result.fault_times)}, first at t={fmt(result.first_fault_time)} s")
    if not result.calibrated[-1]:
        run.warnings.append("index never seen: estimates are relative to the starting cell")
    run.checks["fault_free"] = result.valid
    run.checks["error_within_resolution"] = result.max_abs_error <= pattern.resolution_delta + 1e-9
    run.emit("csv", render_csv(["time_s", "est_mm", "true_mm", "fault_flag"], rows), len(rows))


def cmd_workspace(run: Run) -> None:
    a = run.args
    clutch_ranges = [parse_range(r) for r in a.p_clutch or []]
    ws = _override(
        run.scenario.workspace,
        p_act=a.p_act and parse_range(a.p_act),
        p_clutch=clutch_ranges and tuple(clutch_ranges * 3 if len(clutch_ranges) == 1 else clutch_ranges),
        grid=a.grid and tuple(int(v) for v in parse_floats(a.grid)),
    )
    cfg = _clutch(run)
    result = workspace_sample(ws.p_act, ws.p_clutch, ws.grid, run.scenario.pcc, cfg, workers=run.args.workers)
    if result.skipped:
        run.warnings.append(f"{result.skipped} infeasible sample(s) skipped")
    run.metrics["skipped"] = result.skipped
    if run.args.check_symmetry:
        if len(set(ws.p_clutch)) != 1 or len(set(ws.grid[1:])) != 1:
            raise ValidationError("--check-symmetry needs identical clutch ranges and grid counts")
        dist = rotation_invariance(result.xy)
        run.metrics["rotation_hausdorff_mm"] = dist
        run.checks["rotation_invariant"] = dist < SYMMETRY_TOL
    header = ["p_act_kPa", "p_c1_kPa", "p_c2_kPa", "p_c3_kPa", "tip_x_mm", "tip_y_mm"]
    run.emit("csv", render_csv(header, result.rows), len(result.rows))


def cmd_posture(run: Run) -> None:
    rig = run.scenario.finger
    rows, flagged = [], 0
    for t, dl1, dl2 in read_numeric_csv(run.args.readings, 3):
        if dl1 < 0 or dl2 < 0:
            flagged += 1
            rows.append((t, "", "", 1))
            continue
        th1, th2 = finger_angles(dl1, dl2, rig)
        rows.append((t, math.degrees(th1), math.degrees(th2), 0))
    if flagged:
        run.warnings.append(f"{flagged} row(s) with negative strip excursion flagged")
    run.emit("csv", render_csv(["t_s", "theta_MCP_deg", "theta_PIPDIP_deg", "flag"], rows), len(rows))


def cmd_calibrate(run: Run) -> None:
    if run.args.anchors:
        anchors = read_numeric_csv(run.args.anchors, 3)
    elif run.args.calibrate_reference:
        anchors = [list(a) for a in REFERENCE_ANCHORS]
    else:
        raise ValidationError("calibrate needs --anchors CSV or --calibrate-reference")
    cal = calibrate(anchors, run.scenario.clutch)
    stiff = calibrate_stiffness(cal.config)
    grip = calibrate_grip(cal.config, stiff)
    doc = {"clutch": clutch_to_dict(cal.config)}  # loadable with --config
    run.metrics["calibration_rms_N"] = cal.rms
    run.details["calibration"] = cal.report()
    run.details["scenarios"] = {
        "stiffness": {"K0": stiff.K0, "gain_cK": stiff.gain_cK},
        "grip": {"base_grip_F0g": grip.base_grip_F0g, "gain_cg": grip.gain_cg},
    }
    run.emit("json", json.dumps(doc, indent=2, sort_keys=True) + "\n", len(anchors))


COMMANDS = {
    "deflection": cmd_deflection,
    "pull": cmd_pull,
    "encoder": cmd_encoder,
    "workspace": cmd_workspace,
    "posture": cmd_posture,
    "calibrate": cmd_calibrate,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="scenario file (YAML or .json)")
    common.add_argument("--out", help="output path (stdout if omitted)")
    common.add_argument("--report", help="run-report JSON path")
    common.add_argument("--calibrate-reference", action="store_true",
                        help="fit the clutch to the 0.53 N / 12.67 N pull-force anchors first")
    common.add_argument("--seed", type=int, default=0, help="RNG seed (recorded in the report)")

    parser = argparse.ArgumentParser(prog="pouchclutch", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("deflection", parents=[common], help="apex deflection vs pressure")
    p.add_argument("--pressures", help="kPa list '0,100' or range '0:300:50'")
    p.add_argument("--ritz-terms", type=int)

    p = sub.add_parser("pull", parents=[common], help="impedance force vs strip displacement")
    p.add_argument("--pressures")
    p.add_argument("--x-max", type=float)
    p.add_argument("--step", type=float)

    p = sub.add_parser("encoder", parents=[common], help="replay a motion profile through the sensor")
    p.add_argument("--profile", required=True, help="CSV of time_s,displacement_mm")
    p.add_argument("--sample-rate", type=float)
    p.add_argument("--debounce", type=int)
    p.add_argument("--pressure", type=float, help="pouch pressure for tape-stretch distortion (kPa)")
    p.add_argument("--glitch-rate", type=float, default=0.0,
                   help="per-sample probability of a one-sample channel glitch (uses --seed)")

    p = sub.add_parser("workspace", parents=[common], help="tip workspace of the three-clutch actuator")
    p.add_argument("--p-act", help="actuator range LO:HI kPa")
    p.add_argument("--p-clutch", action="append", help="clutch range LO:HI kPa (once, or three times)")
    p.add_argument("--grid", help="four counts, e.g. 5,5,5,5")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--check-symmetry", action="store_true")

    p = sub.add_parser("posture", parents=[common], help="finger joint angles from strip excursions")
    p.add_argument("--readings", required=True, help="CSV of t,dL1_mm,dL2_mm")

    p = sub.add_parser("calibrate", parents=[common], help="fit clutch parameters to pull-force anchors")
    p.add_argument("--anchors", help="CSV of x_mm,p_kPa,F_N")
    return parser


def _report_path(args) -> Optional[Path]:
    if args.report:
        return Path(args.report)
    if args.out:
        return Path(args.out + ".report.json")
    return None


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    t0 = time.perf_counter()
    report = {"command": args.command, "argv": argv, "seed": args.seed, "version": __version__}
    code = EXIT_OK
    run = None
    try:
        scenario = load_scenario(args.config)
        report["parameter_digest"] = scenario.digest()
        run = Run(args, scenario)
        COMMANDS[args.command](run)
        if not all(run.checks.values()):
            code = EXIT_SELFCHECK
        if args.out:
            write_atomic(Path(args.out), run.output)
        else:
            sys.stdout.write(run.output)
    except ValidationError as exc:
        code, report["error"] = EXIT_VALIDATION, str(exc)
    except ConvergenceError as exc:
        code, report["error"] = EXIT_NUMERIC, str(exc)
    except OSError as exc:
        code, report["error"] = EXIT_IO, str(exc)
    if run is not None:
        report.update(
            row_counts=run.row_counts, warnings=run.warnings, checks=run.checks,
            metrics=run.metrics, **run.details,
        )
    report["exit_code"] = code
    report["status"] = "ok" if code == EXIT_OK else "failed"
    report["duration_s"] = round(time.perf_counter() - t0, 6)
    text = json.dumps(report, indent=2, sort_keys=True, default=float) + "\n"
    path = _report_path(args)
    try:
        if path is None:
            sys.stderr.write(text)
        else:
            write_atomic(path, text)
    except OSError as exc:
        sys.stderr.write(f"cannot write report: {exc}\n")
        code = code or EXIT_IO
    if "error" in report:
        sys.stderr.write(f"pouchclutch {args.command}: {report['error']}\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
