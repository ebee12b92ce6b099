"""Command line harness.

Exit codes: 0 on success, 1 on usage or validation errors, 2 when the IK
solver does not converge.
"""
import argparse
import logging
import math
import os
import sys

import numpy as np

from . import reports
from .config import bundled_config_path, load_config
from .exceptions import CableArmError
from .experiments import (
    decoupling_experiment,
    reference_table,
    aggregate_poses,
    repeatability_stats,
    simulate_trajectory,
    synthetic_clouds,
    workspace_sweep,
)
from .ik import DEFAULT_DAMPING, IkRequest, solve_position
from .kinematics import Pose, forward_kinematics
from .transmission import (
    cable_displacements,
    coupling_matrix,
    coupling_matrix_fd,
    max_payload,
    motor_angles,
    static_load_tensions,
)

log = logging.getLogger("cablearm")

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_NO_CONVERGENCE = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad usage; 2 is reserved for IK failure
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _floats(text):
    try:
        return [float(v) for v in text.replace(";", ",").split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _matrix(text):
    try:
        return [[float(v) for v in row.split(",")] for row in text.split(";") if row.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected rows like '1,2,3;4,5,6', got {text!r}") from None


def _angles(values, units):
    arr = np.asarray(values, dtype=float)
    return np.radians(arr) if units == "deg" else arr


def _resolve_config(path):
    if path is None:
        return load_config(str(bundled_config_path("d3arm")))
    if not os.path.exists(path):
        stem = os.path.splitext(os.path.basename(path))[0]
        bundled = bundled_config_path(stem)
        if bundled.is_file():
            log.info("using bundled configuration %s", stem)
            return load_config(bundled.read_text(encoding="utf-8"))
    return load_config(path)


def _joint_vector(args, cfg, values, what="--joints"):
    if values is None:
        return np.zeros(cfg.n_independent)
    q = _angles(values, args.units)
    if q.size != cfg.n_independent:
        raise CableArmError(f"{what} needs {cfg.n_independent} values, got {q.size}")
    return q


def _emit(args, doc, table=None, svg=None):
    fmt = args.format
    if fmt == "json":
        reports.write_json(doc, args.output)
    elif fmt == "csv":
        if table is None:
            raise CableArmError(f"csv output is not available for '{args.command}'")
        reports.write_csv(*table, target=args.output)
    else:
        if svg is None:
            raise CableArmError(f"svg output is not available for '{args.command}'")
        svg(args.output)


# --------------------------------------------------------------------------- #
# subcommands


def cmd_fk(args, cfg):
    q = _joint_vector(args, cfg, args.joints)
    pose = forward_kinematics(cfg, q)
    doc = {
        "report": "fk",
        "joints_rad": q,
        "position_m": pose.position,
        "rotation": pose.rotation,
        "rotvec_rad": pose.rotvec,
    }
    header = ["x_m", "y_m", "z_m", "rx_rad", "ry_rad", "rz_rad"]
    _emit(args, doc, (header, [tuple(pose.position) + tuple(pose.rotvec)]))
    return EXIT_OK


def cmd_ik(args, cfg):
    if args.target_joints is not None:
        target = forward_kinematics(cfg, _joint_vector(args, cfg, args.target_joints, "--target-joints"))
    elif args.target is not None:
        values = np.asarray(args.target, dtype=float)
        if values.size == 3:
            values = np.concatenate([values, np.zeros(3)])
        if values.size != 6:
            raise CableArmError("--target takes x,y,z[,rx,ry,rz] (metres, rotation vector in rad)")
        target = Pose.from_rotvec(values[:3], values[3:])
    else:
        raise CableArmError("ik needs --target or --target-joints")
    seed = _joint_vector(args, cfg, args.initial, "--initial")
    request = IkRequest(
        target=target,
        seed=cfg.limits.clip(seed),
        position_tolerance=args.tol,
        orientation_tolerance=args.tol,
        max_iterations=args.max_iter,
        damping=args.damping,
    )
    result = solve_position(cfg, request)
    doc = {
        "report": "ik",
        "converged": result.converged,
        "iterations": result.iterations_used,
        "solution_rad": result.solution,
        "residual_position_m": result.residual_position,
        "residual_orientation_rad": result.residual_orientation,
    }
    header = ["converged", "iterations"] + [f"q{i + 1}_rad" for i in range(cfg.n_independent)] + [
        "residual_position_m",
        "residual_orientation_rad",
    ]
    row = (int(result.converged), result.iterations_used, *result.solution, result.residual_position, result.residual_orientation)
    _emit(args, doc, (header, [row]))
    return EXIT_OK if result.converged else EXIT_NO_CONVERGENCE


def cmd_coupling(args, cfg):
    q = _joint_vector(args, cfg, args.joints)
    cm = coupling_matrix_fd(cfg, q) if args.fd else coupling_matrix(cfg, q)
    columns = [f"theta{j + 1}_m_per_rad" for j in range(cfg.n_equivalent)]
    doc = {"report": "coupling", "cable_ids": list(cm.cable_ids), "columns": columns, "entries": cm.entries}
    rows = [(cid, *row) for cid, row in zip(cm.cable_ids, cm.entries)]
    _emit(args, doc, (["cable_id"] + columns, rows))
    return EXIT_OK


def cmd_decouple(args, cfg):
    report = decoupling_experiment(cfg, joints=tuple(args.sweep), samples=args.samples, routed_length=args.routed_length)
    _emit(args, report.to_dict(), report.to_table())
    return EXIT_OK


def _read_clouds(path):
    header, rows = reports.read_csv(path)
    need = ["pose", "x_mm", "y_mm", "z_mm"]
    if header[:4] != need:
        raise CableArmError(f"repeatability input must have columns {','.join(need)}")
    labels = []
    clouds = {}
    for row in rows:
        key = str(row[0])
        if key not in clouds:
            labels.append(key)
            clouds[key] = []
        clouds[key].append([float(v) for v in row[1:4]])
    return labels, [np.array(clouds[k]) for k in labels]


def cmd_repeatability(args, cfg):
    if args.reference:
        rows, _ = reference_table()
        report = aggregate_poses(rows)
        _emit(args, report.to_dict(), report.to_table())
        return EXIT_OK
    if args.input:
        labels, clouds = _read_clouds(args.input)
    else:
        centers = np.zeros((args.poses, 3))
        clouds = synthetic_clouds(centers, args.repeats, args.sigma, seed=args.seed)
        labels = [f"P{i + 1}" for i in range(args.poses)]
    report = repeatability_stats(clouds)

    def svg(target):
        pts = np.concatenate([c - np.mean(c, axis=0) for c in clouds])
        groups = np.concatenate([[lab] * len(c) for lab, c in zip(labels, clouds)])
        reports.svg_projections(pts, target, title="Deviation from barycentre", unit="mm", groups=groups)

    _emit(args, report.to_dict(), report.to_table(), svg)
    return EXIT_OK


def cmd_trajectory(args, cfg):
    wp = _angles(np.asarray(args.waypoints, dtype=float), args.units)
    if args.times is not None:
        times = np.asarray(args.times, dtype=float)
    else:
        times = np.arange(wp.shape[0]) * args.segment_time
    traj = simulate_trajectory(cfg, wp, times, dt=args.dt, boundary=args.boundary)
    doc = {
        "report": "trajectory",
        "peak_speed_m_per_s": traj.peak_speed,
        "peak_acceleration_m_per_s2": float(traj.acceleration.max()),
        "columns": traj.table_header(),
        "samples": traj.to_table()[1],
    }
    _emit(args, doc, traj.to_table(), lambda t: reports.svg_speed(traj.time, traj.speed, t))
    return EXIT_OK


def cmd_workspace(args, cfg):
    ws = workspace_sweep(cfg, args.samples, seed=args.seed, n_jobs=args.jobs)
    doc = {"report": "workspace", "seed": args.seed, **ws.stats}
    rows = [tuple(p) for p in ws.points]
    _emit(
        args,
        doc,
        (["x_m", "y_m", "z_m"], rows),
        lambda t: reports.svg_projections(ws.points, t, title=f"Workspace ({args.samples} samples)"),
    )
    return EXIT_OK


def cmd_load(args, cfg):
    q = _joint_vector(args, cfg, args.joints)
    rep = static_load_tensions(cfg, q, args.mass, args.gravity)
    disp = cable_displacements(cfg, q)
    doc = {
        "report": "load-check",
        "payload_kg": args.mass,
        "gravity_m_per_s2": args.gravity,
        "feasible": rep.feasible,
        "violations": list(rep.violations),
        "cables": [
            {"cable_id": cid, "tension_N": t, "displacement_m": d, "motor_angle_rad": a}
            for cid, t, d, a in zip(rep.cable_ids, rep.tensions, disp, motor_angles(cfg, disp))
        ],
        "motor_torque_Nm": rep.motor_torques,
    }
    if args.find_max:
        limit = max_payload(cfg, q, args.gravity)
        doc["max_payload_kg"] = None if math.isinf(limit) else limit
    rows = [(cid, t) for cid, t in zip(rep.cable_ids, rep.tensions)]
    _emit(args, doc, (["cable_id", "tension_N"], rows))
    return EXIT_OK


# --------------------------------------------------------------------------- #


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="arm configuration (JSON); default: bundled d3arm")
    common.add_argument("--output", metavar="PATH", help="output file; standard output when omitted")
    common.add_argument("--format", choices=("csv", "json", "svg"), help="output format")
    common.add_argument("--seed", type=int, default=None, help="random seed")
    common.add_argument("--units", choices=("deg", "rad"), default="deg", help="units of joint angles given on the command line")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="cablearm", description="Cable-driven arm kinematics and virtual experiments.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, fmt, help):
        p = sub.add_parser(name, parents=[common], help=help)
        p.set_defaults(func=func, default_format=fmt)
        return p

    p = add("fk", cmd_fk, "json", "forward kinematics")
    p.add_argument("--joints", type=_floats)

    p = add("ik", cmd_ik, "json", "position inverse kinematics")
    p.add_argument("--target", type=_floats, help="x,y,z[,rx,ry,rz] in m and rad")
    p.add_argument("--target-joints", type=_floats, help="build the target from these joint angles")
    p.add_argument("--initial", type=_floats, help="initial guess (joint angles)")
    p.add_argument("--damping", type=float, default=DEFAULT_DAMPING)
    p.add_argument("--max-iter", type=int, default=100)
    p.add_argument("--tol", type=float, default=1e-6)

    p = add("coupling", cmd_coupling, "csv", "cable coupling matrix")
    p.add_argument("--joints", type=_floats)
    p.add_argument("--fd", action="store_true", help="finite-difference matrix instead of the analytic one")

    p = add("decouple-test", cmd_decouple, "json", "virtual decoupling verification")
    p.add_argument("--sweep", type=int, nargs="+", default=[1, 2, 3], help="joints to sweep")
    p.add_argument("--samples", type=int, default=241)
    p.add_argument("--routed-length", type=float, default=None, help="m; default: each cable's free length")

    p = add("repeatability", cmd_repeatability, "json", "ISO 9283 position repeatability statistics")
    p.add_argument("--input", metavar="CSV", help="columns pose,x_mm,y_mm,z_mm")
    p.add_argument("--reference", action="store_true", help="aggregate the shipped hardware reference rows")
    p.add_argument("--poses", type=int, default=5)
    p.add_argument("--repeats", type=int, default=30)
    p.add_argument("--sigma", type=float, default=0.5, help="synthetic scatter per axis, mm")

    p = add("trajectory", cmd_trajectory, "csv", "joint-space trajectory simulation")
    p.add_argument("--waypoints", type=_matrix, required=True, help="'q1,..,q6;q1,..,q6;...'")
    p.add_argument("--times", type=_floats)
    p.add_argument("--segment-time", type=float, default=1.0)
    p.add_argument("--dt", type=float, default=0.01)
    p.add_argument("--boundary", choices=("clamped", "natural", "not-a-knot"), default="clamped")

    p = add("workspace", cmd_workspace, "csv", "Monte Carlo workspace sweep")
    p.add_argument("--samples", type=int, default=10000)
    p.add_argument("--jobs", type=int, default=1)

    p = add("load-check", cmd_load, "json", "static payload cable tensions")
    p.add_argument("--mass", type=float, required=True, help="payload, kg")
    p.add_argument("--joints", type=_floats)
    p.add_argument("--gravity", type=float, default=9.81)
    p.add_argument("--find-max", action="store_true", help="also bisect for the largest feasible payload")
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INVALID
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    args.format = args.format or args.default_format
    try:
        cfg = _resolve_config(args.config)
        return args.func(args, cfg)
    except (CableArmError, OSError, ValueError) as exc:
        print(f"cablearm {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
