"""Virtual experiments: repeatability statistics, decoupling sweeps,
trajectory simulation and Monte Carlo workspace sampling."""
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources

import numpy as np
from scipy.interpolate import CubicSpline

from .exceptions import ValidationError
from .kinematics import forward_kinematics_batch
from .transmission import (
    cable_displacements,
    motor_angles,
    pass_through_displacements,
    tension_from_elongation,
)

# --------------------------------------------------------------------------- #
# ISO 9283 position repeatability


@dataclass(frozen=True)
class PoseRepeatability:
    mean: float
    std: float
    three_sigma: float
    count: int = 0
    barycenter: tuple = ()


@dataclass(frozen=True)
class RepeatabilityReport:
    poses: tuple
    total_mean: float
    total_std: float
    total_three_sigma: float

    def to_dict(self):
        return {
            "schema_version": 1,
            "report": "repeatability",
            "poses": [
                {
                    "pose": f"P{i + 1}",
                    "mean_mm": p.mean,
                    "std_mm": p.std,
                    "three_sigma_mm": p.three_sigma,
                    "count": p.count,
                    "barycenter_mm": list(p.barycenter),
                }
                for i, p in enumerate(self.poses)
            ],
            "total": {
                "mean_mm": self.total_mean,
                "std_mm": self.total_std,
                "three_sigma_mm": self.total_three_sigma,
            },
        }

    @classmethod
    def from_dict(cls, doc):
        poses = tuple(
            PoseRepeatability(
                mean=p["mean_mm"],
                std=p["std_mm"],
                three_sigma=p["three_sigma_mm"],
                count=p["count"],
                barycenter=tuple(p["barycenter_mm"]),
            )
            for p in doc["poses"]
        )
        t = doc["total"]
        return cls(poses, t["mean_mm"], t["std_mm"], t["three_sigma_mm"])

    TABLE_HEADER = ("pose", "mean_mm", "std_mm", "three_sigma_mm", "count", "bx_mm", "by_mm", "bz_mm")

    def to_table(self):
        rows = [
            (f"P{i + 1}", p.mean, p.std, p.three_sigma, p.count, *(p.barycenter or ("", "", "")))
            for i, p in enumerate(self.poses)
        ]
        rows.append(("Total", self.total_mean, self.total_std, self.total_three_sigma, "", "", "", ""))
        return self.TABLE_HEADER, rows

    @classmethod
    def from_table(cls, header, rows):
        if tuple(header) != cls.TABLE_HEADER:
            raise ValidationError(f"unexpected repeatability header {header!r}")
        poses, total = [], None
        for row in rows:
            if row[0] == "Total":
                total = (float(row[1]), float(row[2]), float(row[3]))
            else:
                poses.append(
                    PoseRepeatability(
                        mean=float(row[1]),
                        std=float(row[2]),
                        three_sigma=float(row[3]),
                        count=int(row[4]),
                        barycenter=tuple(float(v) for v in row[5:8] if v != ""),
                    )
                )
        if total is None:
            raise ValidationError("repeatability table has no Total row")
        return cls(tuple(poses), *total)


def pose_repeatability(points):
    """Distance statistics of one cloud of attained positions.

    ``std`` uses the ``n - 1`` denominator; ``three_sigma = mean + 3 std``.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValidationError(f"expected an (n, 3) point cloud, got shape {pts.shape}")
    if pts.shape[0] < 2:
        raise ValidationError("each cloud needs at least 2 points")
    bary = pts.mean(axis=0)
    dist = np.linalg.norm(pts - bary, axis=1)
    mean = float(dist.mean())
    std = float(dist.std(ddof=1))
    return PoseRepeatability(mean, std, mean + 3.0 * std, int(pts.shape[0]), tuple(float(v) for v in bary))


def aggregate_poses(poses):
    """Totals as the unweighted average of the per-pose rows."""
    poses = tuple(poses)
    if not poses:
        raise ValidationError("no poses to aggregate")
    return RepeatabilityReport(
        poses=poses,
        total_mean=float(np.mean([p.mean for p in poses])),
        total_std=float(np.mean([p.std for p in poses])),
        total_three_sigma=float(np.mean([p.three_sigma for p in poses])),
    )


def repeatability_stats(clouds):
    """Repeatability report over a sequence of per-pose point clouds."""
    return aggregate_poses(pose_repeatability(c) for c in clouds)


def reference_table():
    """Published hardware repeatability rows (mm) shipped as a fixture.

    Returns ``(per_pose_rows, published_total)`` where both are
    :class:`PoseRepeatability`-like records. The hardware result cannot be
    reproduced in simulation; it documents what the aggregation must give.
    """
    doc = json.loads((resources.files("cablearm") / "data" / "table2.json").read_text(encoding="utf-8"))
    rows = tuple(
        PoseRepeatability(mean=r["mean_mm"], std=r["std_mm"], three_sigma=r["three_sigma_mm"], count=r["count"])
        for r in doc["poses"]
    )
    t = doc["total"]
    return rows, PoseRepeatability(mean=t["mean_mm"], std=t["std_mm"], three_sigma=t["three_sigma_mm"])


def synthetic_clouds(centers, repeats, sigma, seed=None):
    """Isotropic Gaussian scatter around each commanded position."""
    rng = np.random.default_rng(seed)
    centers = np.asarray(centers, dtype=float)
    return [c + rng.normal(scale=sigma, size=(repeats, 3)) for c in centers]


# --------------------------------------------------------------------------- #
# decoupling sweep


@dataclass(frozen=True)
class DecouplingRow:
    joint: int
    max_displacement: float  # m
    worst_cable: str
    routed_length: float  # m
    tension_change: float  # N


@dataclass(frozen=True)
class DecouplingReport:
    rows: tuple

    @property
    def max_displacement(self):
        return max((r.max_displacement for r in self.rows), default=0.0)

    @property
    def max_tension_change(self):
        return max((r.tension_change for r in self.rows), default=0.0)

    TABLE_HEADER = ("joint", "max_displacement_m", "worst_cable", "routed_length_m", "tension_change_N")

    def to_table(self):
        return self.TABLE_HEADER, [
            (r.joint, r.max_displacement, r.worst_cable, r.routed_length, r.tension_change) for r in self.rows
        ]

    @classmethod
    def from_table(cls, header, rows):
        if tuple(header) != cls.TABLE_HEADER:
            raise ValidationError(f"unexpected decoupling header {header!r}")
        return cls(
            tuple(
                DecouplingRow(int(r[0]), float(r[1]), r[2], float(r[3]), float(r[4])) for r in rows
            )
        )

    def to_dict(self):
        return {
            "schema_version": 1,
            "report": "decoupling",
            "max_displacement_m": self.max_displacement,
            "max_tension_change_N": self.max_tension_change,
            "joints": [
                {
                    "joint": r.joint,
                    "max_displacement_m": r.max_displacement,
                    "worst_cable": r.worst_cable,
                    "routed_length_m": r.routed_length,
                    "tension_change_N": r.tension_change,
                }
                for r in self.rows
            ],
        }

    @classmethod
    def from_dict(cls, doc):
        return cls(
            tuple(
                DecouplingRow(
                    j["joint"], j["max_displacement_m"], j["worst_cable"], j["routed_length_m"], j["tension_change_N"]
                )
                for j in doc["joints"]
            )
        )


def decoupling_experiment(config, joints=(1, 2, 3), samples=241, routed_length=None):
    """Sweep each joint in ``joints`` over its full range, all others at zero.

    For every cable not driven by the swept joint, the largest length change
    is recorded and converted to the tension change it would cause in an
    elastic cable of ``routed_length`` (the cable's own free length when
    ``None``).
    """
    rows = []
    lim = config.limits
    for joint in joints:
        k = joint - 1
        sweep = np.linspace(lim.lower[k], lim.upper[k], samples)
        others = [i for i, c in enumerate(config.cables) if c.driven_joint != joint]
        worst, worst_i = 0.0, None
        theta = np.zeros(config.n_independent)
        base = pass_through_displacements(config, theta)
        for value in sweep:
            theta[k] = value
            delta = np.abs(pass_through_displacements(config, theta) - base)
            for i in others:
                if worst_i is None or delta[i] > worst:
                    worst, worst_i = float(delta[i]), i
        if worst_i is None:
            rows.append(DecouplingRow(joint, 0.0, "", float("nan"), 0.0))
            continue
        cable = config.cables[worst_i]
        length = cable.free_length if routed_length is None else routed_length
        rows.append(
            DecouplingRow(
                joint=joint,
                max_displacement=worst,
                worst_cable=cable.cable_id,
                routed_length=float(length),
                tension_change=float(tension_from_elongation(config.cable_spec, worst, length)),
            )
        )
    return DecouplingReport(tuple(rows))


# --------------------------------------------------------------------------- #
# trajectories


@dataclass(frozen=True)
class TrajectorySample:
    time: float
    joints: np.ndarray
    position: np.ndarray
    speed: float
    acceleration: float


@dataclass
class Trajectory:
    time: np.ndarray
    joints: np.ndarray  # (k, m) rad
    joint_rates: np.ndarray  # (k, m) rad/s, analytic spline derivative
    positions: np.ndarray  # (k, 3) m
    speed: np.ndarray  # (k,) m/s
    acceleration: np.ndarray  # (k,) m/s^2
    displacements: np.ndarray  # (k, n_cables) m
    motor_angles: np.ndarray  # (k, n_cables) rad
    cable_ids: tuple = field(default=())

    @property
    def samples(self):
        return [
            TrajectorySample(float(t), q, p, float(v), float(a))
            for t, q, p, v, a in zip(self.time, self.joints, self.positions, self.speed, self.acceleration)
        ]

    @property
    def peak_speed(self):
        return float(self.speed.max())

    def table_header(self):
        m = self.joints.shape[1]
        return (
            ["time_s"]
            + [f"q{i + 1}_rad" for i in range(m)]
            + ["x_m", "y_m", "z_m", "speed_m_per_s", "accel_m_per_s2"]
            + [f"disp_{c}_m" for c in self.cable_ids]
            + [f"motor_{c}_rad" for c in self.cable_ids]
        )

    def to_table(self):
        rows = np.column_stack(
            [self.time, self.joints, self.positions, self.speed, self.acceleration, self.displacements, self.motor_angles]
        )
        return self.table_header(), [tuple(float(v) for v in r) for r in rows]


def simulate_trajectory(config, waypoints, times, dt=0.01, boundary="clamped"):
    """Interpolate joint waypoints with a cubic spline in time and evaluate it.

    ``boundary`` is passed to :class:`scipy.interpolate.CubicSpline`:
    ``"clamped"`` starts and stops at rest; ``"not-a-knot"`` reproduces any
    cubic (and so any constant-rate motion) exactly. Tool speed and
    acceleration come from central differences of the sampled positions with
    second-order one-sided stencils at the ends.
    """
    wp = np.atleast_2d(np.asarray(waypoints, dtype=float))
    t = np.asarray(times, dtype=float)
    if wp.shape[1] != config.n_independent:
        raise ValidationError(f"waypoints need {config.n_independent} joint values each")
    if t.shape != (wp.shape[0],):
        raise ValidationError("need exactly one time per waypoint")
    if wp.shape[0] < 2:
        raise ValidationError("need at least 2 waypoints")
    if np.any(np.diff(t) <= 0):
        raise ValidationError("waypoint times must be strictly increasing")
    if not dt > 0:
        raise ValidationError("dt must be > 0")
    for i, q in enumerate(wp):
        if not config.limits.contains(q):
            raise ValidationError(f"waypoint {i} lies outside the joint limits")

    spline = CubicSpline(t, wp, bc_type=boundary, axis=0)
    n = int(round((t[-1] - t[0]) / dt)) + 1
    ts = np.linspace(t[0], t[-1], max(n, 3))
    q = spline(ts)
    qd = spline(ts, 1)
    pos, _ = forward_kinematics_batch(config, q)
    vel = np.gradient(pos, ts, axis=0, edge_order=2)
    acc = np.gradient(vel, ts, axis=0, edge_order=2)
    disp = np.array([cable_displacements(config, qi) for qi in q]).reshape(len(ts), len(config.cables))
    if config.motors and config.cables:
        angles = np.array([motor_angles(config, d) for d in disp])
    else:
        angles = np.zeros_like(disp)
    return Trajectory(
        time=ts,
        joints=q,
        joint_rates=qd,
        positions=pos,
        speed=np.linalg.norm(vel, axis=1),
        acceleration=np.linalg.norm(acc, axis=1),
        displacements=disp,
        motor_angles=angles,
        cable_ids=config.cable_ids,
    )


# --------------------------------------------------------------------------- #
# workspace


@dataclass
class Workspace:
    joints: np.ndarray
    points: np.ndarray

    @property
    def stats(self):
        radius = np.linalg.norm(self.points, axis=1)
        return {
            "count": int(self.points.shape[0]),
            "min_m": self.points.min(axis=0).tolist(),
            "max_m": self.points.max(axis=0).tolist(),
            "mean_m": self.points.mean(axis=0).tolist(),
            "max_radius_m": float(radius.max()),
            "min_radius_m": float(radius.min()),
        }


def workspace_sweep(config, sample_count, seed=None, n_jobs=1, chunk_size=4096):
    """Uniformly sample independent joints within limits and run FK on each.

    Samples are drawn in fixed-size chunks, each from its own child of
    ``SeedSequence(seed)``, so the cloud is bit-identical for a given seed
    whatever ``n_jobs`` is.
    """
    if int(sample_count) < 1:
        raise ValidationError("sample_count must be >= 1")
    sample_count = int(sample_count)
    lo, hi = config.limits.lower_array, config.limits.upper_array
    sizes = [min(chunk_size, sample_count - s) for s in range(0, sample_count, chunk_size)]
    children = np.random.SeedSequence(seed).spawn(len(sizes))

    def run(args):
        size, child = args
        q = np.random.default_rng(child).uniform(lo, hi, size=(size, lo.size))
        pos, _ = forward_kinematics_batch(config, q)
        return q, pos

    jobs = list(zip(sizes, children))
    if n_jobs == 1:
        parts = [run(j) for j in jobs]
    else:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            parts = list(pool.map(run, jobs))
    return Workspace(
        joints=np.concatenate([p[0] for p in parts]),
        points=np.concatenate([p[1] for p in parts]),
    )
