"""Arm description: DH chain, joint constraints, limits, cables and motors.

An :class:`ArmConfig` is immutable once built. Every container field is a
tuple so configs compare by value and can be shared freely between threads;
numpy views are derived on demand and marked read-only.
"""
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources

import jsonschema
import numpy as np
from scipy.spatial.transform import Rotation

from .exceptions import ConfigError
from .units import format_quantity, parse_quantity

SCHEMA_VERSION = 1

DRIVE_KINDS = ("direct_capstan", "rolling_pair")
PASS_KINDS = ("aligner", "rolling", "naive_wrap")


def _readonly(arr):
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class DHRow:
    """One row of a standard (distal) Denavit-Hartenberg table.

    The local transform is ``Rz(theta + joint_angle_offset) Tz(link_offset)
    Tx(link_length) Rx(link_twist)``.
    """

    link_twist: float
    link_length: float
    link_offset: float = 0.0
    joint_angle_offset: float = 0.0


@dataclass(frozen=True)
class JointLimits:
    lower: tuple
    upper: tuple
    names: tuple = ()

    def __len__(self):
        return len(self.lower)

    @cached_property
    def lower_array(self):
        return _readonly(np.array(self.lower, dtype=float))

    @cached_property
    def upper_array(self):
        return _readonly(np.array(self.upper, dtype=float))

    def clip(self, theta):
        return np.clip(theta, self.lower_array, self.upper_array)

    def contains(self, theta, atol=0.0):
        theta = np.asarray(theta, dtype=float)
        return bool(
            np.all(theta >= self.lower_array - atol) and np.all(theta <= self.upper_array + atol)
        )

    def name(self, index):
        """Display name of zero-based independent joint ``index``."""
        if self.names:
            return self.names[index]
        return f"Joint{index + 1}"


@dataclass(frozen=True)
class CableSpec:
    diameter: float = 1e-3
    youngs_modulus: float = 100e9
    max_tension: float = 900.0
    pretension: float = 120.0

    @property
    def area(self):
        return math.pi * (self.diameter / 2.0) ** 2


@dataclass(frozen=True)
class MotorSpec:
    roller_radius: float = 0.015
    nominal_torque: float = 13.0
    nominal_speed: float = 300.0 * 2.0 * math.pi / 60.0
    encoder_resolution: float = math.radians(0.087)


@dataclass(frozen=True)
class ConstraintMatrix:
    """Integer matrix ``U`` with ``theta_equivalent = U.T @ theta_independent``."""

    entries: tuple

    @cached_property
    def array(self):
        return _readonly(np.array(self.entries, dtype=np.int64).reshape(len(self.entries), -1))

    @property
    def n_independent(self):
        return self.array.shape[0]

    @property
    def n_equivalent(self):
        return self.array.shape[1]


@dataclass(frozen=True)
class PassThrough:
    """How a cable crosses an upstream joint on its way to the motor.

    ``joint`` is the one-based independent joint index.
    """

    joint: int
    kind: str
    wrap_radius: float = 0.0


@dataclass(frozen=True)
class CableRouting:
    """Routing of a single cable from its motor roller to the joint it drives.

    ``direction`` is +1 or -1; the two members of an antagonistic pair carry
    opposite directions. ``drive_radius`` is the capstan radius for
    ``direct_capstan`` drives and ignored for ``rolling_pair`` drives, which
    use the rolling radius of the driven joint.
    """

    cable_id: str
    driven_joint: int
    direction: int
    drive_kind: str
    free_length: float
    drive_radius: float = 0.0
    pass_through: tuple = ()


@dataclass(frozen=True)
class ArmConfig:
    dh_rows: tuple
    constraint: ConstraintMatrix
    limits: JointLimits
    cables: tuple = ()
    cable_spec: CableSpec = field(default_factory=CableSpec)
    motors: tuple = ()
    rolling_radius: tuple = ()  # ((joint, R), ...) sorted by joint
    base_rotation: tuple = (0.0, 0.0, 0.0)  # fixed-axis roll, pitch, yaw
    base_position: tuple = (0.0, 0.0, 0.0)
    name: str = "arm"
    notes: tuple = ()

    def __post_init__(self):
        validate_config(self)

    @property
    def n_equivalent(self):
        return len(self.dh_rows)

    @property
    def n_independent(self):
        return self.constraint.n_independent

    @cached_property
    def dh_array(self):
        """``(n, 4)`` array of ``[twist, length, offset, angle_offset]``."""
        return _readonly(
            np.array(
                [[r.link_twist, r.link_length, r.link_offset, r.joint_angle_offset] for r in self.dh_rows],
                dtype=float,
            ).reshape(-1, 4)
        )

    @cached_property
    def base_transform(self):
        T = np.eye(4)
        T[:3, :3] = Rotation.from_euler("xyz", self.base_rotation).as_matrix()
        T[:3, 3] = self.base_position
        return _readonly(T)

    @cached_property
    def rolling_radii(self):
        return dict(self.rolling_radius)

    @property
    def cable_ids(self):
        return tuple(c.cable_id for c in self.cables)

    @property
    def total_length(self):
        """Upper bound on the distance from the first joint axis to the tool."""
        return float(sum(math.hypot(r.link_length, r.link_offset) for r in self.dh_rows))


def _finite(value, where):
    if not math.isfinite(value):
        raise ConfigError(f"must be finite, got {value!r}", where)


def validate_config(cfg):
    """Check every cross-field invariant of ``cfg``; raise :class:`ConfigError`."""
    for i, row in enumerate(cfg.dh_rows):
        for name in ("link_twist", "link_length", "link_offset", "joint_angle_offset"):
            _finite(getattr(row, name), f"dh[{i}].{name}")
        if row.link_length < 0:
            raise ConfigError("link_length must be >= 0", f"dh[{i}]")
        if row.link_offset < 0:
            raise ConfigError("link_offset must be >= 0", f"dh[{i}]")

    U = cfg.constraint.array
    if U.size == 0:
        raise ConfigError("constraint matrix is empty", "constraint")
    if not np.isin(U, (-1, 0, 1)).all():
        raise ConfigError("entries must be -1, 0 or 1", "constraint")
    for r in range(U.shape[0]):
        if not U[r].any():
            raise ConfigError(f"row {r} has no nonzero entry", "constraint")
    for c in range(U.shape[1]):
        if np.count_nonzero(U[:, c]) > 1:
            raise ConfigError(f"column {c} has more than one nonzero entry", "constraint")
    if U.shape[1] != len(cfg.dh_rows):
        raise ConfigError(
            f"{U.shape[1]} constraint columns but {len(cfg.dh_rows)} DH rows", "constraint"
        )

    m = U.shape[0]
    lim = cfg.limits
    if len(lim.lower) != m or len(lim.upper) != m:
        raise ConfigError(f"expected {m} joint limits, got {len(lim.lower)}", "limits")
    for i, (lo, hi) in enumerate(zip(lim.lower, lim.upper)):
        _finite(lo, f"limits[{lim.name(i)}].lower")
        _finite(hi, f"limits[{lim.name(i)}].upper")
        if not lo < hi:
            raise ConfigError(
                f"lower ({math.degrees(lo):g} deg) must be < upper ({math.degrees(hi):g} deg)",
                f"limits[{lim.name(i)}]",
            )

    spec = cfg.cable_spec
    for name in ("diameter", "youngs_modulus", "max_tension", "pretension"):
        _finite(getattr(spec, name), f"cable_spec.{name}")
    if spec.diameter <= 0:
        raise ConfigError("must be > 0", "cable_spec.diameter")
    if spec.youngs_modulus <= 0:
        raise ConfigError("must be > 0", "cable_spec.youngs_modulus")
    if not 0 <= spec.pretension < spec.max_tension:
        raise ConfigError("pretension must satisfy 0 <= pretension < max_tension", "cable_spec.pretension")

    if cfg.motors and len(cfg.motors) != m:
        raise ConfigError(f"expected {m} motors, got {len(cfg.motors)}", "motors")
    for i, motor in enumerate(cfg.motors):
        if not motor.roller_radius > 0:
            raise ConfigError("must be > 0", f"motors[{i}].roller_radius")
        if not motor.encoder_resolution > 0:
            raise ConfigError("must be > 0", f"motors[{i}].encoder_resolution")

    radii = dict(cfg.rolling_radius)
    for joint, R in radii.items():
        if not 1 <= joint <= m:
            raise ConfigError(f"unknown joint {joint}", "rolling_radius")
        if not R > 0:
            raise ConfigError("must be > 0", f"rolling_radius[{joint}]")

    seen = set()
    for i, cable in enumerate(cfg.cables):
        where = f"cables[{i}]"
        if cable.cable_id in seen:
            raise ConfigError(f"duplicate cable id {cable.cable_id!r}", where)
        seen.add(cable.cable_id)
        if not 1 <= cable.driven_joint <= m:
            raise ConfigError(f"driven_joint {cable.driven_joint} out of range 1..{m}", where)
        if cable.direction not in (1, -1):
            raise ConfigError("direction must be +1 or -1", where)
        if cable.drive_kind not in DRIVE_KINDS:
            raise ConfigError(f"unknown drive kind {cable.drive_kind!r}", where)
        if cable.drive_kind == "direct_capstan" and not cable.drive_radius > 0:
            raise ConfigError("direct_capstan drive needs radius > 0", where)
        if cable.drive_kind == "rolling_pair":
            if cable.driven_joint not in radii:
                raise ConfigError(f"joint {cable.driven_joint} has no rolling_radius", where)
            row = U[cable.driven_joint - 1]
            if np.count_nonzero(row) != 2:
                raise ConfigError("rolling_pair drive needs a joint with two equivalent axes", where)
        if not cable.free_length > 0:
            raise ConfigError("free_length must be > 0", where)
        for k, seg in enumerate(cable.pass_through):
            swhere = f"{where}.pass_through[{k}]"
            if seg.kind not in PASS_KINDS:
                raise ConfigError(f"unknown routing kind {seg.kind!r}", swhere)
            if not 1 <= seg.joint < cable.driven_joint:
                raise ConfigError("pass-through joints must precede the driven joint", swhere)
            if seg.kind == "naive_wrap" and not seg.wrap_radius > 0:
                raise ConfigError("naive_wrap needs wrap_radius > 0", swhere)
            if seg.kind == "rolling" and seg.joint not in radii:
                raise ConfigError(f"joint {seg.joint} is not a rolling joint", swhere)


def expand_joints(independent, constraint):
    """Map independent joint angles to the equivalent chain: ``U.T @ theta``.

    Accepts a single vector or a stack of vectors along the last axis.
    Integer input stays integer, so the mapping can be checked exactly.
    ``constraint`` may be a :class:`ConstraintMatrix`, an :class:`ArmConfig`
    or a raw integer array.
    """
    if isinstance(constraint, ArmConfig):
        constraint = constraint.constraint
    U = constraint.array if isinstance(constraint, ConstraintMatrix) else np.asarray(constraint)
    theta = np.asarray(independent)
    if not np.issubdtype(theta.dtype, np.integer):
        theta = theta.astype(float)
    return theta @ U


# --------------------------------------------------------------------------- #
# document <-> ArmConfig

_Q = {"type": "string"}
_QUANTITY_ROW = {
    "type": "object",
    "required": ["link_twist", "link_length"],
    "properties": {
        "link_twist": _Q,
        "link_length": _Q,
        "link_offset": _Q,
        "joint_angle_offset": _Q,
    },
    "additionalProperties": False,
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["dh", "constraint", "limits", "cables", "cable_spec", "motors"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "name": {"type": "string"},
        "notes": {"type": "array", "items": {"type": "string"}},
        "base": {
            "type": "object",
            "properties": {
                "rotation_rpy": {"type": "array", "items": _Q, "minItems": 3, "maxItems": 3},
                "position": {"type": "array", "items": _Q, "minItems": 3, "maxItems": 3},
            },
            "additionalProperties": False,
        },
        "dh": {"type": "array", "items": _QUANTITY_ROW, "minItems": 1},
        "constraint": {
            "type": "array",
            "minItems": 1,
            "items": {"type": "array", "items": {"type": "integer"}, "minItems": 1},
        },
        "limits": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["lower", "upper"],
                "properties": {"joint": {"type": "string"}, "lower": _Q, "upper": _Q},
                "additionalProperties": False,
            },
        },
        "rolling_radius": {"type": "object", "additionalProperties": _Q},
        "cables": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "driven_joint", "direction", "drive", "free_length"],
                "properties": {
                    "id": {"type": "string"},
                    "driven_joint": {"type": "integer"},
                    "direction": {"enum": [1, -1]},
                    "drive": {
                        "type": "object",
                        "required": ["kind"],
                        "properties": {"kind": {"enum": list(DRIVE_KINDS)}, "radius": _Q},
                        "additionalProperties": False,
                    },
                    "pass_through": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["joint", "kind"],
                            "properties": {
                                "joint": {"type": "integer"},
                                "kind": {"enum": list(PASS_KINDS)},
                                "wrap_radius": _Q,
                            },
                            "additionalProperties": False,
                        },
                    },
                    "free_length": _Q,
                },
                "additionalProperties": False,
            },
        },
        "cable_spec": {
            "type": "object",
            "required": ["diameter", "youngs_modulus", "max_tension", "pretension"],
            "properties": {
                "diameter": _Q,
                "youngs_modulus": _Q,
                "max_tension": _Q,
                "pretension": _Q,
            },
            "additionalProperties": False,
        },
        "motors": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["roller_radius", "nominal_torque", "nominal_speed", "encoder_resolution"],
                "properties": {
                    "roller_radius": _Q,
                    "nominal_torque": _Q,
                    "nominal_speed": _Q,
                    "encoder_resolution": _Q,
                },
                "additionalProperties": False,
            },
        },
    },
    "additionalProperties": False,
}


def _q(node, key, dimension, where, default=None):
    if key not in node:
        if default is None:
            raise ConfigError(f"missing {key!r}", where)
        return default
    try:
        return parse_quantity(node[key], dimension)
    except ValueError as exc:
        raise ConfigError(str(exc), f"{where}.{key}") from None


def _q_item(text, dimension, where):
    try:
        return parse_quantity(text, dimension)
    except ValueError as exc:
        raise ConfigError(str(exc), where) from None


def config_from_dict(doc):
    """Build an :class:`ArmConfig` from an already-parsed document."""
    try:
        jsonschema.validate(doc, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "".join(f"[{p}]" if isinstance(p, int) else f".{p}" for p in exc.absolute_path)
        raise ConfigError(exc.message, path.lstrip(".") or "<root>") from None

    dh = tuple(
        DHRow(
            link_twist=_q(row, "link_twist", "angle", f"dh[{i}]"),
            link_length=_q(row, "link_length", "length", f"dh[{i}]"),
            link_offset=_q(row, "link_offset", "length", f"dh[{i}]", 0.0),
            joint_angle_offset=_q(row, "joint_angle_offset", "angle", f"dh[{i}]", 0.0),
        )
        for i, row in enumerate(doc["dh"])
    )

    widths = {len(r) for r in doc["constraint"]}
    if len(widths) != 1:
        raise ConfigError("rows have different lengths", "constraint")
    constraint = ConstraintMatrix(tuple(tuple(r) for r in doc["constraint"]))

    lims = doc["limits"]
    limits = JointLimits(
        lower=tuple(_q(l, "lower", "angle", f"limits[{i}]") for i, l in enumerate(lims)),
        upper=tuple(_q(l, "upper", "angle", f"limits[{i}]") for i, l in enumerate(lims)),
        names=tuple(l.get("joint", f"Joint{i + 1}") for i, l in enumerate(lims)),
    )

    rolling = []
    for key, text in doc.get("rolling_radius", {}).items():
        try:
            joint = int(key)
        except ValueError:
            raise ConfigError(f"joint key {key!r} is not an integer", "rolling_radius") from None
        rolling.append((joint, _q_item(text, "length", f"rolling_radius[{key}]")))

    cables = []
    for i, c in enumerate(doc["cables"]):
        where = f"cables[{i}]"
        drive = c["drive"]
        cables.append(
            CableRouting(
                cable_id=c["id"],
                driven_joint=c["driven_joint"],
                direction=c["direction"],
                drive_kind=drive["kind"],
                drive_radius=(
                    _q(drive, "radius", "length", f"{where}.drive")
                    if drive["kind"] == "direct_capstan"
                    else 0.0
                ),
                free_length=_q(c, "free_length", "length", where),
                pass_through=tuple(
                    PassThrough(
                        joint=p["joint"],
                        kind=p["kind"],
                        wrap_radius=(
                            _q(p, "wrap_radius", "length", f"{where}.pass_through[{k}]")
                            if p["kind"] == "naive_wrap"
                            else 0.0
                        ),
                    )
                    for k, p in enumerate(c.get("pass_through", []))
                ),
            )
        )

    s = doc["cable_spec"]
    cable_spec = CableSpec(
        diameter=_q(s, "diameter", "length", "cable_spec"),
        youngs_modulus=_q(s, "youngs_modulus", "pressure", "cable_spec"),
        max_tension=_q(s, "max_tension", "force", "cable_spec"),
        pretension=_q(s, "pretension", "force", "cable_spec"),
    )
    motors = tuple(
        MotorSpec(
            roller_radius=_q(mo, "roller_radius", "length", f"motors[{i}]"),
            nominal_torque=_q(mo, "nominal_torque", "torque", f"motors[{i}]"),
            nominal_speed=_q(mo, "nominal_speed", "angular_speed", f"motors[{i}]"),
            encoder_resolution=_q(mo, "encoder_resolution", "angle", f"motors[{i}]"),
        )
        for i, mo in enumerate(doc["motors"])
    )

    base = doc.get("base", {})
    rpy = tuple(
        _q_item(t, "angle", f"base.rotation_rpy[{k}]")
        for k, t in enumerate(base.get("rotation_rpy", ["0 rad"] * 3))
    )
    pos = tuple(
        _q_item(t, "length", f"base.position[{k}]")
        for k, t in enumerate(base.get("position", ["0 m"] * 3))
    )

    return ArmConfig(
        dh_rows=dh,
        constraint=constraint,
        limits=limits,
        cables=tuple(cables),
        cable_spec=cable_spec,
        motors=motors,
        rolling_radius=tuple(sorted(rolling)),
        base_rotation=rpy,
        base_position=pos,
        name=doc.get("name", "arm"),
        notes=tuple(doc.get("notes", ())),
    )


def load_config(source):
    """Load and validate an arm configuration.

    ``source`` may be a path, an open text file, a JSON string or an
    already-parsed ``dict``. Parse failures report line and column; invariant
    violations name the offending field.
    """
    if isinstance(source, dict):
        return config_from_dict(source)
    if hasattr(source, "read"):
        text = source.read()
    else:
        text = str(source)
        if not text.lstrip().startswith("{"):
            with open(text, encoding="utf-8") as fh:
                text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(exc.msg, f"line {exc.lineno}, column {exc.colno}") from None
    if not isinstance(doc, dict):
        raise ConfigError("top level must be an object", "<root>")
    return config_from_dict(doc)


def config_to_dict(cfg):
    """Inverse of :func:`config_from_dict`; all quantities are written in SI."""
    L = lambda v: format_quantity(v, "length")  # noqa: E731
    A = lambda v: format_quantity(v, "angle")  # noqa: E731
    doc = {
        "schema_version": SCHEMA_VERSION,
        "name": cfg.name,
        "notes": list(cfg.notes),
        "base": {
            "rotation_rpy": [A(v) for v in cfg.base_rotation],
            "position": [L(v) for v in cfg.base_position],
        },
        "dh": [
            {
                "link_twist": A(r.link_twist),
                "link_length": L(r.link_length),
                "link_offset": L(r.link_offset),
                "joint_angle_offset": A(r.joint_angle_offset),
            }
            for r in cfg.dh_rows
        ],
        "constraint": [list(r) for r in cfg.constraint.entries],
        "limits": [
            {"joint": cfg.limits.name(i), "lower": A(lo), "upper": A(hi)}
            for i, (lo, hi) in enumerate(zip(cfg.limits.lower, cfg.limits.upper))
        ],
        "rolling_radius": {str(j): L(R) for j, R in cfg.rolling_radius},
        "cables": [],
        "cable_spec": {
            "diameter": L(cfg.cable_spec.diameter),
            "youngs_modulus": format_quantity(cfg.cable_spec.youngs_modulus, "pressure"),
            "max_tension": format_quantity(cfg.cable_spec.max_tension, "force"),
            "pretension": format_quantity(cfg.cable_spec.pretension, "force"),
        },
        "motors": [
            {
                "roller_radius": L(mo.roller_radius),
                "nominal_torque": format_quantity(mo.nominal_torque, "torque"),
                "nominal_speed": format_quantity(mo.nominal_speed, "angular_speed"),
                "encoder_resolution": A(mo.encoder_resolution),
            }
            for mo in cfg.motors
        ],
    }
    for c in cfg.cables:
        drive = {"kind": c.drive_kind}
        if c.drive_kind == "direct_capstan":
            drive["radius"] = L(c.drive_radius)
        entry = {
            "id": c.cable_id,
            "driven_joint": c.driven_joint,
            "direction": c.direction,
            "drive": drive,
            "pass_through": [],
            "free_length": L(c.free_length),
        }
        for p in c.pass_through:
            seg = {"joint": p.joint, "kind": p.kind}
            if p.kind == "naive_wrap":
                seg["wrap_radius"] = L(p.wrap_radius)
            entry["pass_through"].append(seg)
        doc["cables"].append(entry)
    return doc


def dump_config(cfg, indent=2):
    return json.dumps(config_to_dict(cfg), indent=indent)


def bundled_config_path(name="d3arm"):
    """Filesystem path of a configuration shipped with the package."""
    return resources.files("cablearm") / "data" / f"{name}.json"


def default_config(name="d3arm"):
    """Load a bundled configuration: ``"d3arm"`` (decoupled) or ``"naive"``."""
    return load_config(bundled_config_path(name).read_text(encoding="utf-8"))
