"""Cable length transmission, tension and motor-side quantities.

Cable motion is tracked as displacement from the zero pose (positive means
reeled in at the motor). Each cable gets a signed contribution from the
joint it drives plus one per upstream joint it passes through:

* ``rolling_pair`` drive: ``R * theta_e / 2`` where ``theta_e`` is the total
  bend of the rolling joint (the sum of its two equivalent joint angles);
* ``direct_capstan`` drive: ``radius * theta`` with ``theta`` the
  independent joint angle;
* ``aligner`` and ``rolling`` pass-through: exactly zero;
* ``naive_wrap`` pass-through: ``wrap_radius`` times the joint's bend.

Every term is multiplied by the cable's ``direction`` so antagonistic pairs
always cancel.
"""
import logging
import warnings
from dataclasses import dataclass

import numpy as np

from .config import CableRouting, PassThrough  # noqa: F401  (re-exported)
from .exceptions import ValidationError
from .kinematics import as_state, improved_jacobian

logger = logging.getLogger(__name__)

DEFAULT_GRAVITY = 9.81


class SlackRiskWarning(UserWarning):
    """Cables without pretension can go slack and leave their pulleys."""


@dataclass(frozen=True)
class CableState:
    cable_id: str
    displacement: float
    tension: float
    motor_angle: float


@dataclass(frozen=True)
class CouplingMatrix:
    """``d(displacement_c) / d(theta_j)`` in metres per radian.

    Rows follow the cable order of the configuration, columns the
    equivalent joints.
    """

    entries: np.ndarray
    cable_ids: tuple

    def row(self, cable_id):
        return self.entries[self.cable_ids.index(cable_id)]


def rolling_joint_displacement(radius, bend):
    """Driving-cable length change of a rolling joint bent by ``bend``."""
    return radius * bend / 2.0


def _joint_bend(U_row, expanded):
    # signed sum of the equivalent angles belonging to one independent joint
    return float(U_row @ expanded)


def _drive_term(config, cable, expanded):
    U_row = config.constraint.array[cable.driven_joint - 1]
    if cable.drive_kind == "rolling_pair":
        R = config.rolling_radii[cable.driven_joint]
        return rolling_joint_displacement(R, _joint_bend(U_row, expanded))
    theta = _joint_bend(U_row, expanded) / np.count_nonzero(U_row)
    return cable.drive_radius * theta


def _pass_term(config, seg, expanded):
    if seg.kind in ("aligner", "rolling"):
        return 0.0
    U_row = config.constraint.array[seg.joint - 1]
    return seg.wrap_radius * _joint_bend(U_row, expanded)


def pass_through_displacements(config, state):
    """Part of each cable's displacement caused by the joints it passes."""
    state = as_state(config, state)
    x = state.expanded
    return np.array(
        [c.direction * sum(_pass_term(config, s, x) for s in c.pass_through) for c in config.cables],
        dtype=float,
    )


def _displacements(config, expanded):
    out = np.empty(len(config.cables))
    for i, cable in enumerate(config.cables):
        total = _drive_term(config, cable, expanded)
        for seg in cable.pass_through:
            total += _pass_term(config, seg, expanded)
        out[i] = cable.direction * total + 0.0
    return out


def cable_displacements(config, state):
    """Motor-side displacement of every cable (metres, + = reel in)."""
    return _displacements(config, as_state(config, state).expanded)


def routed_lengths(config, state):
    """Total routed length of each cable between roller and driven joint."""
    free = np.array([c.free_length for c in config.cables], dtype=float)
    return free + pass_through_displacements(config, state)


def coupling_matrix(config, state=None):
    """Analytic coupling matrix.

    The transmission law is linear in the joint angles, so the result does
    not depend on ``state``; the argument is validated and kept for symmetry
    with the numerical check in :func:`coupling_matrix_fd`.
    """
    if state is not None:
        as_state(config, state)
    U = config.constraint.array.astype(float)
    W = np.zeros((len(config.cables), config.n_equivalent))
    for i, cable in enumerate(config.cables):
        U_row = U[cable.driven_joint - 1]
        if cable.drive_kind == "rolling_pair":
            W[i] += config.rolling_radii[cable.driven_joint] / 2.0 * U_row
        else:
            W[i] += cable.drive_radius * U_row / np.count_nonzero(U_row)
        for seg in cable.pass_through:
            if seg.kind == "naive_wrap":
                W[i] += seg.wrap_radius * U[seg.joint - 1]
        W[i] = cable.direction * W[i] + 0.0  # no negative zeros
    return CouplingMatrix(entries=W, cable_ids=config.cable_ids)


def coupling_matrix_fd(config, state, step=1e-6):
    """Central finite-difference coupling matrix over the equivalent joints.

    Each equivalent angle is perturbed on its own, bypassing the constraint
    relation, so every column of the analytic matrix is exercised.
    """
    x = np.asarray(as_state(config, state).expanded, dtype=float)
    W = np.empty((len(config.cables), config.n_equivalent))
    for j in range(config.n_equivalent):
        dx = np.zeros_like(x)
        dx[j] = step
        W[:, j] = (_displacements(config, x + dx) - _displacements(config, x - dx)) / (2.0 * step)
    return CouplingMatrix(entries=W, cable_ids=config.cable_ids)


def pass_through_mask(config):
    """Boolean ``(n_cables, n_equivalent)`` mask of pass-through entries."""
    U = config.constraint.array
    mask = np.zeros((len(config.cables), config.n_equivalent), dtype=bool)
    for i, cable in enumerate(config.cables):
        for seg in cable.pass_through:
            mask[i] |= U[seg.joint - 1] != 0
    return mask


def moment_arms(config):
    """``d(displacement)/d(theta_independent)`` for each cable's own joint."""
    W = coupling_matrix(config).entries @ config.constraint.array.T
    return np.array([W[i, c.driven_joint - 1] for i, c in enumerate(config.cables)])


# --------------------------------------------------------------------------- #
# elasticity and motors


def elongation(spec, tension_delta, routed_length):
    """Elastic stretch ``F L / (E A)`` of a cable of length ``routed_length``."""
    if not routed_length > 0:
        raise ValidationError(f"routed_length must be > 0, got {routed_length!r}")
    return tension_delta * routed_length / (spec.youngs_modulus * spec.area)


def tension_from_elongation(spec, stretch, routed_length):
    """Tension change that produces ``stretch`` over ``routed_length``."""
    if not routed_length > 0:
        raise ValidationError(f"routed_length must be > 0, got {routed_length!r}")
    return stretch * spec.youngs_modulus * spec.area / routed_length


def quantize_angle(angle, resolution, mode="truncate"):
    """Snap ``angle`` to the encoder grid.

    ``"truncate"`` counts completed ticks (rounds toward zero), as an
    incremental encoder reports them; ``"nearest"`` rounds to the closest
    tick.
    """
    ticks = np.asarray(angle, dtype=float) / resolution
    if mode == "truncate":
        ticks = np.trunc(ticks)
    elif mode == "nearest":
        ticks = np.round(ticks)
    else:
        raise ValueError(f"unknown quantization mode {mode!r}")
    return ticks * resolution


def motor_angle(motor, displacement, quantized=False, mode="truncate"):
    """Roller angle that reels in ``displacement`` metres of cable."""
    angle = np.asarray(displacement, dtype=float) / motor.roller_radius
    if quantized:
        angle = quantize_angle(angle, motor.encoder_resolution, mode)
    return angle if angle.ndim else float(angle)


def motor_angles(config, displacements, quantized=False, mode="truncate"):
    """Roller angle for every cable, using the motor of its driven joint."""
    return np.array(
        [
            motor_angle(config.motors[c.driven_joint - 1], d, quantized, mode)
            for c, d in zip(config.cables, displacements)
        ]
    )


def pretension_apply(spec, cables):
    """Initial :class:`CableState` for each cable at the configured pretension."""
    if spec.pretension >= spec.max_tension:
        raise ValidationError(
            f"pretension {spec.pretension} N must stay below max_tension {spec.max_tension} N"
        )
    if spec.pretension < 0:
        raise ValidationError("pretension must be >= 0")
    if spec.pretension == 0:
        warnings.warn("zero pretension: cables may go slack", SlackRiskWarning, stacklevel=2)
    return [
        CableState(cable_id=c.cable_id, displacement=0.0, tension=float(spec.pretension), motor_angle=0.0)
        for c in cables
    ]


# --------------------------------------------------------------------------- #
# static load


@dataclass(frozen=True)
class LoadReport:
    cable_ids: tuple
    tensions: np.ndarray  # N, per cable
    joint_torques: np.ndarray  # generalized gravity force per independent joint
    motor_torques: np.ndarray  # N*m, per independent joint
    feasible: bool
    violations: tuple = ()


def pair_tensions(pretension, differential):
    """Tensions of an antagonistic pair that must differ by ``differential``.

    Both members share the load around the pretension until the unloaded one
    would go negative; from then on it is slack and the loaded member carries
    the whole differential.
    """
    d = abs(differential)
    loaded, slack = pretension + d / 2.0, pretension - d / 2.0
    if slack < 0.0:
        loaded, slack = d, 0.0
    return (loaded, slack) if differential >= 0 else (slack, loaded)


def static_load_tensions(config, state, payload_mass, gravity=DEFAULT_GRAVITY):
    """Cable tensions holding a point-mass payload at the tool, world ``-z`` gravity.

    Link masses and friction are ignored. Each independent joint must be
    driven by one antagonistic pair (``direction`` +1 and -1).
    """
    if not payload_mass >= 0:
        raise ValidationError("payload_mass must be >= 0")
    state = as_state(config, state)
    wrench = np.array([0.0, 0.0, -payload_mass * gravity, 0.0, 0.0, 0.0])
    generalized = improved_jacobian(config, state).T @ wrench
    arms = moment_arms(config)
    spec = config.cable_spec

    tensions = np.full(len(config.cables), float(spec.pretension))
    motor_torques = np.zeros(config.n_independent)
    violations = []
    for k in range(config.n_independent):
        members = [i for i, c in enumerate(config.cables) if c.driven_joint == k + 1]
        if not members:
            continue
        plus = [i for i in members if config.cables[i].direction > 0]
        minus = [i for i in members if config.cables[i].direction < 0]
        if len(plus) != 1 or len(minus) != 1:
            raise ValidationError(f"joint {k + 1} is not driven by a single antagonistic pair")
        arm = arms[plus[0]]
        differential = -generalized[k] / arm
        tensions[plus[0]], tensions[minus[0]] = pair_tensions(spec.pretension, differential)
        if config.motors:
            motor = config.motors[k]
            motor_torques[k] = abs(differential) * motor.roller_radius
            if motor_torques[k] > motor.nominal_torque:
                violations.append(
                    f"{config.limits.name(k)}: motor torque {motor_torques[k]:.3f} N*m "
                    f"> {motor.nominal_torque:g} N*m"
                )
    for i, t in enumerate(tensions):
        if t > spec.max_tension:
            violations.append(f"{config.cables[i].cable_id}: tension {t:.1f} N > {spec.max_tension:g} N")
    return LoadReport(
        cable_ids=config.cable_ids,
        tensions=tensions,
        joint_torques=generalized,
        motor_torques=motor_torques,
        feasible=not violations,
        violations=tuple(violations),
    )


def max_payload(config, state, gravity=DEFAULT_GRAVITY, upper=1e3, rtol=1e-9):
    """Largest feasible payload at ``state``, found by bisection.

    Returns ``inf`` if even ``upper`` kilograms is feasible.
    """
    if not static_load_tensions(config, state, 0.0, gravity).feasible:
        return 0.0
    lo, hi = 0.0, float(upper)
    if static_load_tensions(config, state, hi, gravity).feasible:
        return float("inf")
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if static_load_tensions(config, state, mid, gravity).feasible:
            lo = mid
        else:
            hi = mid
    return lo
