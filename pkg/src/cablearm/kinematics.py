"""Forward kinematics and Jacobians over the equivalent-joint chain.

Frames follow the standard (distal) DH convention: equivalent joint ``i``
(one-based) rotates about ``z_{i-1}``, and the tool frame is frame ``n``.
All results are expressed in the world frame, i.e. after the configured base
transform.
"""
from dataclasses import dataclass

import numpy as np
from scipy.spatial.transform import Rotation

from .config import expand_joints
from .exceptions import ConstraintViolation, ValidationError

CONSTRAINT_TOL = 1e-12


@dataclass(frozen=True)
class Pose:
    rotation: np.ndarray
    position: np.ndarray

    @classmethod
    def from_matrix(cls, T):
        T = np.asarray(T, dtype=float)
        return cls(rotation=T[:3, :3].copy(), position=T[:3, 3].copy())

    @classmethod
    def from_rotvec(cls, position, rotvec):
        R = Rotation.from_rotvec(np.asarray(rotvec, dtype=float)).as_matrix()
        return cls(rotation=R, position=np.asarray(position, dtype=float).copy())

    @property
    def matrix(self):
        T = np.eye(4)
        T[:3, :3] = self.rotation
        T[:3, 3] = self.position
        return T

    @property
    def rotvec(self):
        return Rotation.from_matrix(self.rotation).as_rotvec()

    def orthonormality_error(self):
        R = self.rotation
        return float(np.linalg.norm(R.T @ R - np.eye(3))), float(np.linalg.det(R))


@dataclass(frozen=True)
class JointState:
    """Independent joint vector together with its equivalent-chain expansion."""

    independent: np.ndarray
    expanded: np.ndarray

    @classmethod
    def from_independent(cls, config, independent):
        theta = np.asarray(independent, dtype=float).reshape(-1)
        if theta.shape != (config.n_independent,):
            raise ValidationError(
                f"expected {config.n_independent} independent joint angles, got {theta.size}"
            )
        if not np.all(np.isfinite(theta)):
            raise ValidationError("joint angles must be finite")
        return cls(independent=theta, expanded=expand_joints(theta, config.constraint))

    def check(self, config):
        expected = expand_joints(self.independent, config.constraint)
        if np.shape(self.expanded) != expected.shape:
            raise ConstraintViolation(
                f"expanded vector has shape {np.shape(self.expanded)}, expected {expected.shape}"
            )
        err = float(np.max(np.abs(np.asarray(self.expanded) - expected), initial=0.0))
        if err > CONSTRAINT_TOL:
            raise ConstraintViolation(f"expanded joints violate the constraint relation by {err:.3g} rad")

    def within_limits(self, config, atol=0.0):
        return config.limits.contains(self.independent, atol=atol)


def as_state(config, state):
    """Coerce ``state`` (a :class:`JointState` or an independent vector)."""
    if isinstance(state, JointState):
        state.check(config)
        return state
    return JointState.from_independent(config, state)


@dataclass(frozen=True)
class Jacobian:
    """Geometric Jacobian columns ``v_i`` (linear) and ``omega_i`` (angular)."""

    linear: np.ndarray
    angular: np.ndarray

    @property
    def matrix(self):
        return np.vstack([self.linear, self.angular])


def dh_transform(theta, twist, length, offset):
    ct, st = np.cos(theta), np.sin(theta)
    ca, sa = np.cos(twist), np.sin(twist)
    return np.array(
        [
            [ct, -st * ca, st * sa, length * ct],
            [st, ct * ca, -ct * sa, length * st],
            [0.0, sa, ca, offset],
            [0.0, 0.0, 0.0, 1.0],
        ]
    )


def chain_transform(config, expanded, start=0, stop=None):
    """Product of local transforms for rows ``start..stop-1`` (no base)."""
    stop = config.n_equivalent if stop is None else stop
    T = np.eye(4)
    dh = config.dh_array
    for i in range(start, stop):
        twist, length, offset, angle_offset = dh[i]
        T = T @ dh_transform(expanded[i] + angle_offset, twist, length, offset)
    return T


def joint_frames(config, expanded):
    """World transforms of frames ``0..n``; returns an ``(n+1, 4, 4)`` array."""
    n = config.n_equivalent
    frames = np.empty((n + 1, 4, 4))
    frames[0] = config.base_transform
    dh = config.dh_array
    for i in range(n):
        twist, length, offset, angle_offset = dh[i]
        frames[i + 1] = frames[i] @ dh_transform(expanded[i] + angle_offset, twist, length, offset)
    return frames


def forward_kinematics(config, state):
    """Tool pose in the world frame for ``state``."""
    state = as_state(config, state)
    return Pose.from_matrix(config.base_transform @ chain_transform(config, state.expanded))


def jacobian(config, state):
    """Geometric Jacobian over all equivalent joints (``6 x n``)."""
    state = as_state(config, state)
    frames = joint_frames(config, state.expanded)
    p_end = frames[-1, :3, 3]
    z = frames[:-1, :3, 2]
    p = frames[:-1, :3, 3]
    linear = np.cross(z, p_end - p).T
    return Jacobian(linear=linear, angular=z.T.copy())


def improved_jacobian(config, state):
    """Map from independent joint rates to the tool twist: ``J @ U.T``."""
    return jacobian(config, state).matrix @ config.constraint.array.T


def pose_error(target, current):
    """6-vector ``[p_t - p_c; log(R_t R_c^T)]`` with a world-frame rotation vector."""
    dp = np.asarray(target.position) - np.asarray(current.position)
    dR = np.asarray(target.rotation) @ np.asarray(current.rotation).T
    return np.concatenate([dp, Rotation.from_matrix(dR).as_rotvec()])


def forward_kinematics_batch(config, independent, equivalent=False):
    """Vectorised FK for an ``(k, m)`` stack of independent joint vectors.

    With ``equivalent=True`` the rows are full equivalent-chain vectors and
    are used as given, without the constraint relation.
    Returns ``(positions (k, 3), rotations (k, 3, 3))``.
    """
    theta = np.atleast_2d(np.asarray(independent, dtype=float))
    if equivalent:
        if theta.shape[1] != config.n_equivalent:
            raise ValidationError(f"expected {config.n_equivalent} equivalent joint angles per row")
        expanded = theta
    else:
        expanded = expand_joints(theta, config.constraint)
    k = theta.shape[0]
    T = np.broadcast_to(config.base_transform, (k, 4, 4)).copy()
    dh = config.dh_array
    for i in range(config.n_equivalent):
        twist, length, offset, angle_offset = dh[i]
        q = expanded[:, i] + angle_offset
        ct, st = np.cos(q), np.sin(q)
        ca, sa = np.cos(twist), np.sin(twist)
        A = np.zeros((k, 4, 4))
        A[:, 0, 0] = ct
        A[:, 0, 1] = -st * ca
        A[:, 0, 2] = st * sa
        A[:, 0, 3] = length * ct
        A[:, 1, 0] = st
        A[:, 1, 1] = ct * ca
        A[:, 1, 2] = -ct * sa
        A[:, 1, 3] = length * st
        A[:, 2, 1] = sa
        A[:, 2, 2] = ca
        A[:, 2, 3] = offset
        A[:, 3, 3] = 1.0
        T = T @ A
    return T[:, :3, 3].copy(), T[:, :3, :3].copy()
