"""Inverse kinematics over the independent joints.

Velocity-level resolution uses the improved Jacobian ``J_IM = J U^T`` with
optional damping (damped least squares). Position-level IK iterates that
resolution on the pose error with clamping to joint limits and step halving.
"""
import logging
from dataclasses import dataclass

import numpy as np

from .exceptions import SingularityError, ValidationError
from .kinematics import Pose, as_state, forward_kinematics, improved_jacobian, pose_error

logger = logging.getLogger(__name__)

SINGULAR_TOL = 1e-10
DEFAULT_DAMPING = 1e-3
MAX_STEP = 0.2  # rad, largest joint change per iteration
RETRY_DAMPING = 1e-1


@dataclass(frozen=True)
class IkRequest:
    target: Pose
    seed: np.ndarray
    position_tolerance: float = 1e-6
    orientation_tolerance: float = 1e-6
    max_iterations: int = 100
    damping: float = DEFAULT_DAMPING

    def validate(self, config):
        if not self.position_tolerance > 0 or not self.orientation_tolerance > 0:
            raise ValidationError("tolerances must be > 0")
        if int(self.max_iterations) < 1:
            raise ValidationError("max_iterations must be >= 1")
        if not self.damping >= 0:
            raise ValidationError("damping must be >= 0")
        seed = np.asarray(self.seed, dtype=float)
        if seed.shape != (config.n_independent,) or not np.all(np.isfinite(seed)):
            raise ValidationError(f"seed must be {config.n_independent} finite angles")
        if not config.limits.contains(seed, atol=1e-12):
            raise ValidationError("seed lies outside the joint limits")


@dataclass(frozen=True)
class IkResult:
    solution: np.ndarray
    converged: bool
    iterations_used: int
    residual_position: float
    residual_orientation: float


def damped_solve(J, rate, damping=0.0):
    """Solve ``J qdot = rate`` by damped least squares.

    With ``damping == 0`` this is the plain inverse (or pseudo-inverse for a
    non-square ``J``) and raises :class:`SingularityError` when the smallest
    singular value drops below ``SINGULAR_TOL``.
    """
    J = np.asarray(J, dtype=float)
    rate = np.asarray(rate, dtype=float)
    if damping == 0.0:
        s = np.linalg.svd(J, compute_uv=False)
        if s.size == 0 or s[-1] < SINGULAR_TOL:
            raise SingularityError(
                f"smallest singular value {s[-1] if s.size else 0.0:.3g} below {SINGULAR_TOL:g}"
            )
        if J.shape[0] == J.shape[1]:
            return np.linalg.solve(J, rate)
        return np.linalg.pinv(J) @ rate
    m = J.shape[0]
    return J.T @ np.linalg.solve(J @ J.T + damping**2 * np.eye(m), rate)


def solve_velocity(config, state, end_effector_rate, damping=0.0):
    """Independent joint rates realising ``end_effector_rate`` = ``[v; omega]``."""
    J_im = improved_jacobian(config, state)
    return damped_solve(J_im, end_effector_rate, damping)


def ik_step(config, independent, target, damping=DEFAULT_DAMPING):
    """Unscaled update ``J_IM^+ e`` towards ``target`` from ``independent``."""
    state = as_state(config, independent)
    error = pose_error(target, forward_kinematics(config, state))
    return solve_velocity(config, state, error, damping)


def _residuals(config, theta, target):
    e = pose_error(target, forward_kinematics(config, theta))
    return e, float(np.linalg.norm(e[:3])), float(np.linalg.norm(e[3:]))


def _bounded_step(config, J_im, theta, error, damping):
    """Damped step with joints pinned at a limit (and pushed outward) frozen."""
    step = damped_solve(J_im, error, damping)
    lo, hi = config.limits.lower_array, config.limits.upper_array
    pinned = ((theta <= lo) & (step < 0)) | ((theta >= hi) & (step > 0))
    if pinned.any() and not pinned.all():
        free = ~pinned
        step = np.zeros_like(step)
        step[free] = damped_solve(J_im[:, free], error, damping)
    return step


def _descend(config, request, theta, damping, max_halvings, max_damping, max_step):
    limits = config.limits
    e, rp, ro = _residuals(config, theta, request.target)
    err = np.linalg.norm(e)
    floor = damping * 1e-3
    iterations = 0

    def done():
        return rp <= request.position_tolerance and ro <= request.orientation_tolerance

    while not done() and iterations < request.max_iterations:
        J_im = improved_jacobian(config, theta)
        try:
            step = _bounded_step(config, J_im, theta, e, damping)
        except SingularityError:
            logger.debug("singular improved Jacobian at iteration %d", iterations)
            break
        peak = np.max(np.abs(step))
        alpha = min(1.0, max_step / peak) if peak > 0 else 1.0
        accepted = False
        for _ in range(max_halvings):
            candidate = limits.clip(theta + alpha * step)
            e_c, rp_c, ro_c = _residuals(config, candidate, request.target)
            err_c = np.linalg.norm(e_c)
            if err_c < err:
                theta, e, rp, ro, err = candidate, e_c, rp_c, ro_c, err_c
                accepted = True
                break
            alpha *= 0.5
        iterations += 1
        if accepted:
            damping = max(damping * 0.5, floor)
        elif damping < max_damping:
            damping = max(damping * 10.0, DEFAULT_DAMPING)
        else:
            logger.debug("no descent after %d halvings; stopping", max_halvings)
            break
    return IkResult(
        solution=theta,
        converged=bool(done()),
        iterations_used=iterations,
        residual_position=rp,
        residual_orientation=ro,
    )


def solve_position(
    config,
    request,
    max_halvings=30,
    max_damping=1e2,
    max_step=MAX_STEP,
    retry_damping=RETRY_DAMPING,
):
    """Iterate damped steps on the pose error until both tolerances are met.

    Accepted iterations never increase the pose-error norm: a step is capped
    at ``max_step`` per joint and then halved until it descends. Damping
    starts at ``request.damping``, shrinks after each accepted step and
    grows when no step length descends. If that attempt fails, the solve
    restarts once from the same seed with ``retry_damping``, which follows
    the error gradient more closely near wrist singularities and limits.
    ``iterations_used`` counts iterations over all attempts; each attempt is
    capped at ``request.max_iterations``. Failure to reach the target is
    reported through ``converged=False``.
    """
    request.validate(config)
    seed = config.limits.clip(np.asarray(request.seed, dtype=float))
    result = _descend(config, request, seed, float(request.damping), max_halvings, max_damping, max_step)
    if result.converged or retry_damping is None or retry_damping <= request.damping:
        return result
    retry = _descend(config, request, seed, float(retry_damping), max_halvings, max_damping, max_step)
    best = retry if retry.converged or _worse(result, retry) else result
    return IkResult(
        solution=best.solution,
        converged=best.converged,
        iterations_used=result.iterations_used + retry.iterations_used,
        residual_position=best.residual_position,
        residual_orientation=best.residual_orientation,
    )


def _worse(a, b):
    return np.hypot(a.residual_position, a.residual_orientation) > np.hypot(
        b.residual_position, b.residual_orientation
    )
