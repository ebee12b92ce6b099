"""Kinematics, cable transmission and virtual experiments for cable-driven arms."""
from .config import (
    ArmConfig,
    CableRouting,
    CableSpec,
    ConstraintMatrix,
    DHRow,
    JointLimits,
    MotorSpec,
    PassThrough,
    default_config,
    dump_config,
    expand_joints,
    load_config,
)
from .exceptions import CableArmError, ConfigError, ConstraintViolation, SingularityError, ValidationError
from .experiments import (
    decoupling_experiment,
    repeatability_stats,
    simulate_trajectory,
    workspace_sweep,
)
from .ik import IkRequest, IkResult, solve_position, solve_velocity
from .kinematics import JointState, Pose, forward_kinematics, improved_jacobian, jacobian
from .transmission import (
    CableState,
    CouplingMatrix,
    coupling_matrix,
    elongation,
    motor_angle,
    pretension_apply,
    static_load_tensions,
)

__version__ = "0.1.0"
