"""scikit-learn style wrappers around the functional API.

Rows of ``X`` are samples: independent joint vectors for the kinematic and
transmission transformers, poses for the IK regressor, measured points for
the repeatability estimator.
"""
import numpy as np
from scipy.spatial.transform import Rotation
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.neighbors import NearestNeighbors
from sklearn.utils.validation import check_is_fitted

from ._validation import check_joints, check_points, check_poses, resolve_config
from .experiments import aggregate_poses, pose_repeatability
from .ik import DEFAULT_DAMPING, IkRequest, solve_position
from .kinematics import Pose, forward_kinematics_batch
from .transmission import cable_displacements, motor_angles

POSE_FEATURES = ("x_m", "y_m", "z_m", "rx_rad", "ry_rad", "rz_rad")


def _pose_rows(config, X):
    pos, rot = forward_kinematics_batch(config, X)
    return np.hstack([pos, Rotation.from_matrix(rot).as_rotvec()])


class ForwardKinematicsTransformer(TransformerMixin, BaseEstimator):
    """Joint vectors to tool poses ``[x, y, z, rx, ry, rz]`` (or positions only)."""

    def __init__(self, config=None, position_only=False):
        self.config = config
        self.position_only = position_only

    def fit(self, X, y=None):
        self.config_ = resolve_config(self.config)
        check_joints(X, self.config_, limits=False)
        self.n_features_in_ = self.config_.n_independent
        return self

    def transform(self, X):
        check_is_fitted(self, "config_")
        X = check_joints(X, self.config_, limits=False)
        if self.position_only:
            return forward_kinematics_batch(self.config_, X)[0]
        return _pose_rows(self.config_, X)

    def get_feature_names_out(self, input_features=None):
        return np.array(POSE_FEATURES[:3] if self.position_only else POSE_FEATURES, dtype=object)


class InverseKinematicsRegressor(RegressorMixin, BaseEstimator):
    """Poses to joint vectors by iterative damped least squares.

    ``fit`` stores known ``(pose, joints)`` pairs; each prediction starts from
    the joints of the nearest stored position. Without ``y`` the stored table
    is empty and every solve starts from ``initial`` (zeros by default,
    clipped to the limits). Poses are rows ``[x, y, z, rx, ry, rz]`` with a
    rotation vector in radians.
    """

    def __init__(self, config=None, tol=1e-6, max_iterations=100, damping=DEFAULT_DAMPING, initial=None):
        self.config = config
        self.tol = tol
        self.max_iterations = max_iterations
        self.damping = damping
        self.initial = initial

    def fit(self, X, y=None):
        self.config_ = resolve_config(self.config)
        X = check_poses(X, full=True)
        if y is None:
            self.table_X_ = np.empty((0, 3))
            self.table_y_ = np.empty((0, self.config_.n_independent))
        else:
            y = check_joints(y, self.config_)
            if y.shape[0] != X.shape[0]:
                raise ValueError("X and y have different numbers of rows")
            self.table_X_ = X[:, :3].copy()
            self.table_y_ = y.copy()
        self.neighbors_ = NearestNeighbors(n_neighbors=1).fit(self.table_X_) if len(self.table_X_) else None
        self.n_features_in_ = X.shape[1]
        return self

    def _seeds(self, X):
        cfg = self.config_
        if self.neighbors_ is None:
            start = np.zeros(cfg.n_independent) if self.initial is None else np.asarray(self.initial, float)
            return np.tile(cfg.limits.clip(start), (X.shape[0], 1))
        idx = self.neighbors_.kneighbors(X[:, :3], return_distance=False)[:, 0]
        return self.table_y_[idx]

    def solve(self, X):
        """Full :class:`~cablearm.ik.IkResult` for every row of ``X``."""
        check_is_fitted(self, "config_")
        X = check_poses(X, full=True)
        cfg = self.config_
        seeds = self._seeds(X)
        results = []
        for row, seed in zip(X, seeds):
            request = IkRequest(
                target=Pose.from_rotvec(row[:3], row[3:]),
                seed=seed,
                position_tolerance=self.tol,
                orientation_tolerance=self.tol,
                max_iterations=self.max_iterations,
                damping=self.damping,
            )
            results.append(solve_position(cfg, request))
        return results

    def predict(self, X):
        results = self.solve(X)
        self.converged_ = np.array([r.converged for r in results])
        return np.array([r.solution for r in results])

    def score(self, X, y=None, sample_weight=None):
        """Fraction of rows that converge to both tolerances."""
        ok = np.array([r.converged for r in self.solve(X)], dtype=float)
        return float(np.average(ok, weights=sample_weight))


class CableTransmission(TransformerMixin, BaseEstimator):
    """Joint vectors to per-cable displacement (m) or roller angle (rad)."""

    def __init__(self, config=None, output="displacement", quantized=False, mode="truncate"):
        self.config = config
        self.output = output
        self.quantized = quantized
        self.mode = mode

    def fit(self, X, y=None):
        if self.output not in ("displacement", "motor_angle"):
            raise ValueError(f"output must be 'displacement' or 'motor_angle', got {self.output!r}")
        self.config_ = resolve_config(self.config)
        check_joints(X, self.config_, limits=False)
        self.n_features_in_ = self.config_.n_independent
        return self

    def transform(self, X):
        check_is_fitted(self, "config_")
        X = check_joints(X, self.config_, limits=False)
        disp = np.array([cable_displacements(self.config_, q) for q in X]).reshape(len(X), -1)
        if self.output == "displacement":
            return disp
        return np.array([motor_angles(self.config_, d, self.quantized, self.mode) for d in disp]).reshape(len(X), -1)

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "config_")
        unit = "m" if self.output == "displacement" else "rad"
        return np.array([f"{cid}_{unit}" for cid in self.config_.cable_ids], dtype=object)


class RepeatabilityEstimator(BaseEstimator):
    """ISO 9283 pose repeatability from measured points grouped by pose label."""

    def fit(self, X, y=None):
        X = check_points(X, min_rows=2)
        labels = np.zeros(len(X), dtype=int) if y is None else np.asarray(y)
        if labels.shape != (len(X),):
            raise ValueError("y must hold one pose label per point")
        self.labels_ = list(dict.fromkeys(labels.tolist()))
        self.report_ = aggregate_poses(pose_repeatability(X[labels == lab]) for lab in self.labels_)
        return self

    @property
    def three_sigma_(self):
        check_is_fitted(self, "report_")
        return self.report_.total_three_sigma
