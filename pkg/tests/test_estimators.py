import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline

from cablearm.estimators import (
    CableTransmission,
    ForwardKinematicsTransformer,
    InverseKinematicsRegressor,
    RepeatabilityEstimator,
)
from cablearm.exceptions import ValidationError
from cablearm.experiments import repeatability_stats
from cablearm.kinematics import forward_kinematics
from cablearm.transmission import cable_displacements

from conftest import random_states


def test_fk_transformer(d3, rng):
    Q = random_states(d3, 10, rng)
    fk = ForwardKinematicsTransformer(config=d3).fit(Q)
    P = fk.transform(Q)
    assert P.shape == (10, 6)
    for q, p in zip(Q, P):
        pose = forward_kinematics(d3, q)
        assert np.allclose(p[:3], pose.position, atol=1e-14)
        assert np.allclose(p[3:], pose.rotvec, atol=1e-12)
    pos = ForwardKinematicsTransformer(position_only=True).fit_transform(Q)
    assert np.allclose(pos, P[:, :3], atol=1e-14)
    assert list(fk.get_feature_names_out()) == ["x_m", "y_m", "z_m", "rx_rad", "ry_rad", "rz_rad"]


def test_params_and_clone():
    est = InverseKinematicsRegressor(tol=1e-7, damping=0.01)
    assert est.get_params()["tol"] == 1e-7
    twin = clone(est).set_params(max_iterations=50)
    assert twin.get_params()["max_iterations"] == 50 and est.max_iterations == 100


def test_not_fitted():
    with pytest.raises(NotFittedError):
        ForwardKinematicsTransformer().transform(np.zeros((1, 6)))
    with pytest.raises(NotFittedError):
        InverseKinematicsRegressor().predict(np.zeros((1, 6)))


def test_ik_regressor_warm_start(d3, rng):
    lo, hi = d3.limits.lower_array, d3.limits.upper_array
    Q = random_states(d3, 25, rng)
    P = ForwardKinematicsTransformer(config=d3).fit_transform(Q)
    nearby = np.clip(Q + rng.uniform(-0.05, 0.05, Q.shape), lo, hi)
    table = ForwardKinematicsTransformer(config=d3).fit_transform(nearby)
    ik = InverseKinematicsRegressor(config=d3).fit(table, nearby)
    sol = ik.predict(P)
    assert sol.shape == Q.shape and ik.converged_.mean() >= 0.95
    back = ForwardKinematicsTransformer(config=d3).fit_transform(sol)
    assert np.max(np.abs(back[ik.converged_, :3] - P[ik.converged_, :3])) < 1e-6
    assert ik.score(P) == ik.converged_.mean()


def test_ik_regressor_without_table(d3):
    q = np.array([0.1, 0.4, -0.3, 0.2, 0.5, 0.1])
    pose = forward_kinematics(d3, q)
    X = np.r_[pose.position, pose.rotvec][None, :]
    ik = InverseKinematicsRegressor(config=d3, initial=q + 0.05).fit(X)
    sol = ik.predict(X)[0]
    assert ik.converged_[0]
    assert np.linalg.norm(forward_kinematics(d3, sol).position - pose.position) < 1e-6
    with pytest.raises(ValidationError):
        ik.predict(X[:, :3])


def test_cable_transmission(d3, rng):
    Q = random_states(d3, 8, rng)
    ct = CableTransmission(config=d3).fit(Q)
    D = ct.transform(Q)
    assert D.shape == (8, 12)
    assert np.allclose(D[3], cable_displacements(d3, Q[3]))
    assert ct.get_feature_names_out()[0] == "J1+_m"
    ang = CableTransmission(config="d3arm", output="motor_angle").fit(Q)
    assert np.allclose(ang.transform(Q), D / 0.015)
    assert ang.get_feature_names_out()[0] == "J1+_rad"
    with pytest.raises(ValueError):
        CableTransmission(output="tension").fit(Q)


def test_pipeline(d3, rng):
    Q = random_states(d3, 4, rng)
    pipe = make_pipeline(CableTransmission(config=d3))
    assert pipe.fit_transform(Q).shape == (4, 12)


def test_repeatability_estimator(rng):
    clouds = [rng.normal(size=(20, 3)) + k for k in range(3)]
    X = np.vstack(clouds)
    y = np.repeat(["a", "b", "c"], 20)
    est = RepeatabilityEstimator().fit(X, y)
    assert est.labels_ == ["a", "b", "c"]
    assert est.report_ == repeatability_stats(clouds)
    assert est.three_sigma_ == est.report_.total_three_sigma
    with pytest.raises(ValidationError):
        RepeatabilityEstimator().fit(np.zeros((1, 3)))


def test_input_validation(d3):
    with pytest.raises(ValidationError):
        ForwardKinematicsTransformer(config=d3).fit(np.zeros((3, 5)))
    with pytest.raises(ValidationError):
        InverseKinematicsRegressor(config=d3).fit(np.zeros((3, 4)))
    with pytest.raises(ValidationError):
        InverseKinematicsRegressor(config=d3).fit(np.zeros((1, 6)), np.full((1, 6), 4.0))
    with pytest.raises(ValidationError):
        ForwardKinematicsTransformer(config=d3).fit(np.full((1, 6), np.nan))
