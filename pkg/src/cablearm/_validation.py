"""Input checks shared by the estimator wrappers."""
import numpy as np
from sklearn.utils.validation import check_array

from .config import ArmConfig, default_config, load_config
from .exceptions import ValidationError


def resolve_config(config):
    """Accept ``None`` (bundled D3 arm), a bundled name, a path or an ``ArmConfig``."""
    if config is None:
        return default_config()
    if isinstance(config, ArmConfig):
        return config
    if isinstance(config, str) and config in ("d3arm", "naive"):
        return default_config(config)
    return load_config(config)


def check_joints(X, config, limits=True):
    """2-D float array of independent joint vectors, optionally inside limits."""
    try:
        X = check_array(X, dtype=float, ensure_2d=True)
    except ValueError as exc:
        raise ValidationError(str(exc)) from None
    if X.shape[1] != config.n_independent:
        raise ValidationError(f"expected {config.n_independent} joint columns, got {X.shape[1]}")
    if limits:
        lo, hi = config.limits.lower_array, config.limits.upper_array
        bad = np.flatnonzero(np.any((X < lo - 1e-12) | (X > hi + 1e-12), axis=1))
        if bad.size:
            raise ValidationError(f"{bad.size} joint vectors outside the limits (first at row {bad[0]})")
    return X


def check_poses(X, full=False):
    """``(k, 3)`` positions or ``(k, 6)`` positions plus rotation vectors."""
    try:
        X = check_array(X, dtype=float, ensure_2d=True)
    except ValueError as exc:
        raise ValidationError(str(exc)) from None
    allowed = (6,) if full else (3, 6)
    if X.shape[1] not in allowed:
        raise ValidationError(f"poses need {' or '.join(map(str, allowed))} columns, got {X.shape[1]}")
    return X


def check_points(X, min_rows=1):
    try:
        X = check_array(X, dtype=float, ensure_2d=True, ensure_min_samples=min_rows)
    except ValueError as exc:
        raise ValidationError(str(exc)) from None
    if X.shape[1] != 3:
        raise ValidationError(f"points need 3 columns, got {X.shape[1]}")
    return X
