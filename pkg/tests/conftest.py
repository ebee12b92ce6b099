import math

import numpy as np
import pytest

from cablearm.config import ArmConfig, ConstraintMatrix, DHRow, JointLimits, default_config

# The constraint matrix written out by hand, row per independent joint.
U_REFERENCE = np.array(
    [
        [1, 0, 0, 0, 0, 0, 0, 0, 0, 0],
        [0, 1, 1, 0, 0, 0, 0, 0, 0, 0],
        [0, 0, 0, 1, 1, 0, 0, 0, 0, 0],
        [0, 0, 0, 0, 0, 1, 0, 0, -1, 0],
        [0, 0, 0, 0, 0, 0, 1, 1, 0, 0],
        [0, 0, 0, 0, 0, 0, 0, 0, 0, 1],
    ]
)


@pytest.fixture(scope="session")
def d3():
    return default_config("d3arm")


@pytest.fixture(scope="session")
def naive():
    return default_config("naive")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_states(config, n, rng):
    lo, hi = config.limits.lower_array, config.limits.upper_array
    return rng.uniform(lo, hi, size=(n, lo.size))


def one_link(length=0.5, twist=0.0):
    return ArmConfig(
        dh_rows=(DHRow(twist, length),),
        constraint=ConstraintMatrix(((1,),)),
        limits=JointLimits((-math.pi,), (math.pi,)),
        name="one-link",
    )


def planar(lengths):
    n = len(lengths)
    return ArmConfig(
        dh_rows=tuple(DHRow(0.0, L) for L in lengths),
        constraint=ConstraintMatrix(tuple(tuple(int(i == j) for j in range(n)) for i in range(n))),
        limits=JointLimits((-math.pi,) * n, (math.pi,) * n),
        name="planar",
    )


# one line per acceptance criterion, printed after the test session
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
