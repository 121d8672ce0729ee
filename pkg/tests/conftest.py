from pathlib import Path

import numpy as np
import pytest
from hypothesis import strategies as st

from rigcal.geometry import RigidMotion, Trajectory, UnitQuaternion

DATA = Path(__file__).parent / "data"
REPO = Path(__file__).parent.parent

_floats = st.floats(-1.0, 1.0, allow_nan=False, allow_infinity=False)


@st.composite
def unit_quats(draw):
    v = np.array([draw(_floats) for _ in range(4)])
    if np.linalg.norm(v) < 1e-3:
        v = np.array([1.0, 0.0, 0.0, 0.0])
    return UnitQuaternion.from_array(v)


def random_quat(rng) -> UnitQuaternion:
    return UnitQuaternion.from_array(rng.standard_normal(4))


def random_motion(rng, scale=3.0) -> RigidMotion:
    return RigidMotion(random_quat(rng), scale * rng.standard_normal(3))


def random_trajectory(rng, n=20) -> Trajectory:
    return Trajectory(tuple(random_motion(rng) for _ in range(n)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# -- acceptance summary -------------------------------------------------------

ACCEPTANCE_RESULTS = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS):
        ok, line = ACCEPTANCE_RESULTS[key]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {key}: {line}")
