import math

import numpy as np
from hypothesis import given, settings

from rigcal.constraints import accumulate_relative, build_A, build_B, rotation_residual
from rigcal.geometry import (
    RigidMotion,
    UnitQuaternion,
    compose,
    quat_conjugate,
    quat_from_axis_angle,
    quat_multiply,
)
from rigcal.simulate import SimConfig, derive_slave_trajectory, generate_master_trajectory, random_rig

from .conftest import random_motion, random_quat, random_trajectory, unit_quats

I = UnitQuaternion.identity()


def raw_product(a, b):
    """Hamilton product on raw 4-vectors, no renormalization or sign fixing."""
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ]
    )


def test_identity_pair_gives_zero_matrix():
    assert not np.any(build_A(I, I))


def test_equal_pair_annihilates_identity(rng):
    for _ in range(20):
        q = random_quat(rng)
        assert np.allclose(build_A(q, q) @ [1, 0, 0, 0], 0, atol=1e-15)


def test_conjugated_pair_annihilates_rig_rotation(rng):
    for _ in range(100):
        q0, dq = random_quat(rng), random_quat(rng)
        q1 = quat_multiply(quat_multiply(quat_conjugate(dq), q0), dq)
        assert np.linalg.norm(build_A(q0, q1) @ dq.as_array()) < 1e-12


@settings(max_examples=1000)
@given(unit_quats(), unit_quats(), unit_quats())
def test_A_is_left_minus_right_multiplication(q0, q1, p):
    expected = raw_product(q0.as_array(), p.as_array()) - raw_product(p.as_array(), q1.as_array())
    assert np.allclose(build_A(q0, q1) @ p.as_array(), expected, atol=1e-12)


def test_consistent_pair_has_null_singular_value(rng):
    for _ in range(50):
        q0, dq = random_quat(rng), random_quat(rng)
        q1 = quat_multiply(quat_multiply(quat_conjugate(dq), q0), dq)
        s = np.linalg.svd(build_A(q0, q1), compute_uv=False)
        assert s[-1] < 1e-12


def test_build_B_examples():
    assert not np.any(build_B(np.eye(3), np.eye(3), np.zeros(3)))
    B = build_B(np.eye(3), np.eye(3), [1.0, 2.0, 3.0])
    assert not np.any(B[:, :3])
    assert B[:, 3].tolist() == [1.0, 2.0, 3.0]


def test_build_B_forward_model():
    rig = random_rig(3)
    traj0 = generate_master_trajectory(SimConfig(frames=30, seed=3))
    traj1 = derive_slave_trajectory(traj0, rig)
    for p0, p1 in zip(traj0, traj1):
        B = build_B(p0.R, rig.R, p1.translation)
        assert np.linalg.norm(B @ rig.x - p0.translation) < 1e-12


def test_rotation_residual():
    assert rotation_residual(np.zeros((4, 4)), UnitQuaternion(0.5, 0.5, 0.5, 0.5)) == 0.0
    q1 = quat_from_axis_angle([1, 0, 0], math.pi / 2)
    # L(I) - R(q1) applied to the identity: identity - q1
    expected = np.linalg.norm(I.as_array() - q1.as_array())
    assert math.isclose(rotation_residual(build_A(I, q1), I), expected, rel_tol=1e-14)


def test_accumulate_examples(rng):
    ident = accumulate_relative([RigidMotion.identity()] * 4)
    assert len(ident) == 5 and all(p.is_identity() for p in ident)
    m = random_motion(rng)
    one = accumulate_relative([m])
    assert one[0].is_identity()
    assert np.allclose(one[1].as_matrix(), m.as_matrix(), atol=1e-15)


def test_accumulate_round_trip(rng):
    traj = random_trajectory(rng, 30)
    base = traj[0]
    rebuilt = accumulate_relative(traj.relative_motions())
    for p, r in zip(traj, rebuilt):
        assert np.allclose(compose(base, r).as_matrix(), p.as_matrix(), atol=1e-10)
