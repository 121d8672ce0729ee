"""Per-frame hand-eye constraint matrices.

For rigidly coupled cameras with poses (R⁰ₜ, T⁰ₜ) and (R¹ₜ, T¹ₜ) relative to
their first frames, the unknown rig transform satisfies

    q⁰ₜ ⊗ Δq = Δq ⊗ q¹ₜ                 (rotation, A·Δq = 0)
    (I − R⁰ₜ) ΔT + Δλ ΔR T¹ₜ = T⁰ₜ       (translation and scale, B·Δx = T⁰ₜ)
"""

from __future__ import annotations

from typing import Iterable

import numpy as np

from .geometry import RigidMotion, Trajectory, UnitQuaternion, compose


def build_A(q0: UnitQuaternion, q1: UnitQuaternion) -> np.ndarray:
    """4x4 rotation constraint for one frame pair.

    Entries are written out explicitly; the result equals L(q0) − R(q1), the
    difference of left- and right-multiplication matrices.
    """
    w0, x0, y0, z0 = q0.w, q0.x, q0.y, q0.z
    w1, x1, y1, z1 = q1.w, q1.x, q1.y, q1.z
    return np.array(
        [
            [w0 - w1, -x0 + x1, -y0 + y1, -z0 + z1],
            [x0 - x1, w0 - w1, -z0 - z1, y0 + y1],
            [y0 - y1, z0 + z1, w0 - w1, -x0 - x1],
            [z0 - z1, -y0 - y1, x0 + x1, w0 - w1],
        ]
    )


def build_B(R0, deltaR, T1) -> np.ndarray:
    """3x4 translation/scale constraint [I − R0 | ΔR·T1]."""
    R0 = np.asarray(R0, dtype=float)
    B = np.empty((3, 4))
    B[:, :3] = np.eye(3) - R0
    B[:, 3] = np.asarray(deltaR, dtype=float) @ np.asarray(T1, dtype=float)
    return B


def rotation_residual(A, dq) -> float:
    dq = dq.as_array() if isinstance(dq, UnitQuaternion) else np.asarray(dq, dtype=float)
    return float(np.linalg.norm(np.asarray(A) @ dq))


def accumulate_relative(motions: Iterable[RigidMotion]) -> Trajectory:
    """Chain frame-to-frame motions into poses w.r.t. frame 0.

    poses[0] is the identity and poses[t] = poses[t-1] ∘ motions[t-1].
    """
    poses = [RigidMotion.identity()]
    for m in motions:
        poses.append(compose(poses[-1], m))
    if len(poses) == 1:
        raise ValueError("accumulate_relative needs at least one motion")
    return Trajectory(tuple(poses))
