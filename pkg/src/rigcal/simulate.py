"""Synthetic two-camera rig trajectories.

The master camera follows a damped random walk on its body twist
(ω in degrees per frame, v in scene units per frame):

    twist_{t+1} = damping · twist_t + w_t,   w_t ~ N(0, diag(σ_rot², σ_trans²))
    pose_{t+1}  = pose_t ∘ (Exp(ω_t), v_t)

The slave trajectory follows exactly from the rig transform, and Gaussian
noise is then added to each frame's pose independently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .constraints import accumulate_relative
from .geometry import (
    RigidMotion,
    SimilarityTransform,
    Trajectory,
    UnitQuaternion,
    compose,
    quat_conjugate,
    quat_from_rotvec,
    quat_multiply,
    quat_to_matrix,
)


@dataclass(frozen=True)
class SimConfig:
    """Master-trajectory generator settings; ``frames`` counts frames after frame 0."""

    frames: int = 128
    damping: float = 0.95
    process_noise_rot: float = 0.3
    process_noise_trans: float = 0.05
    seed: int = 0
    initial_twist: Optional[Sequence[float]] = None

    def __post_init__(self):
        if self.frames < 2:
            raise ValueError("frames must be at least 2")
        if not 0.0 < self.damping <= 1.0:
            raise ValueError("damping must be in (0, 1]")
        if self.process_noise_rot < 0 or self.process_noise_trans < 0:
            raise ValueError("process noise must be nonnegative")


@dataclass(frozen=True)
class NoiseModel:
    rot_std_deg: float = 0.0
    trans_std: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.rot_std_deg < 0 or self.trans_std < 0:
            raise ValueError("noise stds must be nonnegative")


def random_rig(seed) -> SimilarityTransform:
    """Uniform rotation, unit-length baseline, log-uniform scale in [0.5, 2]."""
    rng = np.random.default_rng(seed)
    q = rng.standard_normal(4)
    t = rng.standard_normal(3)
    t /= np.linalg.norm(t)
    scale = math.exp(rng.uniform(math.log(0.5), math.log(2.0)))
    return SimilarityTransform(UnitQuaternion.from_array(q), t, scale)


def generate_master_trajectory(config: SimConfig) -> Trajectory:
    rng = np.random.default_rng(config.seed)
    twist = np.zeros(6) if config.initial_twist is None else np.array(config.initial_twist, dtype=float)
    sigma = np.array([config.process_noise_rot] * 3 + [config.process_noise_trans] * 3)
    motions = []
    for _ in range(config.frames):
        motions.append(RigidMotion(quat_from_rotvec(np.radians(twist[:3])), twist[3:]))
        twist = config.damping * twist + sigma * rng.standard_normal(6)
    return accumulate_relative(motions)


def derive_slave_trajectory(traj0: Trajectory, rig: SimilarityTransform) -> Trajectory:
    """Camera-1 poses that satisfy both constraint equations exactly."""
    dq = rig.rotation
    dqi = quat_conjugate(dq)
    dRt = quat_to_matrix(dq).T
    poses = []
    for p in traj0.poses:
        q1 = quat_multiply(quat_multiply(dqi, p.rotation), dq)
        t1 = dRt @ (p.translation - (np.eye(3) - p.R) @ rig.translation) / rig.scale
        poses.append(RigidMotion(q1, t1))
    return Trajectory(tuple(poses), traj0.timestamps)


def _perturb(pose: RigidMotion, drot, dtrans) -> RigidMotion:
    return RigidMotion(quat_multiply(quat_from_rotvec(drot), pose.rotation), pose.translation + dtrans)


def add_noise(traj: Trajectory, noise: NoiseModel, relative: bool = False) -> Trajectory:
    """Perturb every frame t ≥ 1 with Gaussian rotation-vector and translation noise.

    Draws are standard normals scaled by the stds, so a fixed seed yields
    noise realizations proportional across noise levels. With
    ``relative=True`` the frame-to-frame motions are perturbed instead and
    re-accumulated.
    """
    rng = np.random.default_rng(noise.seed)
    n = len(traj) - 1
    drot = math.radians(noise.rot_std_deg) * rng.standard_normal((n, 3))
    dtrans = noise.trans_std * rng.standard_normal((n, 3))
    if noise.rot_std_deg == 0 and noise.trans_std == 0:
        return traj
    if relative:
        motions = [_perturb(m, r, d) for m, r, d in zip(traj.relative_motions(), drot, dtrans)]
        base = traj.poses[0]
        acc = accumulate_relative(motions)
        return Trajectory(tuple(compose(base, p) for p in acc.poses), traj.timestamps)
    poses = [traj.poses[0]]
    poses += [_perturb(p, r, d) for p, r, d in zip(traj.poses[1:], drot, dtrans)]
    return Trajectory(tuple(poses), traj.timestamps)


@dataclass(frozen=True, eq=False)
class SimulatedPair:
    rig: SimilarityTransform
    clean0: Trajectory
    clean1: Trajectory
    traj0: Trajectory
    traj1: Trajectory


def simulate_pair(
    config: SimConfig,
    noise: Optional[NoiseModel] = None,
    rig_seed=None,
    relative_noise: bool = False,
) -> SimulatedPair:
    """Rig + master + slave trajectories, optionally noisy.

    The two cameras get independent noise streams derived from
    ``noise.seed``.
    """
    rig = random_rig(config.seed if rig_seed is None else rig_seed)
    clean0 = generate_master_trajectory(config)
    clean1 = derive_slave_trajectory(clean0, rig)
    if noise is None:
        return SimulatedPair(rig, clean0, clean1, clean0, clean1)
    s0, s1 = np.random.SeedSequence(noise.seed).spawn(2)
    n0 = NoiseModel(noise.rot_std_deg, noise.trans_std, int(s0.generate_state(1)[0]))
    n1 = NoiseModel(noise.rot_std_deg, noise.trans_std, int(s1.generate_state(1)[0]))
    return SimulatedPair(
        rig,
        clean0,
        clean1,
        add_noise(clean0, n0, relative_noise),
        add_noise(clean1, n1, relative_noise),
    )
