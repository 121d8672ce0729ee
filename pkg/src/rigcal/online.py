"""Frame-by-frame rig calibration.

Each step takes the frame-to-frame motions of both cameras, chains them into
poses relative to frame 0, updates the rotation with one incremental SVD
step and then, once the warm-up period is over, updates translation and
scale with one RLS step built from the current rotation estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Tuple

import numpy as np

from .constraints import build_A, build_B
from .errors import InvalidConfig, InvalidForgetting, LengthMismatch, NoData
from .geometry import RigidMotion, SimilarityTransform, Trajectory, UnitQuaternion, compose, quat_to_matrix
from .isvd import SvdState, svd_init, svd_solution, svd_update_square
from .rls import RlsObservation, RlsState, rls_estimate, rls_init, rls_update


@dataclass(frozen=True)
class CalibratorConfig:
    """Online calibrator settings.

    use_relative_constraints builds A and B from the per-step motions instead
    of the accumulated poses. buffer_warmup keeps the warm-up frames and
    replays them through RLS, with the rotation estimate of the first active
    frame, when translation estimation starts.
    """

    forgetting: float = 1.0
    warmup_frames: int = 60
    c0_scale: float = 1.0
    conditioning_threshold: float = 10.0
    use_relative_constraints: bool = False
    buffer_warmup: bool = False

    def __post_init__(self):
        if not 0.0 < self.forgetting <= 1.0:
            raise InvalidForgetting(f"forgetting factor must be in (0, 1], got {self.forgetting}")
        if self.warmup_frames < 0 or int(self.warmup_frames) != self.warmup_frames:
            raise InvalidConfig(f"warmup_frames must be a nonnegative integer, got {self.warmup_frames}")
        if not self.c0_scale > 0.0:
            raise InvalidConfig(f"c0_scale must be positive, got {self.c0_scale}")
        if not self.conditioning_threshold > 0.0:
            raise InvalidConfig("conditioning_threshold must be positive")


@dataclass(frozen=True, eq=False)
class CalibrationEstimate:
    """Rig estimate after one frame.

    While translation is inactive (warm-up), translation is zero and scale is
    0.0 as a "not yet estimated" marker. ``translation_ratio`` is
    ‖T¹‖/‖T⁰‖ of the step's motions, a visible trace of per-frame scale drift
    in the ego-motion input (nan when the master did not translate).
    """

    frame: int
    rotation: UnitQuaternion
    translation: np.ndarray
    scale: float
    rotation_conditioning: float
    translation_active: bool
    ill_conditioned: bool
    translation_ratio: float = math.nan

    @property
    def transform(self) -> SimilarityTransform:
        if not self.translation_active:
            raise NoData(f"translation not estimated yet at frame {self.frame}")
        return SimilarityTransform(self.rotation, self.translation, self.scale)


@dataclass
class CalibratorState:
    config: CalibratorConfig
    svd: Optional[SvdState] = None
    rls: Optional[RlsState] = None
    abs_pose0: RigidMotion = field(default_factory=RigidMotion.identity)
    abs_pose1: RigidMotion = field(default_factory=RigidMotion.identity)
    frame: int = 0
    last: Optional[CalibrationEstimate] = None
    buffered: List[Tuple[np.ndarray, np.ndarray, np.ndarray]] = field(default_factory=list)


class OnlineCalibrator:
    """Online estimator of the inter-camera similarity transform.

    >>> cal = OnlineCalibrator(CalibratorConfig(warmup_frames=0))
    >>> est = cal.step(motion0, motion1)       # doctest: +SKIP
    """

    def __init__(self, config: Optional[CalibratorConfig] = None):
        config = CalibratorConfig() if config is None else config
        self.state = CalibratorState(config, rls=rls_init(config.forgetting, config.c0_scale))

    @property
    def config(self) -> CalibratorConfig:
        return self.state.config

    @property
    def frame(self) -> int:
        return self.state.frame

    def step(self, motion0: RigidMotion, motion1: RigidMotion) -> CalibrationEstimate:
        st = self.state
        cfg = st.config
        st.abs_pose0 = compose(st.abs_pose0, motion0)
        st.abs_pose1 = compose(st.abs_pose1, motion1)
        st.frame += 1
        p0, p1 = (motion0, motion1) if cfg.use_relative_constraints else (st.abs_pose0, st.abs_pose1)

        A = build_A(p0.rotation, p1.rotation)
        st.svd = svd_init(A) if st.svd is None else svd_update_square(st.svd, A)
        dq = svd_solution(st.svd)
        dR = quat_to_matrix(dq)
        conditioning = st.svd.conditioning

        active = st.frame >= cfg.warmup_frames
        if active:
            if st.buffered:
                for R0, T0, T1 in st.buffered:
                    st.rls = rls_update(st.rls, RlsObservation(build_B(R0, dR, T1), T0))
                st.buffered = []
            st.rls = rls_update(st.rls, RlsObservation(build_B(p0.R, dR, p1.translation), p0.translation))
            dT, dlam = rls_estimate(st.rls)
        else:
            if cfg.buffer_warmup:
                st.buffered.append((p0.R, p0.translation.copy(), p1.translation.copy()))
            dT, dlam = np.zeros(3), 0.0

        n0 = float(np.linalg.norm(motion0.translation))
        ratio = float(np.linalg.norm(motion1.translation)) / n0 if n0 > 0.0 else math.nan
        est = CalibrationEstimate(
            frame=st.frame,
            rotation=dq,
            translation=dT,
            scale=dlam,
            rotation_conditioning=conditioning,
            translation_active=active,
            ill_conditioned=conditioning < cfg.conditioning_threshold,
            translation_ratio=ratio,
        )
        st.last = est
        return est

    def finalize(self) -> CalibrationEstimate:
        if self.state.last is None:
            raise NoData("no frames processed")
        return self.state.last

    def run(self, motions0: Iterable[RigidMotion], motions1: Iterable[RigidMotion]) -> List[CalibrationEstimate]:
        return [self.step(m0, m1) for m0, m1 in zip(motions0, motions1)]


def calibrate_online(
    traj0: Trajectory, traj1: Trajectory, config: Optional[CalibratorConfig] = None
) -> List[CalibrationEstimate]:
    """Feed two pose trajectories through a fresh calibrator; one estimate per frame t ≥ 1."""
    if len(traj0) != len(traj1):
        raise LengthMismatch(f"trajectories have {len(traj0)} and {len(traj1)} poses")
    cal = OnlineCalibrator(config)
    return cal.run(traj0.relative_motions(), traj1.relative_motions())
