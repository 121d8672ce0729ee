"""Batch (all frames at once) rig calibration.

Rotation: unit eigenvector of Σ AᵀA for its smallest eigenvalue.
Translation and scale: least squares on the stacked B blocks, built with the
final rotation.
"""

from __future__ import annotations

import warnings
from typing import Optional, Sequence, Tuple

import numpy as np

from .constraints import build_A, build_B
from .errors import CalibrationError, IllConditionedWarning, LengthMismatch, RankDeficient
from .geometry import SimilarityTransform, Trajectory, UnitQuaternion, quat_to_matrix
from .rls import RlsObservation

ILL_CONDITIONED_RTOL = 1e-9


def solve_rotation_batch(A_list: Sequence[np.ndarray]) -> UnitQuaternion:
    if len(A_list) == 0:
        raise RankDeficient("no rotation constraints")
    N = np.zeros((4, 4))
    for A in A_list:
        A = np.asarray(A, dtype=float)
        N += A.T @ A
    evals, evecs = np.linalg.eigh(N)
    # ascending order: evals[0] is the smallest
    if evals[1] - evals[0] <= ILL_CONDITIONED_RTOL * max(evals[-1], np.finfo(float).tiny):
        warnings.warn(
            "rig rotation is not uniquely determined by the motion (two smallest eigenvalues coincide)",
            IllConditionedWarning,
            stacklevel=2,
        )
    return UnitQuaternion.from_array(evecs[:, 0])


def solve_translation_batch(
    obs_list: Sequence[RlsObservation],
    forgetting: Optional[float] = None,
    prior_scale: Optional[float] = None,
) -> Tuple[np.ndarray, float]:
    """Least-squares (ΔT, Δλ) from stacked observations.

    With ``forgetting`` set, observation t of N is weighted by λ^{N−t}; with
    ``prior_scale`` (c₀) the term λᴺ‖x‖²/c₀ is added, reproducing the RLS
    fixed point exactly.
    """
    if len(obs_list) == 0:
        raise RankDeficient("no translation constraints")
    n = len(obs_list)
    lam = 1.0 if forgetting is None else float(forgetting)
    rows, rhs = [], []
    for t, obs in enumerate(obs_list, start=1):
        w = np.sqrt(lam ** (n - t))
        rows.append(w * obs.B)
        rhs.append(w * obs.b)
    if prior_scale is not None:
        rows.append(np.sqrt(lam**n / prior_scale) * np.eye(4))
        rhs.append(np.zeros(4))
    M = np.vstack(rows)
    y = np.concatenate(rhs)

    Q, R = np.linalg.qr(M)
    d = np.abs(np.diag(R))
    if d.min() <= 1e-10 * max(d.max(), 1.0):
        raise RankDeficient(
            "translation constraints do not determine (dT, dscale); "
            "the master camera needs rotation about at least two axes"
        )
    x = np.linalg.solve(R, Q.T @ y)
    return x[:3], float(x[3])


def rotation_constraints(traj0: Trajectory, traj1: Trajectory) -> list:
    return [build_A(p0.rotation, p1.rotation) for p0, p1 in zip(traj0.poses[1:], traj1.poses[1:])]


def translation_constraints(traj0: Trajectory, traj1: Trajectory, dq: UnitQuaternion) -> list:
    dR = quat_to_matrix(dq)
    return [
        RlsObservation(build_B(p0.R, dR, p1.translation), p0.translation)
        for p0, p1 in zip(traj0.poses[1:], traj1.poses[1:])
    ]


def calibrate_batch(traj0: Trajectory, traj1: Trajectory) -> SimilarityTransform:
    if len(traj0) != len(traj1):
        raise LengthMismatch(f"trajectories have {len(traj0)} and {len(traj1)} poses")
    if len(traj0) < 2:
        raise RankDeficient("need at least one frame after frame 0")
    dq = solve_rotation_batch(rotation_constraints(traj0, traj1))
    dT, dlam = solve_translation_batch(translation_constraints(traj0, traj1, dq))
    if not dlam > 0.0:
        raise CalibrationError(f"estimated scale {dlam:.6g} is not positive")
    return SimilarityTransform(dq, dT, dlam)
