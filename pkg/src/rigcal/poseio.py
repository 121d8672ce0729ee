"""Trajectory and rig file formats.

KITTI odometry: one pose per nonempty line, 12 numbers forming the
row-major 3x4 matrix [R | T].

TUM RGB-D: ``timestamp tx ty tz qx qy qz qw`` per line, ``#`` comments.
Note the on-disk quaternion order (x, y, z, w); internally rigcal uses
(w, x, y, z).

Rig sidecar: JSON object with ``rotation_wxyz``, ``translation``, ``scale``.

Readers return trajectories rebased to their first pose. The composition
convention is poses[t] = poses[t-1] ∘ motion_t with poses mapping
camera-t coordinates into camera-0 coordinates, which is what KITTI and TUM
ground-truth files store (camera-to-world). Files holding world-to-camera
poses must be inverted pose-by-pose (``invert_poses``) before calibration.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import List, Optional

import numpy as np

from .errors import EmptyTrajectory, NotARotation, NotUnitQuaternion, ParseError
from .geometry import RigidMotion, SimilarityTransform, Trajectory, UnitQuaternion, compose, invert

QUAT_NORM_TOLERANCE = 1e-3


def rebase_to_first(traj: Trajectory) -> Trajectory:
    if len(traj) == 0:
        raise EmptyTrajectory("cannot rebase an empty trajectory")
    base = invert(traj.poses[0])
    poses = [RigidMotion.identity()] + [compose(base, p) for p in traj.poses[1:]]
    return Trajectory(tuple(poses), traj.timestamps)


def invert_poses(traj: Trajectory) -> Trajectory:
    return Trajectory(tuple(invert(p) for p in traj.poses), traj.timestamps)


def _floats(tokens, lineno, path):
    out = []
    for i, tok in enumerate(tokens, start=1):
        try:
            v = float(tok)
        except ValueError:
            raise ParseError(f"not a number: {tok!r}", line=lineno, token=i, path=path) from None
        if not math.isfinite(v):
            raise ParseError(f"non-finite value {tok!r}", line=lineno, token=i, path=path)
        out.append(v)
    return out


def read_kitti_poses(path) -> Trajectory:
    path = Path(path)
    poses: List[RigidMotion] = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            tokens = line.split()
            if not tokens:
                continue
            if len(tokens) != 12:
                raise ParseError(
                    f"expected 12 values, found {len(tokens)}",
                    line=lineno,
                    path=path,
                )
            M = np.array(_floats(tokens, lineno, path)).reshape(3, 4)
            try:
                poses.append(RigidMotion.from_matrix(M))
            except NotARotation as exc:
                raise NotARotation(f"{path}:line {lineno}: {exc}", line=lineno) from None
    if not poses:
        raise EmptyTrajectory(f"{path}: no poses")
    return rebase_to_first(Trajectory(tuple(poses)))


def write_kitti_poses(path, traj: Trajectory) -> None:
    with open(path, "w") as fh:
        for p in traj.poses:
            M = np.hstack((p.R, p.translation[:, None]))
            fh.write(" ".join(f"{v:.17g}" for v in M.ravel()) + "\n")


def read_tum_trajectory(path) -> Trajectory:
    path = Path(path)
    poses: List[RigidMotion] = []
    stamps: List[float] = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            tokens = s.split()
            if len(tokens) != 8:
                raise ParseError(
                    f"expected 8 values (timestamp tx ty tz qx qy qz qw), found {len(tokens)}",
                    line=lineno,
                    path=path,
                )
            ts, tx, ty, tz, qx, qy, qz, qw = _floats(tokens, lineno, path)
            norm = math.sqrt(qx * qx + qy * qy + qz * qz + qw * qw)
            if abs(norm - 1.0) > QUAT_NORM_TOLERANCE:
                raise NotUnitQuaternion(f"{path}:line {lineno}: quaternion norm {norm:.6g} is not 1", line=lineno)
            poses.append(RigidMotion(UnitQuaternion(qw, qx, qy, qz), (tx, ty, tz)))
            stamps.append(ts)
    if not poses:
        raise EmptyTrajectory(f"{path}: no poses")
    return rebase_to_first(Trajectory(tuple(poses), tuple(stamps)))


def write_tum_trajectory(path, traj: Trajectory, timestamps: Optional[List[float]] = None) -> None:
    if timestamps is None:
        timestamps = traj.timestamps if traj.timestamps is not None else [float(i) for i in range(len(traj))]
    with open(path, "w") as fh:
        fh.write("# timestamp tx ty tz qx qy qz qw\n")
        for ts, p in zip(timestamps, traj.poses):
            q, t = p.rotation, p.translation
            vals = (ts, t[0], t[1], t[2], q.x, q.y, q.z, q.w)
            fh.write(" ".join(f"{v:.17g}" for v in vals) + "\n")


READERS = {"kitti": read_kitti_poses, "tum": read_tum_trajectory}
WRITERS = {"kitti": write_kitti_poses, "tum": write_tum_trajectory}


def read_trajectory(path, fmt: str = "kitti") -> Trajectory:
    try:
        return READERS[fmt](path)
    except KeyError:
        raise ValueError(f"unknown pose format {fmt!r}; expected one of {sorted(READERS)}") from None


def write_trajectory(path, traj: Trajectory, fmt: str = "kitti") -> None:
    if fmt not in WRITERS:
        raise ValueError(f"unknown pose format {fmt!r}; expected one of {sorted(WRITERS)}")
    WRITERS[fmt](path, traj)


def write_rig_ground_truth(path, rig: SimilarityTransform) -> None:
    doc = {
        "rotation_wxyz": [rig.rotation.w, rig.rotation.x, rig.rotation.y, rig.rotation.z],
        "translation": [float(v) for v in rig.translation],
        "scale": rig.scale,
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def read_rig_ground_truth(path) -> SimilarityTransform:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", line=exc.lineno, path=path) from None
    if not isinstance(doc, dict):
        raise ParseError("expected a JSON object", path=path)
    for key, n in (("rotation_wxyz", 4), ("translation", 3), ("scale", None)):
        if key not in doc:
            raise ParseError(f"missing field {key!r}", path=path)
        val = doc[key]
        if n is None:
            ok = isinstance(val, (int, float)) and not isinstance(val, bool)
        else:
            ok = isinstance(val, list) and len(val) == n and all(
                isinstance(v, (int, float)) and not isinstance(v, bool) for v in val
            )
        if not ok:
            raise ParseError(f"field {key!r} is malformed", path=path)
    try:
        return SimilarityTransform(UnitQuaternion.from_array(doc["rotation_wxyz"]), doc["translation"], doc["scale"])
    except ValueError as exc:
        raise ParseError(f"invalid rig: {exc}", path=path) from None
