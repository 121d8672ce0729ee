"""Quaternion, rigid-motion and similarity-transform algebra.

Conventions
-----------
- Quaternions are stored as (w, x, y, z), Hamilton product.
- Every ``UnitQuaternion`` is normalized and put on the canonical hemisphere
  at construction: w > 0, or w == 0 and the first nonzero of (x, y, z) > 0.
- A ``RigidMotion`` (R, T) acts on points as ``p -> R p + T``.
  ``compose(a, b)`` is the motion that applies ``b`` first, then ``a``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import NotARotation, NotUnitQuaternion

ORTHO_TOLERANCE = 1e-3
# |w| below this is round-off of a half-turn; treat as 0 so the sign rule is stable
_W_ZERO = 4 * np.finfo(float).eps


def _canonical(w: float, x: float, y: float, z: float) -> Tuple[float, float, float, float]:
    if abs(w) <= _W_ZERO:
        w = 0.0
    if w < 0.0:
        return -w, -x, -y, -z
    if w == 0.0:
        for c in (x, y, z):
            if c != 0.0:
                if c < 0.0:
                    return 0.0, -x, -y, -z
                break
    return w, x, y, z


@dataclass(frozen=True)
class UnitQuaternion:
    """Rotation as a unit quaternion (w, x, y, z)."""

    w: float = 1.0
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    def __post_init__(self):
        w, x, y, z = (float(self.w), float(self.x), float(self.y), float(self.z))
        n = math.sqrt(w * w + x * x + y * y + z * z)
        if not math.isfinite(n) or n == 0.0:
            raise NotUnitQuaternion(f"cannot normalize quaternion {(w, x, y, z)}")
        w, x, y, z = _canonical(w / n, x / n, y / n, z / n)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "z", z)

    @classmethod
    def identity(cls) -> "UnitQuaternion":
        return cls(1.0, 0.0, 0.0, 0.0)

    @classmethod
    def from_array(cls, q: Sequence[float]) -> "UnitQuaternion":
        w, x, y, z = (float(c) for c in q)
        return cls(w, x, y, z)

    def as_array(self) -> np.ndarray:
        return np.array([self.w, self.x, self.y, self.z])

    def __iter__(self):
        return iter((self.w, self.x, self.y, self.z))


def quat_multiply(a: UnitQuaternion, b: UnitQuaternion) -> UnitQuaternion:
    """Hamilton product a ⊗ b."""
    return UnitQuaternion(
        a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
        a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
        a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
        a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
    )


def quat_conjugate(q: UnitQuaternion) -> UnitQuaternion:
    return UnitQuaternion(q.w, -q.x, -q.y, -q.z)


def quat_to_matrix(q: UnitQuaternion) -> np.ndarray:
    w, x, y, z = q.w, q.x, q.y, q.z
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def nearest_rotation(R: np.ndarray) -> np.ndarray:
    """Project a 3x3 matrix onto SO(3) (polar decomposition via SVD)."""
    U, _, Vt = np.linalg.svd(R)
    D = np.eye(3)
    D[2, 2] = np.sign(np.linalg.det(U @ Vt))
    return U @ D @ Vt


def matrix_to_quat(R) -> UnitQuaternion:
    """Convert a rotation matrix to a quaternion.

    Matrices within ``ORTHO_TOLERANCE`` (Frobenius norm of RᵀR − I) of a
    rotation are projected onto SO(3) first; anything further off, or with a
    negative determinant, raises ``NotARotation``.
    """
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3) or not np.all(np.isfinite(R)):
        raise NotARotation(f"expected a finite 3x3 matrix, got shape {R.shape}")
    if np.linalg.det(R) < 0:
        raise NotARotation("determinant is negative (reflection)")
    residual = np.linalg.norm(R.T @ R - np.eye(3))
    if residual > ORTHO_TOLERANCE:
        raise NotARotation(f"orthogonality residual {residual:.3g} exceeds {ORTHO_TOLERANCE}")
    R = nearest_rotation(R)

    # Shepperd: pivot on the largest of (trace, diagonal) to avoid cancellation.
    tr = R[0, 0] + R[1, 1] + R[2, 2]
    if tr >= max(R[0, 0], R[1, 1], R[2, 2]):
        s = 2.0 * math.sqrt(1.0 + tr)
        q = (0.25 * s, (R[2, 1] - R[1, 2]) / s, (R[0, 2] - R[2, 0]) / s, (R[1, 0] - R[0, 1]) / s)
    elif R[0, 0] >= R[1, 1] and R[0, 0] >= R[2, 2]:
        s = 2.0 * math.sqrt(1.0 + R[0, 0] - R[1, 1] - R[2, 2])
        q = ((R[2, 1] - R[1, 2]) / s, 0.25 * s, (R[0, 1] + R[1, 0]) / s, (R[0, 2] + R[2, 0]) / s)
    elif R[1, 1] >= R[2, 2]:
        s = 2.0 * math.sqrt(1.0 + R[1, 1] - R[0, 0] - R[2, 2])
        q = ((R[0, 2] - R[2, 0]) / s, (R[0, 1] + R[1, 0]) / s, 0.25 * s, (R[1, 2] + R[2, 1]) / s)
    else:
        s = 2.0 * math.sqrt(1.0 + R[2, 2] - R[0, 0] - R[1, 1])
        q = ((R[1, 0] - R[0, 1]) / s, (R[0, 2] + R[2, 0]) / s, (R[1, 2] + R[2, 1]) / s, 0.25 * s)
    return UnitQuaternion(*q)


def quat_from_rotvec(v) -> UnitQuaternion:
    """Exponential map: rotation vector (axis * angle, radians) to quaternion."""
    v = np.asarray(v, dtype=float)
    theta = float(np.linalg.norm(v))
    if theta < 1e-12:
        # second-order Taylor expansion; normalization absorbs the rest
        return UnitQuaternion(1.0 - theta * theta / 8.0, *(0.5 * v))
    s = math.sin(theta / 2.0) / theta
    return UnitQuaternion(math.cos(theta / 2.0), *(s * v))


def quat_from_axis_angle(axis, angle_rad: float) -> UnitQuaternion:
    axis = np.asarray(axis, dtype=float)
    return quat_from_rotvec(axis / np.linalg.norm(axis) * angle_rad)


def quat_angle(q: UnitQuaternion) -> float:
    """Rotation angle in radians, in [0, pi]."""
    vn = math.sqrt(q.x * q.x + q.y * q.y + q.z * q.z)
    return 2.0 * math.atan2(vn, abs(q.w))


def quat_axis(q: UnitQuaternion) -> Optional[np.ndarray]:
    """Unit rotation axis, or None for the identity."""
    v = np.array([q.x, q.y, q.z])
    n = np.linalg.norm(v)
    if n == 0.0:
        return None
    return v / n


def geodesic_angle(a, b) -> float:
    """Angle in degrees of the rotation taking ``a`` to ``b``.

    Accepts ``UnitQuaternion`` or raw 4-vectors; insensitive to sign.
    """
    a = np.asarray(a.as_array() if isinstance(a, UnitQuaternion) else a, dtype=float)
    b = np.asarray(b.as_array() if isinstance(b, UnitQuaternion) else b, dtype=float)
    a = a / np.linalg.norm(a)
    b = b / np.linalg.norm(b)
    # 2·arccos(|<a,b>|) written via the chord length; arccos loses all
    # precision below ~1e-8 rad, which the exactness checks need.
    chord = min(np.linalg.norm(a - b), np.linalg.norm(a + b))
    return math.degrees(4.0 * math.asin(min(1.0, chord / 2.0)))


def angle_between(u, v) -> float:
    """Angle in degrees between two nonzero 3-vectors."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return math.degrees(math.atan2(np.linalg.norm(np.cross(u, v)), float(u @ v)))


def _frozen(v) -> np.ndarray:
    arr = np.array(v, dtype=float).reshape(3)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class RigidMotion:
    """Camera pose / motion: rotation and translation (scene units)."""

    rotation: UnitQuaternion = field(default_factory=UnitQuaternion.identity)
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        t = _frozen(self.translation)
        if not np.all(np.isfinite(t)):
            raise ValueError(f"non-finite translation {t}")
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> "RigidMotion":
        return cls()

    @classmethod
    def from_matrix(cls, M) -> "RigidMotion":
        """From a 3x4 [R|T] or 4x4 homogeneous matrix."""
        M = np.asarray(M, dtype=float)
        return cls(matrix_to_quat(M[:3, :3]), M[:3, 3])

    @property
    def R(self) -> np.ndarray:
        return quat_to_matrix(self.rotation)

    def as_matrix(self) -> np.ndarray:
        M = np.eye(4)
        M[:3, :3] = self.R
        M[:3, 3] = self.translation
        return M

    def apply(self, p) -> np.ndarray:
        return self.R @ np.asarray(p, dtype=float) + self.translation

    def is_identity(self, tol: float = 0.0) -> bool:
        return (
            geodesic_angle(self.rotation, UnitQuaternion.identity()) <= math.degrees(tol)
            and float(np.max(np.abs(self.translation))) <= tol
        )

    def __repr__(self):
        q = self.rotation
        t = self.translation
        return f"RigidMotion(q=({q.w:.6g}, {q.x:.6g}, {q.y:.6g}, {q.z:.6g}), t=({t[0]:.6g}, {t[1]:.6g}, {t[2]:.6g}))"


def compose(a: RigidMotion, b: RigidMotion) -> RigidMotion:
    """a ∘ b: apply b, then a."""
    return RigidMotion(quat_multiply(a.rotation, b.rotation), a.R @ b.translation + a.translation)


def invert(a: RigidMotion) -> RigidMotion:
    qi = quat_conjugate(a.rotation)
    return RigidMotion(qi, -(quat_to_matrix(qi) @ a.translation))


@dataclass(frozen=True, eq=False)
class SimilarityTransform:
    """Inter-camera transform: rotation ΔR, translation ΔT and scale Δλ."""

    rotation: UnitQuaternion
    translation: np.ndarray
    scale: float

    def __post_init__(self):
        object.__setattr__(self, "translation", _frozen(self.translation))
        scale = float(self.scale)
        if not (scale > 0.0 and math.isfinite(scale)):
            raise ValueError(f"scale must be positive and finite, got {scale}")
        object.__setattr__(self, "scale", scale)

    @classmethod
    def identity(cls) -> "SimilarityTransform":
        return cls(UnitQuaternion.identity(), np.zeros(3), 1.0)

    @property
    def R(self) -> np.ndarray:
        return quat_to_matrix(self.rotation)

    @property
    def x(self) -> np.ndarray:
        """Stacked (ΔT, Δλ) unknown of the translation problem."""
        return np.append(self.translation, self.scale)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Ordered camera poses, frame 0 first.

    Rebased trajectories (readers, simulator, accumulation) have an identity
    first pose. ``timestamps`` is carried through from TUM files untouched.
    """

    poses: Tuple[RigidMotion, ...]
    timestamps: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        object.__setattr__(self, "poses", tuple(self.poses))
        if self.timestamps is not None:
            ts = tuple(float(t) for t in self.timestamps)
            if len(ts) != len(self.poses):
                raise ValueError("timestamps and poses differ in length")
            object.__setattr__(self, "timestamps", ts)

    @property
    def frame_count(self) -> int:
        """Number of frames after frame 0 (N)."""
        return len(self.poses) - 1

    def __len__(self):
        return len(self.poses)

    def __getitem__(self, i):
        return self.poses[i]

    def __iter__(self):
        return iter(self.poses)

    def is_rebased(self, tol: float = 1e-12) -> bool:
        return self.poses[0].is_identity(tol)

    def relative_motions(self) -> list:
        """Frame-to-frame motions m_t with poses[t] = poses[t-1] ∘ m_t."""
        return [compose(invert(a), b) for a, b in zip(self.poses[:-1], self.poses[1:])]
