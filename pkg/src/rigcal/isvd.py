"""Incremental SVD of a growing row-stack of 4x4 constraint blocks.

Only the right singular vectors and singular values are kept. Because each
block is square, V stays a 4x4 orthogonal matrix and appending a block A
reduces to a dense SVD of the 8x4 matrix [diag(S); A·V]:

    [diag(S); A V] = Ũ S̃ Ṽᵀ   ->   S ← S̃,  V ← V Ṽ

``svd_update_general`` is the rectangular form with the QL step, for
arbitrary thin factorizations.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import IllConditionedWarning
from .geometry import UnitQuaternion

REORTHO_EVERY = 256
REORTHO_TOL = 1e-9


@dataclass
class SvdState:
    """Right singular factorization of the stacked constraint matrix.

    ``singular_values`` are stored divided by ``scale``; the singular values
    of the actual stack are ``singular_values * scale``.
    """

    singular_values: np.ndarray
    V: np.ndarray
    frames_absorbed: int = 0
    scale: float = 1.0
    since_reortho: int = 0

    @property
    def raw_singular_values(self) -> np.ndarray:
        return self.singular_values * self.scale

    @property
    def conditioning(self) -> float:
        """σ₃/σ₄; inf when σ₄ = 0 < σ₃, 1 when both vanish.

        Values below ``_ZERO_RTOL`` times σ₁ count as zero, so that rounding
        noise in an exactly degenerate system does not yield a ratio.
        """
        s = self.singular_values
        floor = _ZERO_RTOL * s[0]
        s3, s4 = (v if v > floor else 0.0 for v in s[2:4])
        if s4 > 0.0:
            return float(s3 / s4)
        return math.inf if s3 > 0.0 else 1.0

    def orthogonality_error(self) -> float:
        return float(np.linalg.norm(self.V.T @ self.V - np.eye(self.V.shape[1])))


_ZERO_RTOL = 1e-12


def _normalized(s: np.ndarray, scale: float, normalize: bool):
    top = s[0] if s.size else 0.0
    if normalize and top > 0.0:
        return s / top, scale * top
    return s, scale


def _nearest_orthogonal(V: np.ndarray) -> np.ndarray:
    U, _, Wt = np.linalg.svd(V)
    return U @ Wt


def svd_init(A1, normalize: bool = True) -> SvdState:
    A1 = np.asarray(A1, dtype=float)
    if not np.any(A1):
        # stationary first frame: nothing to factor yet
        return SvdState(np.zeros(A1.shape[1]), np.eye(A1.shape[1]), 1)
    _, s, Vt = np.linalg.svd(A1)
    s, scale = _normalized(s, 1.0, normalize)
    return SvdState(s, Vt.T.copy(), 1, scale)


def svd_update_square(state: SvdState, At, normalize: bool = True) -> SvdState:
    """Absorb one more square block; returns a new state."""
    At = np.asarray(At, dtype=float)
    V = state.V
    # divide the new block by the running scale so the stack stays O(1)
    K = np.vstack((np.diag(state.singular_values), (At @ V) / state.scale))
    _, s, Vt_inner = np.linalg.svd(K, full_matrices=False)
    V_new = V @ Vt_inner.T
    s, scale = _normalized(s, state.scale, normalize)

    since = state.since_reortho + 1
    if since >= REORTHO_EVERY or np.linalg.norm(V_new.T @ V_new - np.eye(V_new.shape[1])) > REORTHO_TOL:
        V_new = _nearest_orthogonal(V_new)
        since = 0
    return SvdState(s, V_new, state.frames_absorbed + 1, scale, since)


def svd_conditioning(state: SvdState) -> float:
    return state.conditioning


def svd_solution(state: SvdState, conditioning_threshold: float | None = None) -> UnitQuaternion:
    """Right singular vector of the least singular value, as Δq.

    Warns with ``IllConditionedWarning`` when σ₃/σ₄ is below
    ``conditioning_threshold``; the vector is returned regardless.
    """
    if state.frames_absorbed < 1:
        raise ValueError("no constraint blocks absorbed yet")
    if conditioning_threshold is not None and state.conditioning < conditioning_threshold:
        warnings.warn(
            f"rotation poorly observable: sigma3/sigma4 = {state.conditioning:.3g}",
            IllConditionedWarning,
            stacklevel=2,
        )
    return UnitQuaternion.from_array(state.V[:, -1])


def ql(M):
    """QL factorization M = Q L with Q orthonormal columns, L lower triangular."""
    Q, R = np.linalg.qr(M[:, ::-1])
    return Q[:, ::-1], R[::-1, ::-1]


def svd_update_general(U, S, V, B, rtol: float = 1e-12):
    """Thin SVD of the row-stacked matrix [U diag(S) Vᵀ; B].

    U is r×k, S has k entries, V is n×k, B is m×n. Returns (U', S', V') with
    S' sorted descending. Directions of the residual (I − VVᵀ)Bᵀ that carry
    no energy are dropped, so the rank grows by at most rank of the residual.
    """
    U = np.asarray(U, dtype=float)
    S = np.asarray(S, dtype=float)
    V = np.asarray(V, dtype=float)
    B = np.atleast_2d(np.asarray(B, dtype=float))
    r, k = U.shape
    m, n = B.shape

    BV = B @ V
    P = B.T - V @ BV.T  # (I − VVᵀ)Bᵀ, n×m
    ref = max(np.linalg.norm(B), float(S.max()) if S.size else 0.0, 1.0)

    Q = np.zeros((n, 0))
    Lt = np.zeros((m, 0))
    if np.linalg.norm(P) > rtol * ref:
        Qf, L = ql(P)
        d = np.abs(np.diag(L))
        if m <= n - k and np.all(d > rtol * ref) and np.linalg.norm(V.T @ Qf) < 1e-10:
            Q, Lt = Qf, L.T
        else:
            # degenerate QL: keep only the residual directions that carry energy
            Up, sp, _ = np.linalg.svd(P, full_matrices=False)
            keep = sp > rtol * ref
            Q = Up[:, keep]
            Q = Q - V @ (V.T @ Q)
            Q, _ = np.linalg.qr(Q)
            Lt = (Q.T @ P).T
    p = Q.shape[1]

    inner = np.zeros((k + m, k + p))
    inner[:k, :k] = np.diag(S)
    inner[k:, :k] = BV
    inner[k:, k:] = Lt
    Ui, Si, Vit = np.linalg.svd(inner, full_matrices=False)

    left = np.zeros((r + m, k + m))
    left[:r, :k] = U
    left[r:, k:] = np.eye(m)
    U_new = left @ Ui
    V_new = np.hstack((V, Q)) @ Vit.T
    return U_new, Si, V_new
