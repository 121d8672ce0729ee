"""Exponentially weighted block recursive least squares.

Estimates x = (ΔT, Δλ) from observations b = B x with B a 3x4 block. With
forgetting factor λ the recursion

    Γ = (I₃ + λ⁻¹ B C Bᵀ)⁻¹
    G = λ⁻¹ C Bᵀ Γ
    x ← x + G (b − B x)
    C ← λ⁻¹ C − G Γ⁻¹ Gᵀ

minimizes Σₜ λ^{N−t} ‖Bₜ x − bₜ‖² + λᴺ xᵀ C₀⁻¹ x exactly, starting from
x₀ = 0 and C₀ = c0_scale · I.

Γ is the 3x3 innovation term (B C Bᵀ, not Bᵀ C B) and the covariance update
subtracts the gain term; both follow from the matrix inversion lemma.

The covariance is evaluated in the algebraically identical Joseph form
(I − GB)·λ⁻¹C·(I − GB)ᵀ + GGᵀ, a sum of PSD terms. The subtractive form
loses most significant digits once c0_scale is large (≳ 1e4), which is
exactly the weak-prior regime where the estimate is meant to approach plain
least squares.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .errors import InvalidForgetting, NumericalBreakdown


@dataclass
class RlsState:
    x: np.ndarray
    C: np.ndarray
    forgetting: float = 1.0
    blocks_absorbed: int = 0


@dataclass(frozen=True, eq=False)
class RlsObservation:
    B: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        B = np.asarray(self.B, dtype=float).reshape(-1, 4)
        b = np.asarray(self.b, dtype=float).reshape(-1)
        if B.shape[0] != b.shape[0]:
            raise ValueError(f"B has {B.shape[0]} rows but b has {b.shape[0]} entries")
        if not (np.all(np.isfinite(B)) and np.all(np.isfinite(b))):
            raise ValueError("observation has non-finite entries")
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "b", b)


def rls_init(forgetting: float = 1.0, c0_scale: float = 1.0, dim: int = 4) -> RlsState:
    if not 0.0 < forgetting <= 1.0:
        raise InvalidForgetting(f"forgetting factor must be in (0, 1], got {forgetting}")
    if not c0_scale > 0.0:
        raise ValueError(f"c0_scale must be positive, got {c0_scale}")
    return RlsState(np.zeros(dim), c0_scale * np.eye(dim), float(forgetting), 0)


def rls_update(state: RlsState, obs: RlsObservation) -> RlsState:
    B, b = obs.B, obs.b
    inv_lam = 1.0 / state.forgetting
    C = state.C
    CBt = C @ B.T
    gamma_inv = np.eye(B.shape[0]) + inv_lam * (B @ CBt)
    try:
        gamma = np.linalg.inv(gamma_inv)
    except np.linalg.LinAlgError as exc:
        raise NumericalBreakdown("innovation matrix is singular") from exc
    G = inv_lam * CBt @ gamma
    x = state.x + G @ (b - B @ state.x)
    # == inv_lam * C - G @ gamma_inv @ G.T, without the cancellation
    K = np.eye(C.shape[0]) - G @ B
    C_new = K @ (inv_lam * C) @ K.T + G @ G.T
    C_new = 0.5 * (C_new + C_new.T)
    if not np.all(np.isfinite(C_new)):
        raise NumericalBreakdown("covariance became non-finite")
    return RlsState(x, C_new, state.forgetting, state.blocks_absorbed + 1)


def rls_estimate(state: RlsState) -> Tuple[np.ndarray, float]:
    """Split x into (ΔT, Δλ)."""
    return state.x[:3].copy(), float(state.x[3])
