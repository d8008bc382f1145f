"""Steady-state prediction from a dense eigendecomposition of the round-trip map."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelMatrix

DEGENERATE_GAP = 0.99


@dataclass(frozen=True, eq=False)
class SteadyStatePrediction:
    dominant_loss: float
    bs_mode: np.ndarray
    gap: float
    eigenvalue: complex

    @property
    def degenerate(self) -> bool:
        return self.gap >= DEGENERATE_GAP


def round_trip_operator(h_dl, h_ul) -> np.ndarray:
    """Linear map from BS amplitudes to (conjugated) BS return amplitudes.

    DL propagate, conjugate, UL propagate, conjugate collapses to
    ``conj(H_ul)^T @ H_dl^T`` (scalings excluded).
    """
    a = getattr(h_dl, "entries", h_dl)
    b = getattr(h_ul, "entries", h_ul)
    if a.shape[1] != b.shape[0] or b.shape[1] != a.shape[0]:
        raise ValueError(f"dimension mismatch: DL {a.shape} vs UL {b.shape}")
    return b.conj().T @ a.T


def steady_state_mode(h_dl: ChannelMatrix | np.ndarray, h_ul: ChannelMatrix | np.ndarray,
                      alpha: float, gamma: float) -> SteadyStatePrediction:
    t = round_trip_operator(h_dl, h_ul)
    w, v = np.linalg.eig(t)
    order = np.argsort(-np.abs(w), kind="stable")
    lam = w[order[0]]
    mode = v[:, order[0]]
    mode = mode / np.linalg.norm(mode)
    gap = float(abs(w[order[1]]) / abs(lam)) if len(w) > 1 and abs(lam) > 0 else 0.0
    loss = (1 - alpha) * (1 - gamma) * abs(lam) ** 2
    return SteadyStatePrediction(float(loss), mode, gap, complex(lam))


def loss_upper_bound(h_dl, h_ul, alpha: float, gamma: float) -> float:
    a = getattr(h_dl, "entries", h_dl)
    b = getattr(h_ul, "entries", h_ul)
    s1 = np.linalg.norm(a, 2)
    s2 = np.linalg.norm(b, 2)
    return (1 - alpha) * (1 - gamma) * s1**2 * s2**2


def mode_overlap(x: np.ndarray, mode: np.ndarray) -> float:
    return float(abs(np.vdot(x / np.linalg.norm(x), mode / np.linalg.norm(mode))))
