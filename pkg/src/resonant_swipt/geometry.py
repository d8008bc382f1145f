"""Planar element lattices and the retro-direction spacing condition."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if n == 0.0 or not np.isfinite(n):
        raise ValueError("zero normal vector")
    return v / n


def plane_axes(normal) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic orthonormal pair (u, v) with u x v = normal.

    The x axis is projected onto the plane unless the normal is nearly
    parallel to it, in which case y is used.
    """
    n = unit(normal)
    helper = np.array([1.0, 0.0, 0.0]) if abs(n[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    u = helper - np.dot(helper, n) * n
    u /= np.linalg.norm(u)
    v = np.cross(n, u)
    return u, v


@dataclass(frozen=True, eq=False)
class ArrayGeometry:
    element_positions: np.ndarray  # (rows*cols, 3), row-major
    normal: np.ndarray
    spacing: float
    rows: int
    cols: int

    @property
    def size(self) -> int:
        return self.rows * self.cols

    @property
    def center(self) -> np.ndarray:
        return self.element_positions.mean(axis=0)

    @property
    def normals(self) -> np.ndarray:
        return np.broadcast_to(self.normal, self.element_positions.shape)


def build_planar_array(rows: int, cols: int, spacing: float, center, normal) -> ArrayGeometry:
    """Centered rectangular lattice in the plane orthogonal to ``normal``.

    Element ``m = r * cols + c`` sits at column offset ``c`` along the first
    in-plane axis and row offset ``r`` along the second.
    """
    if rows < 1 or cols < 1:
        raise ValueError(f"lattice needs rows, cols >= 1 (got {rows}x{cols})")
    if not spacing > 0:
        raise ValueError(f"spacing must be > 0 (got {spacing})")
    n = unit(normal)
    u, v = plane_axes(n)
    cu = (np.arange(cols) - (cols - 1) / 2.0) * spacing
    rv = (np.arange(rows) - (rows - 1) / 2.0) * spacing
    rr, cc = np.meshgrid(rv, cu, indexing="ij")
    pos = np.asarray(center, dtype=float) + cc.reshape(-1, 1) * u + rr.reshape(-1, 1) * v
    pos.setflags(write=False)
    n.setflags(write=False)
    return ArrayGeometry(pos, n, float(spacing), int(rows), int(cols))


@dataclass(frozen=True)
class RetroCheck:
    ratio_spacing: float
    ratio_wavelength: float
    residual: float
    passed: bool


def check_retro_condition(d_rx: float, d_tx: float, lambda_in: float, lambda_out: float,
                          tol: float = 1e-9) -> RetroCheck:
    """Compare d_rx/d_tx against lambda_in/lambda_out.

    The outgoing wave retraces the incoming one only when the two ratios
    agree; ``residual`` is their relative mismatch.
    """
    rs = d_rx / d_tx
    rw = lambda_in / lambda_out
    residual = abs(rs - rw) / rw
    return RetroCheck(rs, rw, residual, residual <= tol)


def derive_dl_frequency(f_ul: float, d_rx: float, d_tx: float, c: float = 2.99792458e8) -> float:
    """Downlink frequency that satisfies the retro condition at the BS.

    At the BS the uplink is received on the ``d_rx`` lattice and the
    downlink leaves from the ``d_tx`` lattice, so
    ``lambda_ul / lambda_dl = d_rx / d_tx`` gives ``f_dl = f_ul * d_rx / d_tx``.
    ``c`` cancels and is accepted only to keep call sites explicit.
    """
    if min(f_ul, d_rx, d_tx, c) <= 0:
        raise ValueError("frequencies, spacings and c must be positive")
    return f_ul * d_rx / d_tx


def half_wavelength(frequency: float, c: float = 2.99792458e8) -> float:
    return c / frequency / 2.0
