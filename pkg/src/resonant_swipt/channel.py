"""Near-field MIMO channel matrices with a spherical-wave phase model."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geometry import ArrayGeometry

C0 = 2.99792458e8
PEAK_GAIN_DBI = 4.97


@dataclass(frozen=True)
class GainPattern:
    """Hemispherical element pattern ``g_max * cos(psi)**exponent``."""

    g_max: float = 10 ** (PEAK_GAIN_DBI / 10)
    exponent: float = 1.0

    def __post_init__(self):
        if not self.g_max > 0:
            raise ValueError("g_max must be > 0")
        if not self.exponent >= 0:
            raise ValueError("exponent must be >= 0")

    def from_cos(self, cos_psi):
        """Gain evaluated from the cosine of the off-normal angle."""
        cos_psi = np.asarray(cos_psi, dtype=float)
        out = np.zeros_like(cos_psi)
        front = cos_psi > 0
        out[front] = self.g_max * cos_psi[front] ** self.exponent
        return out if out.ndim else float(out)


def element_gain(pattern: GainPattern, angle_from_normal) -> float | np.ndarray:
    angle = np.asarray(angle_from_normal, dtype=float)
    if np.any((angle < 0) | (angle > np.pi)):
        raise ValueError("angle must lie in [0, pi]")
    cos_psi = np.where(angle < np.pi / 2, np.cos(angle), 0.0)
    return pattern.from_cos(cos_psi)


@dataclass(frozen=True, eq=False)
class ChannelMatrix:
    entries: np.ndarray  # (n_tx, n_rx) complex
    wavelength: float
    direction: str  # "DL" or "UL"
    link_id: int

    @property
    def frequency(self) -> float:
        return C0 / self.wavelength

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape


def _kernel(src_pos, src_nrm, dst_pos, dst_nrm, wavelength, beta, pattern, c_factor):
    d = dst_pos[None, :, :] - src_pos[:, None, :]
    r = np.sqrt(np.einsum("ijk,ijk->ij", d, d))
    if np.any(r == 0):
        raise ValueError("coincident transmit/receive positions")
    cos_tx = np.einsum("ijk,ik->ij", d, src_nrm) / r
    cos_rx = -np.einsum("ijk,jk->ij", d, dst_nrm) / r
    g = pattern.from_cos(cos_tx) * pattern.from_cos(cos_rx)
    mag = c_factor * np.sqrt(g * r ** (-beta))
    return mag * np.exp(-2j * np.pi * r / wavelength)


def channel_entry(tx_pos, tx_normal, rx_pos, rx_normal, wavelength: float,
                  beta: float = 2.0, pattern: GainPattern | None = None) -> complex:
    pattern = pattern or GainPattern()
    h = _kernel(np.atleast_2d(np.asarray(tx_pos, float)), np.atleast_2d(np.asarray(tx_normal, float)),
                np.atleast_2d(np.asarray(rx_pos, float)), np.atleast_2d(np.asarray(rx_normal, float)),
                wavelength, beta, pattern, wavelength / (4 * np.pi))
    return complex(h[0, 0])


def build_channel(src: ArrayGeometry, dst: ArrayGeometry, frequency: float, beta: float = 2.0,
                  pattern: GainPattern | None = None, c: float = C0, direction: str = "DL",
                  link_id: int = 1) -> ChannelMatrix:
    """Transfer matrix from every ``src`` element (rows) to every ``dst`` element (cols)."""
    if src.size == 0 or dst.size == 0:
        raise ValueError("arrays must be non-empty")
    pattern = pattern or GainPattern()
    lam = c / frequency
    h = _kernel(src.element_positions, src.normals, dst.element_positions, dst.normals,
                lam, beta, pattern, lam / (4 * np.pi))
    if not np.all(np.isfinite(h)):
        raise ValueError("non-finite channel entries")
    h.setflags(write=False)
    return ChannelMatrix(h, lam, direction, link_id)


def dump_channel(ch: ChannelMatrix, path, frequency: float | None = None) -> tuple[Path, Path]:
    """Write interleaved re/im float64 (row-major) plus a JSON sidecar header."""
    path = Path(path)
    data = np.empty(ch.entries.size * 2, dtype="<f8")
    flat = ch.entries.reshape(-1)
    data[0::2] = flat.real
    data[1::2] = flat.imag
    data.tofile(path)
    header = {
        "rows": ch.entries.shape[0],
        "cols": ch.entries.shape[1],
        "frequency": frequency if frequency is not None else ch.frequency,
        "wavelength": ch.wavelength,
        "direction": ch.direction,
        "link_id": ch.link_id,
    }
    side = path.with_suffix(path.suffix + ".json")
    side.write_text(json.dumps(header, indent=2))
    return path, side


def load_channel(path) -> ChannelMatrix:
    path = Path(path)
    header = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    raw = np.fromfile(path, dtype="<f8")
    h = (raw[0::2] + 1j * raw[1::2]).reshape(header["rows"], header["cols"])
    return ChannelMatrix(h, header["wavelength"], header["direction"], header["link_id"])
