"""Coherent power-density sampling on planar grids."""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .channel import GainPattern

_CHUNK = 4096


@dataclass(frozen=True, eq=False)
class PlaneGrid:
    origin: np.ndarray  # corner at (u=0, v=0)
    axis_u: np.ndarray
    axis_v: np.ndarray
    extent_u: float
    extent_v: float
    n_u: int
    n_v: int

    def __post_init__(self):
        if self.n_u < 2 or self.n_v < 2:
            raise ValueError("grid sample counts must be >= 2")
        u, v = np.asarray(self.axis_u, float), np.asarray(self.axis_v, float)
        gram = np.array([[u @ u, u @ v], [v @ u, v @ v]])
        if np.max(np.abs(gram - np.eye(2))) > 1e-12:
            raise ValueError("grid axes must be orthonormal")
        if not (self.extent_u > 0 and self.extent_v > 0):
            raise ValueError("grid extents must be > 0")

    @classmethod
    def centered(cls, center, axis_u, axis_v, extent_u, extent_v, n_u, n_v) -> "PlaneGrid":
        u, v = np.asarray(axis_u, float), np.asarray(axis_v, float)
        origin = np.asarray(center, float) - 0.5 * extent_u * u - 0.5 * extent_v * v
        return cls(origin, u, v, float(extent_u), float(extent_v), int(n_u), int(n_v))

    @property
    def step_u(self) -> float:
        return self.extent_u / (self.n_u - 1)

    @property
    def step_v(self) -> float:
        return self.extent_v / (self.n_v - 1)

    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        return (np.linspace(0, self.extent_u, self.n_u), np.linspace(0, self.extent_v, self.n_v))

    def points(self) -> np.ndarray:
        """Sample positions, shape (n_v, n_u, 3)."""
        su, sv = self.coords()
        return (self.origin + sv[:, None, None] * self.axis_v + su[None, :, None] * self.axis_u)

    def locate(self, point) -> tuple[int, int]:
        """(row, col) of the grid sample nearest to the projection of ``point``."""
        d = np.asarray(point, float) - self.origin
        col = int(round(float(d @ self.axis_u) / self.step_u))
        row = int(round(float(d @ self.axis_v) / self.step_v))
        return row, col

    def to_dict(self) -> dict:
        return {"origin": list(map(float, self.origin)), "axis_u": list(map(float, self.axis_u)),
                "axis_v": list(map(float, self.axis_v)), "extent_u": self.extent_u,
                "extent_v": self.extent_v, "n_u": self.n_u, "n_v": self.n_v}


@dataclass(frozen=True, eq=False)
class FieldMap:
    grid: PlaneGrid
    values: np.ndarray  # (n_v, n_u), W/m^2 unless normalized
    wavelength: float
    normalized: bool = False
    all_zero: bool = False
    near_zone: np.ndarray | None = None  # points closer than the reactive-zone radius
    coincident: np.ndarray | None = None  # points on top of a source

    def peak_index(self) -> tuple[int, int]:
        return tuple(int(i) for i in np.unravel_index(np.argmax(self.values), self.values.shape))

    def peak_to_mean(self) -> float:
        m = float(self.values.mean())
        return float(self.values.max()) / m if m > 0 else 0.0

    def __add__(self, other: "FieldMap") -> "FieldMap":
        # distinct carriers add in power, not amplitude
        nz = None if self.near_zone is None or other.near_zone is None else self.near_zone | other.near_zone
        co = None if self.coincident is None or other.coincident is None else self.coincident | other.coincident
        return FieldMap(self.grid, self.values + other.values, self.wavelength, False, False, nz, co)


@dataclass(frozen=True, eq=False)
class Sources:
    positions: np.ndarray  # (K, 3)
    normals: np.ndarray  # (K, 3)
    amplitudes: np.ndarray  # (K,), |a|^2 = element power in W

    def __post_init__(self):
        if len(self.amplitudes) == 0:
            raise ValueError("empty source list")

    @classmethod
    def from_array(cls, geom, amplitudes) -> "Sources":
        return cls(np.asarray(geom.element_positions, float), np.asarray(geom.normals, float),
                   np.asarray(amplitudes, complex))


def _default_near_radius(pos: np.ndarray) -> float:
    if len(pos) < 2:
        return 0.0
    d = np.linalg.norm(pos[:, None, :] - pos[None, :, :], axis=-1)
    np.fill_diagonal(d, np.inf)
    return 2.0 * float(d.min())


def sample_field(sources: Sources, wavelength: float, beta: float = 2.0,
                 pattern: GainPattern | None = None, grid: PlaneGrid | None = None,
                 near_radius: float | None = None) -> FieldMap:
    """Coherent power density radiated by ``sources`` at every grid point.

    Each element contributes ``a * sqrt(G/(4 pi)) * r**(-beta/2) * exp(-j 2 pi r / lambda)``;
    the density is the squared magnitude of the sum.
    """
    if grid is None:
        raise ValueError("grid required")
    pattern = pattern or GainPattern()
    pos, nrm, amp = sources.positions, sources.normals, sources.amplitudes
    near_radius = _default_near_radius(pos) if near_radius is None else near_radius
    pts = grid.points().reshape(-1, 3)
    vals = np.empty(len(pts))
    near = np.zeros(len(pts), dtype=bool)
    hit = np.zeros(len(pts), dtype=bool)
    k = 2 * np.pi / wavelength
    for s in range(0, len(pts), _CHUNK):
        p = pts[s:s + _CHUNK]
        d = p[:, None, :] - pos[None, :, :]
        r = np.sqrt(np.einsum("ijk,ijk->ij", d, d))
        zero = r == 0
        hit[s:s + _CHUNK] = zero.any(axis=1)
        near[s:s + _CHUNK] = (r < near_radius).any(axis=1)
        r_safe = np.where(zero, 1.0, r)
        cos = np.einsum("ijk,jk->ij", d, nrm) / r_safe
        w = np.sqrt(pattern.from_cos(cos) / (4 * np.pi)) * r_safe ** (-beta / 2) * np.exp(-1j * k * r_safe)
        w[zero] = 0.0
        vals[s:s + _CHUNK] = np.abs(w @ amp) ** 2
    vals = vals.reshape(grid.n_v, grid.n_u)
    hit = hit.reshape(grid.n_v, grid.n_u)
    if hit.any():
        for i, j in zip(*np.nonzero(hit)):
            nb = vals[max(i - 1, 0):i + 2, max(j - 1, 0):j + 2]
            ok = ~hit[max(i - 1, 0):i + 2, max(j - 1, 0):j + 2]
            vals[i, j] = nb[ok].max() if ok.any() else 0.0
    return FieldMap(grid, vals, wavelength, False, False, near.reshape(grid.n_v, grid.n_u), hit)


def normalize_map(fmap: FieldMap, reference: float | None = None) -> FieldMap:
    """Scale to unit peak, or by ``reference`` for a shared scale across frames."""
    peak = float(fmap.values.max()) if reference is None else float(reference)
    if peak <= 0:
        return replace(fmap, all_zero=True)
    return replace(fmap, values=fmap.values / peak, normalized=True)


def write_map(fmap: FieldMap, path, binary: bool = False, extra: dict | None = None) -> list[Path]:
    """CSV grid (n_v rows x n_u columns) plus a JSON sidecar; optional raw float64 dump."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(path, fmap.values, delimiter=",", fmt="%.17g")
    meta = {**fmap.grid.to_dict(), "wavelength": fmap.wavelength, "normalized": fmap.normalized,
            "all_zero": fmap.all_zero,
            "near_zone_points": int(fmap.near_zone.sum()) if fmap.near_zone is not None else 0,
            "coincident_points": int(fmap.coincident.sum()) if fmap.coincident is not None else 0,
            **(extra or {})}
    side = path.with_suffix(".json")
    side.write_text(json.dumps(meta, indent=2))
    out = [path, side]
    if binary:
        b = path.with_suffix(".f64")
        fmap.values.astype("<f8").tofile(b)
        out.append(b)
    return out


def read_map(path) -> FieldMap:
    path = Path(path)
    meta = json.loads(path.with_suffix(".json").read_text())
    vals = np.loadtxt(path, delimiter=",", ndmin=2)
    grid = PlaneGrid(np.array(meta["origin"]), np.array(meta["axis_u"]), np.array(meta["axis_v"]),
                     meta["extent_u"], meta["extent_v"], meta["n_u"], meta["n_v"])
    return FieldMap(grid, vals, meta["wavelength"], meta["normalized"], meta["all_zero"])


# ------------------------------------------------------------ scenario planes

def preset_plane(scenario, name: str, n_u: int = 401, n_v: int = 201) -> PlaneGrid:
    """Named sampling planes around a scenario.

    ``xoz``: the plane y = BS y, spanning x and range z from the BS to past the UEs.
    ``xoy-ue``: plane of constant z through the mean UE height.
    ``xoy-bs``: plane of constant z through the BS, just in front of it.
    """
    bs = np.asarray(scenario.bs.position)
    ue = np.array([u.position for u in scenario.ues])
    ex, ey, ez = np.eye(3)
    span_x = max(4.0, 2 * float(np.max(np.abs(ue[:, 0] - bs[0]))) + 1.0)
    if name == "xoz":
        z_hi = float(ue[:, 2].max()) + 1.0
        z_lo = bs[2]
        return PlaneGrid.centered((bs[0], bs[1], 0.5 * (z_lo + z_hi)), ex, ez, span_x, z_hi - z_lo, n_u, n_v)
    if name == "xoy-ue":
        z = float(ue[:, 2].mean())
        return PlaneGrid.centered((bs[0], bs[1], z), ex, ey, span_x, span_x / 2, n_u, n_v)
    if name == "xoy-bs":
        return PlaneGrid.centered(bs, ex, ey, 2.0, 2.0, n_u, n_v)
    raise ValueError(f"unknown plane {name!r}")


def parse_custom_plane(spec: str, n_u: int, n_v: int) -> PlaneGrid:
    """``cx,cy,cz,ux,uy,uz,vx,vy,vz,extent_u,extent_v`` (centre, axes, extents)."""
    vals = [float(x) for x in spec.split(",")]
    if len(vals) != 11:
        raise ValueError("custom plane needs 11 comma-separated numbers")
    return PlaneGrid.centered(vals[0:3], vals[3:6], vals[6:9], vals[9], vals[10], n_u, n_v)


def link_sources(link, trace, direction: str = "DL", iteration: int | None = None) -> Sources:
    """Radiating elements of one link at a given iteration (``None`` = steady state)."""
    if direction == "DL":
        geom = link.bs_tx
        if iteration is None:
            amp = trace.final_state.bs_amplitudes
        else:
            amp = trace.bs_history[iteration - 1]
    elif direction == "UL":
        geom = link.ue_tx
        amp = trace.final_state.ue_amplitudes if iteration is None else trace.ue_history[iteration - 1]
    else:
        raise ValueError("direction must be DL or UL")
    return Sources.from_array(geom, amp)


def scenario_map(scenario, links, traces, grid: PlaneGrid, direction: str = "DL",
                 iteration: int | None = None, link_ids=None) -> FieldMap:
    """Sum of per-link maps over the selected links."""
    ids = list(link_ids) if link_ids is not None else list(links)
    total = None
    for k in ids:
        lam = links[k].h_dl.wavelength if direction == "DL" else links[k].h_ul.wavelength
        spacing = (links[k].bs_tx if direction == "DL" else links[k].ue_tx).spacing
        m = sample_field(link_sources(links[k], traces[k], direction, iteration), lam,
                         scenario.control.beta, scenario.pattern, grid, near_radius=2 * spacing)
        total = m if total is None else total + m
    return total
