"""Parameter sweeps over distance, array size and BS placement."""

from __future__ import annotations

import csv
import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import __version__
from .metrics import LinkMetrics, scenario_metrics
from .resonance import run
from .scenario import Scenario, facing, resize_arrays, serialize_scenario


def resonance_time(distances_m, iterations, c: float = 2.99792458e8, model: str = "literal") -> float:
    """Time to establish resonance over all links.

    ``literal`` evaluates ``max_k (2 L_k + I_k) / c`` as printed (it adds a
    count to metres); ``physical`` charges one round trip ``2 L_k / c`` per
    iteration, ``max_k I_k * 2 L_k / c``.
    """
    if len(distances_m) != len(iterations) or not len(distances_m):
        raise ValueError("distances and iterations must be non-empty and of equal length")
    if model == "literal":
        return max((2 * l + i) / c for l, i in zip(distances_m, iterations))
    if model == "physical":
        return max(i * 2 * l / c for l, i in zip(distances_m, iterations))
    raise ValueError(f"unknown time model {model!r}")


@dataclass(frozen=True)
class SweepPoint:
    value: object
    metrics: dict[int, LinkMetrics]
    iterations: dict[int, int | None]
    distances: dict[int, float]
    total_efficiency: float
    time_literal: float
    time_physical: float
    converged: bool


@dataclass(frozen=True)
class SweepResult:
    parameter: str
    values: tuple
    points: tuple[SweepPoint, ...]
    scenario_hash: str = ""
    seed: int = 0

    def column(self, name: str, link_id: int | None = None) -> np.ndarray:
        if link_id is None:
            return np.array([getattr(p, name) for p in self.points])
        return np.array([getattr(p.metrics[link_id], name) for p in self.points])

    def efficiencies(self, link_id: int) -> np.ndarray:
        return self.column("eta_dl", link_id)


def scenario_hash(s: Scenario) -> str:
    return hashlib.sha256(serialize_scenario(s).encode()).hexdigest()[:16]


def evaluate(s: Scenario, value=None) -> SweepPoint:
    """Run one scenario to steady state and collect its metrics."""
    traces = run(s)
    metrics = scenario_metrics(s, traces)
    bs = np.asarray(s.bs.position)
    dist = {k: float(np.linalg.norm(np.asarray(s.ue(k).position) - bs)) for k in traces}
    iters = {k: t.iterations_to_converge for k, t in traces.items()}
    # unconverged links are charged their full iteration count
    used = [iters[k] if iters[k] is not None else len(traces[k].records) for k in traces]
    d = [dist[k] for k in traces]
    total = sum(t.final.p_ue_rx for t in traces.values()) / sum(t.final.p_bs_tx for t in traces.values())
    c = s.constants.c
    return SweepPoint(value, metrics, iters, dist, total, resonance_time(d, used, c, "literal"),
                      resonance_time(d, used, c, "physical"), all(t.converged for t in traces.values()))


def _sweep(name, base, values, build, workers) -> SweepResult:
    scenarios = [build(v) for v in values]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            pts = list(pool.map(evaluate, scenarios, values))
    else:
        pts = [evaluate(s, v) for s, v in zip(scenarios, values)]
    return SweepResult(name, tuple(values), tuple(pts), scenario_hash(base), base.control.init_seed)


def place_at_distance(s: Scenario, distance: float) -> Scenario:
    """Slide every UE along its BS-to-UE ray to ``distance``; UEs keep facing the BS."""
    bs = np.asarray(s.bs.position)
    ues = []
    for u in s.ues:
        d = np.asarray(u.position) - bs
        p = tuple(float(x) for x in bs + d / np.linalg.norm(d) * distance)
        ues.append(replace(u, position=p, normal=facing(p, s.bs.position)))
    return replace(s, ues=tuple(ues))


def distance_sweep(base: Scenario, distances, workers: int = 1) -> SweepResult:
    for d in distances:
        if not d > 0:
            raise ValueError("distances must be positive")
    return _sweep("distance_m", base, list(distances), lambda d: place_at_distance(base, d), workers)


def array_size_sweep(base: Scenario, sizes, workers: int = 1) -> SweepResult:
    sizes = [tuple(int(x) for x in sz) for sz in sizes]
    for r, c in sizes:
        if r < 1 or c < 1:
            raise ValueError("array sizes must be at least 1x1")
    return _sweep("array_size", base, sizes, lambda sz: resize_arrays(base, *sz), workers)


def bs_position_scenario(base: Scenario, x: float, z_ue: float, ue_x: float = 2.0) -> Scenario:
    """BS at (x, 0, 0) facing +z; UEs at (+ue_x, 0, z_ue) and (-ue_x, 0, z_ue).

    The first UE of ``base`` takes +ue_x. UEs stay fixed and face the sweep
    centre (origin) rather than tracking the BS.
    """
    if len(base.ues) != 2:
        raise ValueError("BS placement sweep needs a two-UE scenario")
    bs = replace(base.bs, position=(float(x), 0.0, 0.0), normal=(0.0, 0.0, 1.0))
    ues = []
    for u, sx in zip(base.ues, (ue_x, -ue_x)):
        p = (sx, 0.0, float(z_ue))
        ues.append(replace(u, position=p, normal=facing(p, (0.0, 0.0, 0.0))))
    return replace(base, bs=bs, ues=tuple(ues))


def bs_position_sweep(base: Scenario, xs, z_ue: float = 3.0, workers: int = 1) -> SweepResult:
    return _sweep("bs_x_m", base, [float(x) for x in xs],
                  lambda x: bs_position_scenario(base, x, z_ue), workers)


def symmetric_variant(base: Scenario) -> Scenario:
    """Every link moved onto the last link's bands and node lattices (mirror-symmetric plan)."""
    ref_ue = base.ues[-1]
    ref = base.plan.entry(ref_ue.link_id)
    ues = tuple(replace(u, tx_array=ref_ue.tx_array, rx_array=ref_ue.rx_array) for u in base.ues)
    plan = replace(base.plan, entries=tuple(replace(e, f_dl=ref.f_dl, f_ul=ref.f_ul) for e in base.plan.entries))
    return replace(base, ues=ues, plan=plan)


def sweep_columns(result: SweepResult) -> tuple[list[str], list[list]]:
    ids = sorted(result.points[0].metrics) if result.points else []
    header = [result.parameter, "total_efficiency", "time_literal_s", "time_physical_s", "converged"]
    for k in ids:
        header += [f"link{k}_{c}" for c in ("distance_m", "iterations", "eta_dl", "eta_ul", "snr_dl_db",
                                            "snr_ul_db", "se_dl", "se_ul", "p_harvested_w")]
    rows = []
    for p in result.points:
        v = "x".join(map(str, p.value)) if isinstance(p.value, tuple) else p.value
        row = [v, p.total_efficiency, p.time_literal, p.time_physical, int(p.converged)]
        for k in ids:
            m = p.metrics[k]
            it = p.iterations[k]
            row += [p.distances[k], "" if it is None else it, m.eta_dl, m.eta_ul, m.snr_dl_db,
                    m.snr_ul_db, m.se_dl, m.se_ul, m.p_harvested]
        rows.append(row)
    return header, rows


def fmt(v) -> str:
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def write_sweep(result: SweepResult, path, command: str = "") -> list[Path]:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header, rows = sweep_columns(result)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) for v in r])
    meta = {"parameter": result.parameter, "scenario_hash": result.scenario_hash,
            "seed": result.seed, "version": __version__, "command": command}
    side = path.with_suffix(".json")
    side.write_text(json.dumps(meta, indent=2))
    return [path, side]
