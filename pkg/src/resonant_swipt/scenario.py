"""Scenario types, JSON schema parsing and the default two-UE setup.

Scenario files are JSON documents::

    {
      "constants": {"z0": 377, "kappa": 1.38e-23, "c": 299792458, "temperature": 295},
      "control": {"alpha": 0.995, "gamma": 0.995, "p_cap_total": 20, ...},
      "pattern": {"g_max": 3.1405, "exponent": 1},
      "bs": {"position": [0, 0, 0], "normal": [0, 0, 1],
             "tx": {"rows": 16, "cols": 16, "spacing": 0.00517},
             "rx": {"rows": 16, "cols": 16, "spacing": 0.00500}},
      "ues": [{"link_id": 1, "position": [1, 0, 2], "tx": {...}, "rx": {...}},
              {"link_id": 2, "position": {"range": 2.2, "elevation_deg": -26.6,
                                          "azimuth_deg": 0}, ...}],
      "plan": [{"link_id": 1, "f_dl": 28.517e9, "f_ul": 29.5e9}, ...]
    }

Every omitted field takes its default.  Lengths are metres, frequencies Hz,
powers W, temperatures K and gains linear unless the key ends in ``_db``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .channel import GainPattern
from .geometry import ArrayGeometry, build_planar_array, half_wavelength, plane_axes

Vec3 = tuple[float, float, float]


class ScenarioError(ValueError):
    """Schema or invariant violation; ``path`` locates the offending field."""

    def __init__(self, message: str, path: str = ""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


@dataclass(frozen=True)
class PhysicalConstants:
    z0: float = 377.0
    kappa: float = 1.38e-23
    c: float = 2.99792458e8
    temperature: float = 295.0

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not (v > 0 and math.isfinite(v)):
                raise ScenarioError(f"{f.name} must be strictly positive", f"constants.{f.name}")


@dataclass(frozen=True)
class ControlParams:
    alpha: float = 0.995
    gamma: float = 0.995
    p_cap_total: float = 20.0
    g_pa_max: float = 1e9
    beta: float = 2.0
    delta_db: float = 3.0
    bandwidth: float = 1e9
    noise_figure_db: float = 6.0
    conv_tol: float = 1e-4
    conv_window: int = 3
    max_iters: int = 200
    init_seed: int = 0
    init_phase: str = "random"

    def __post_init__(self):
        def bad(name, msg):
            raise ScenarioError(msg, f"control.{name}")

        if not 0 < self.alpha < 1:
            bad("alpha", "alpha must lie in (0,1)")
        if not 0 < self.gamma < 1:
            bad("gamma", "gamma must lie in (0,1)")
        if not self.p_cap_total > 0:
            bad("p_cap_total", "p_cap_total must be > 0")
        if not self.g_pa_max > 0:
            bad("g_pa_max", "g_pa_max must be > 0")
        if not self.beta >= 0:
            bad("beta", "beta must be >= 0")
        if not self.bandwidth > 0:
            bad("bandwidth", "bandwidth must be > 0")
        if not self.conv_tol > 0:
            bad("conv_tol", "conv_tol must be > 0")
        if self.conv_window < 1:
            bad("conv_window", "conv_window must be >= 1")
        if self.max_iters < 1:
            bad("max_iters", "max_iters must be >= 1")
        if self.init_phase not in ("random", "zero"):
            bad("init_phase", "init_phase must be 'random' or 'zero'")

    @property
    def noise_figure(self) -> float:
        return 10 ** (self.noise_figure_db / 10)


@dataclass(frozen=True)
class LatticeSpec:
    rows: int
    cols: int
    spacing: float

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ScenarioError("rows, cols must be >= 1")
        if not self.spacing > 0:
            raise ScenarioError("spacing must be > 0")


@dataclass(frozen=True)
class NodeSpec:
    position: Vec3
    normal: Vec3
    tx_array: LatticeSpec
    rx_array: LatticeSpec
    role: str = "UE"
    link_id: int | None = None

    def __post_init__(self):
        if self.role not in ("BS", "UE"):
            raise ScenarioError(f"unknown role {self.role!r}")
        if abs(math.sqrt(sum(x * x for x in self.normal)) - 1.0) > 1e-12:
            raise ScenarioError("normal must have unit length")
        if self.role == "UE" and self.link_id is None:
            raise ScenarioError("UE needs a link_id")
        if (self.tx_array.rows, self.tx_array.cols) != (self.rx_array.rows, self.rx_array.cols):
            # element-wise conjugation pairs rx element n with tx element n
            raise ScenarioError("tx and rx lattices must have the same rows x cols")

    def tx_geometry(self) -> ArrayGeometry:
        a = self.tx_array
        return build_planar_array(a.rows, a.cols, a.spacing, self.position, self.normal)

    def rx_geometry(self) -> ArrayGeometry:
        a = self.rx_array
        return build_planar_array(a.rows, a.cols, a.spacing, self.position, self.normal)

    @property
    def n_elements(self) -> int:
        return self.tx_array.rows * self.tx_array.cols


@dataclass(frozen=True)
class PlanEntry:
    link_id: int
    f_dl: float
    f_ul: float


@dataclass(frozen=True)
class FrequencyPlan:
    entries: tuple[PlanEntry, ...]
    bandwidth: float = 1e9

    def __post_init__(self):
        ids = [e.link_id for e in self.entries]
        if len(set(ids)) != len(ids):
            raise ScenarioError("link_ids must be unique", "plan")
        for i, e in enumerate(self.entries):
            if not (e.f_dl > 0 and e.f_ul > 0):
                raise ScenarioError("frequencies must be > 0", f"plan[{i}]")
        if not self.bandwidth > 0:
            raise ScenarioError("bandwidth must be > 0", "plan")

    def entry(self, link_id: int) -> PlanEntry:
        for e in self.entries:
            if e.link_id == link_id:
                return e
        raise KeyError(link_id)


@dataclass(frozen=True)
class Scenario:
    constants: PhysicalConstants
    control: ControlParams
    bs: NodeSpec
    ues: tuple[NodeSpec, ...]
    plan: FrequencyPlan
    pattern: GainPattern = field(default_factory=GainPattern)

    def __post_init__(self):
        if self.bs.role != "BS":
            raise ScenarioError("exactly one BS required", "bs")
        if not self.ues:
            raise ScenarioError("at least one UE required", "ues")
        ids = [u.link_id for u in self.ues]
        if len(set(ids)) != len(ids):
            raise ScenarioError("UE link_ids must be unique", "ues")
        plan_ids = {e.link_id for e in self.plan.entries}
        for i, u in enumerate(self.ues):
            if u.role != "UE":
                raise ScenarioError("ues may only hold UE nodes", f"ues[{i}]")
            if u.link_id not in plan_ids:
                raise ScenarioError(f"link_id {u.link_id} missing from plan", f"ues[{i}].link_id")
        if len(plan_ids) != len(self.ues):
            raise ScenarioError("exactly one plan entry per UE required", "plan")

    @property
    def link_ids(self) -> list[int]:
        return [u.link_id for u in self.ues]

    def ue(self, link_id: int) -> NodeSpec:
        for u in self.ues:
            if u.link_id == link_id:
                return u
        raise KeyError(link_id)

    def with_control(self, **changes) -> "Scenario":
        return replace(self, control=replace(self.control, **changes))


# ---------------------------------------------------------------- parsing

_TOP_KEYS = {"constants", "control", "pattern", "bs", "ues", "plan"}
_LATTICE_KEYS = {"rows", "cols", "spacing"}
_NODE_KEYS = {"position", "normal", "tx", "rx", "link_id"}
_POLAR_KEYS = {"range", "elevation_deg", "azimuth_deg"}
_PLAN_KEYS = {"link_id", "f_dl", "f_ul"}


def _check_keys(obj, allowed, path, strict):
    if not isinstance(obj, dict):
        raise ScenarioError("expected an object", path)
    if strict:
        unknown = sorted(set(obj) - set(allowed))
        if unknown:
            raise ScenarioError(f"unknown key {unknown[0]!r}", f"{path}.{unknown[0]}" if path else unknown[0])


def _num(obj, key, path, default=None, kind=float):
    if key not in obj:
        if default is None:
            raise ScenarioError("required field missing", f"{path}.{key}")
        return default
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ScenarioError(f"expected a number, got {type(v).__name__}", f"{path}.{key}")
    if kind is int:
        if float(v) != int(v):
            raise ScenarioError("expected an integer", f"{path}.{key}")
        return int(v)
    return float(v)


def _vec3(v, path) -> Vec3:
    if not isinstance(v, (list, tuple)) or len(v) != 3:
        raise ScenarioError("expected a 3-element array", path)
    out = []
    for i, x in enumerate(v):
        if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
            raise ScenarioError("expected a finite number", f"{path}[{i}]")
        out.append(float(x))
    return tuple(out)


def _unit3(v, path) -> Vec3:
    a = np.asarray(_vec3(v, path))
    n = np.linalg.norm(a)
    if n == 0:
        raise ScenarioError("zero normal vector", path)
    if abs(n - 1.0) <= 1e-12:
        return tuple(float(x) for x in a)  # keep exact bits so serialization round-trips
    return tuple(float(x) for x in a / n)


def _lattice(obj, path, strict) -> LatticeSpec:
    _check_keys(obj, _LATTICE_KEYS, path, strict)
    try:
        return LatticeSpec(_num(obj, "rows", path, kind=int), _num(obj, "cols", path, kind=int),
                           _num(obj, "spacing", path))
    except ScenarioError as e:
        if e.path:
            raise
        raise ScenarioError(str(e), path) from None


def polar_to_position(bs_position, bs_normal, rng: float, elevation_deg: float,
                      azimuth_deg: float) -> Vec3:
    """Point at ``rng`` from the BS, ``elevation_deg`` off its boresight.

    Elevation tilts from the boresight toward the first lattice axis of the
    BS; azimuth rotates that tilt about the boresight.
    """
    n = np.asarray(bs_normal, float)
    u, v = plane_axes(n)
    th, ph = math.radians(elevation_deg), math.radians(azimuth_deg)
    d = math.cos(th) * n + math.sin(th) * (math.cos(ph) * u + math.sin(ph) * v)
    return tuple(float(x) for x in np.asarray(bs_position, float) + rng * d)


def facing(from_pos, to_pos) -> Vec3:
    d = np.asarray(to_pos, float) - np.asarray(from_pos, float)
    n = np.linalg.norm(d)
    if n == 0:
        raise ScenarioError("UE coincides with BS; cannot infer normal")
    return tuple(float(x) for x in d / n)


def _section(doc, key, cls, strict):
    obj = doc.get(key, {})
    _check_keys(obj, {f.name for f in fields(cls)}, key, strict)
    kw = {}
    for f in fields(cls):
        if f.name not in obj:
            continue
        if f.type in ("str",) or f.name == "init_phase":
            if not isinstance(obj[f.name], str):
                raise ScenarioError("expected a string", f"{key}.{f.name}")
            kw[f.name] = obj[f.name]
        elif f.name in ("conv_window", "max_iters", "init_seed"):
            kw[f.name] = _num(obj, f.name, key, kind=int)
        else:
            kw[f.name] = _num(obj, f.name, key)
    try:
        return cls(**kw)
    except ScenarioError:
        raise
    except ValueError as e:
        raise ScenarioError(str(e), key) from None


def scenario_from_dict(doc: dict, strict: bool = True) -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioError("scenario document must be an object")
    _check_keys(doc, _TOP_KEYS, "", strict)
    constants = _section(doc, "constants", PhysicalConstants, strict)
    control = _section(doc, "control", ControlParams, strict)
    pattern = _section(doc, "pattern", GainPattern, strict)

    if "bs" not in doc:
        raise ScenarioError("required field missing", "bs")
    b = doc["bs"]
    _check_keys(b, {"position", "normal", "tx", "rx"}, "bs", strict)
    bs_pos = _vec3(b.get("position", [0.0, 0.0, 0.0]), "bs.position")
    bs_nrm = _unit3(b.get("normal", [0.0, 0.0, 1.0]), "bs.normal")
    for k in ("tx", "rx"):
        if k not in b:
            raise ScenarioError("required field missing", f"bs.{k}")
    try:
        bs = NodeSpec(bs_pos, bs_nrm, _lattice(b["tx"], "bs.tx", strict),
                      _lattice(b["rx"], "bs.rx", strict), role="BS")
    except ScenarioError as e:
        if e.path:
            raise
        raise ScenarioError(str(e), "bs") from None

    raw_ues = doc.get("ues", [])
    if not isinstance(raw_ues, list):
        raise ScenarioError("expected an array", "ues")
    if not raw_ues:
        raise ScenarioError("at least one UE required", "ues")
    ues = []
    for i, u in enumerate(raw_ues):
        p = f"ues[{i}]"
        _check_keys(u, _NODE_KEYS, p, strict)
        link_id = _num(u, "link_id", p, kind=int)
        if "position" not in u:
            raise ScenarioError("required field missing", f"{p}.position")
        pos = u["position"]
        if isinstance(pos, dict):
            _check_keys(pos, _POLAR_KEYS, f"{p}.position", strict)
            pos = polar_to_position(bs_pos, bs_nrm, _num(pos, "range", f"{p}.position"),
                                    _num(pos, "elevation_deg", f"{p}.position", default=0.0),
                                    _num(pos, "azimuth_deg", f"{p}.position", default=0.0))
        else:
            pos = _vec3(pos, f"{p}.position")
        nrm = _unit3(u["normal"], f"{p}.normal") if "normal" in u else facing(pos, bs_pos)
        for k in ("tx", "rx"):
            if k not in u:
                raise ScenarioError("required field missing", f"{p}.{k}")
        try:
            ues.append(NodeSpec(pos, nrm, _lattice(u["tx"], f"{p}.tx", strict),
                                _lattice(u["rx"], f"{p}.rx", strict), role="UE", link_id=link_id))
        except ScenarioError as e:
            if e.path:
                raise
            raise ScenarioError(str(e), p) from None

    raw_plan = doc.get("plan")
    if not isinstance(raw_plan, list):
        raise ScenarioError("expected an array", "plan")
    entries = []
    for i, e in enumerate(raw_plan):
        p = f"plan[{i}]"
        _check_keys(e, _PLAN_KEYS, p, strict)
        entries.append(PlanEntry(_num(e, "link_id", p, kind=int), _num(e, "f_dl", p), _num(e, "f_ul", p)))
    plan = FrequencyPlan(tuple(entries), control.bandwidth)
    return Scenario(constants, control, bs, tuple(ues), plan, pattern)


def parse_scenario(text: str, strict: bool = True) -> Scenario:
    """Parse and validate a JSON scenario document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioError(f"malformed JSON: {e.msg} (line {e.lineno}, column {e.colno})") from None
    return scenario_from_dict(doc, strict=strict)


def load_scenario(path, strict: bool = True) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ScenarioError(f"cannot read scenario file {path}: {e.strerror}") from None
    return parse_scenario(text, strict=strict)


def _node_dict(n: NodeSpec) -> dict:
    d = {"position": list(n.position), "normal": list(n.normal),
         "tx": asdict(n.tx_array), "rx": asdict(n.rx_array)}
    if n.role == "UE":
        d = {"link_id": n.link_id, **d}
    return d


def scenario_to_dict(s: Scenario) -> dict:
    return {
        "constants": asdict(s.constants),
        "control": asdict(s.control),
        "pattern": asdict(s.pattern),
        "bs": _node_dict(s.bs),
        "ues": [_node_dict(u) for u in s.ues],
        "plan": [asdict(e) for e in s.plan.entries],
    }


def serialize_scenario(s: Scenario) -> str:
    # json emits repr() floats, so every value round-trips bit-exactly
    return json.dumps(scenario_to_dict(s), indent=2)


# ---------------------------------------------------------------- defaults

F_UL_2 = 30e9
F_DL_2 = 29e9
F_UL_1 = 29.5e9


def node_lattices(rows: int, cols: int, f_rx: float, f_tx: float, c: float) -> tuple[LatticeSpec, LatticeSpec]:
    """(tx, rx) lattices at half the wavelength of each band the node uses."""
    return (LatticeSpec(rows, cols, half_wavelength(f_tx, c)),
            LatticeSpec(rows, cols, half_wavelength(f_rx, c)))


def default_two_ue_scenario(rows: int = 16, cols: int | None = None) -> Scenario:
    """BS at the origin facing +z serving two UEs at (+-1, 0, 2).

    The BS lattices use half-wavelength spacing at UE 2's bands (29 GHz
    downlink, 30 GHz uplink). UE 1's downlink frequency is derived from
    those spacings so the BS retro-directs both links.
    """
    from .geometry import derive_dl_frequency

    cols = rows if cols is None else cols
    const = PhysicalConstants()
    c = const.c
    bs_tx, bs_rx = node_lattices(rows, cols, F_UL_2, F_DL_2, c)
    f_dl_1 = derive_dl_frequency(F_UL_1, bs_rx.spacing, bs_tx.spacing, c)
    bs = NodeSpec((0.0, 0.0, 0.0), (0.0, 0.0, 1.0), bs_tx, bs_rx, role="BS")
    ues = []
    for link_id, pos, f_dl, f_ul in ((1, (1.0, 0.0, 2.0), f_dl_1, F_UL_1),
                                     (2, (-1.0, 0.0, 2.0), F_DL_2, F_UL_2)):
        tx, rx = node_lattices(rows, cols, f_dl, f_ul, c)
        ues.append(NodeSpec(pos, facing(pos, bs.position), tx, rx, role="UE", link_id=link_id))
    control = ControlParams()
    plan = FrequencyPlan((PlanEntry(1, f_dl_1, F_UL_1), PlanEntry(2, F_DL_2, F_UL_2)), control.bandwidth)
    return Scenario(const, control, bs, tuple(ues), plan, GainPattern())


def resize_arrays(s: Scenario, rows: int, cols: int) -> Scenario:
    """Same spacings, new lattice dimensions on every node."""
    def rs(n: NodeSpec) -> NodeSpec:
        return replace(n, tx_array=replace(n.tx_array, rows=rows, cols=cols),
                       rx_array=replace(n.rx_array, rows=rows, cols=cols))
    return replace(s, bs=rs(s.bs), ues=tuple(rs(u) for u in s.ues))
