"""Iterative BS <-> UE phase-conjugation loop, one FDMA sub-band per link.

Each iteration is one round trip: the BS radiates ``x``, the UE receives
``y = H_dl^T x``, keeps a fraction ``alpha`` of the power and re-radiates the
conjugate of the rest, the BS receives ``z = H_ul^T u``, taps ``gamma`` for
demodulation and amplifies the conjugate of the remainder up to its power
cap.  Two conjugations per round trip make the loop a power iteration on
``H_ul^H H_dl^T``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .channel import ChannelMatrix, build_channel
from .geometry import ArrayGeometry
from .scenario import Scenario

EPS = 1e-300


class DarkLinkError(RuntimeError):
    """No power came back to the BS amplifier."""


def initial_excitation(m: int, total_power: float, mode: str = "random", seed=0) -> np.ndarray:
    """Equal-power excitation of ``m`` elements, zero or uniformly random phases."""
    if not total_power > 0:
        raise ValueError("total_power must be > 0")
    mag = math.sqrt(total_power / m)
    if mode == "zero":
        return np.full(m, mag, dtype=complex)
    if mode != "random":
        raise ValueError(f"unknown init mode {mode!r}")
    rng = np.random.default_rng(seed)
    phase = rng.uniform(-np.pi, np.pi, m)
    return mag * np.exp(1j * phase)


def conjugate_retransmit(received: np.ndarray, power_scale: float) -> np.ndarray:
    if not 0 <= power_scale <= 1:
        raise ValueError("power_scale must lie in [0, 1]")
    return math.sqrt(power_scale) * np.conj(received)


def bs_amplify(received: np.ndarray, gamma: float, p_cap_link: float,
               g_pa_max: float) -> tuple[np.ndarray, float]:
    """Conjugate and amplify the BS return, clamping total output at ``p_cap_link``.

    The ``gamma`` share is tapped for demodulation before the amplifier, so
    the returned gain maps amplifier input power to radiated power.
    """
    if not p_cap_link > 0:
        raise ValueError("p_cap_link must be > 0")
    p_in = (1 - gamma) * float(np.vdot(received, received).real)
    if p_in <= 0:
        raise DarkLinkError("link dark: no return power")
    g = min(g_pa_max, p_cap_link / p_in)
    return math.sqrt((1 - gamma) * g) * np.conj(received), g


@dataclass(frozen=True, eq=False)
class Link:
    """Channels and control values for one sub-band."""

    link_id: int
    h_dl: ChannelMatrix  # (M, N): BS tx -> UE rx
    h_ul: ChannelMatrix  # (N, M): UE tx -> BS rx
    alpha: float
    gamma: float
    p_cap: float
    g_pa_max: float
    bs_tx: ArrayGeometry | None = None
    bs_rx: ArrayGeometry | None = None
    ue_tx: ArrayGeometry | None = None
    ue_rx: ArrayGeometry | None = None

    @property
    def m(self) -> int:
        return self.h_dl.entries.shape[0]

    @property
    def n(self) -> int:
        return self.h_dl.entries.shape[1]


def build_link(scenario: Scenario, link_id: int) -> Link:
    ue = scenario.ue(link_id)
    entry = scenario.plan.entry(link_id)
    ctl, c = scenario.control, scenario.constants.c
    bs_tx, bs_rx = scenario.bs.tx_geometry(), scenario.bs.rx_geometry()
    ue_tx, ue_rx = ue.tx_geometry(), ue.rx_geometry()
    h_dl = build_channel(bs_tx, ue_rx, entry.f_dl, ctl.beta, scenario.pattern, c, "DL", link_id)
    h_ul = build_channel(ue_tx, bs_rx, entry.f_ul, ctl.beta, scenario.pattern, c, "UL", link_id)
    return Link(link_id, h_dl, h_ul, ctl.alpha, ctl.gamma, ctl.p_cap_total / len(scenario.ues),
                ctl.g_pa_max, bs_tx, bs_rx, ue_tx, ue_rx)


@dataclass(frozen=True, eq=False)
class LinkState:
    bs_amplitudes: np.ndarray
    ue_amplitudes: np.ndarray | None = None
    iteration: int = 0
    last_p_bs_rx: float | None = None


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    p_bs_tx: float
    p_ue_rx: float
    p_ue_tx: float
    p_bs_rx: float
    loss: float
    gain: float
    g_pa_effective: float
    converged: bool = False

    @property
    def g_pa_db(self) -> float:
        return 10 * math.log10(self.g_pa_effective)


@dataclass(eq=False)
class ResonanceTrace:
    link_id: int
    records: list[IterationRecord]
    final_state: LinkState
    iterations_to_converge: int | None
    bs_history: list[np.ndarray] = field(default_factory=list)
    ue_history: list[np.ndarray] = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return self.iterations_to_converge is not None

    @property
    def final(self) -> IterationRecord:
        return self.records[-1]

    @property
    def steady_loss(self) -> float:
        return self.records[-1].loss

    def losses(self) -> np.ndarray:
        return np.array([r.loss for r in self.records])

    def bs_mode(self) -> np.ndarray:
        x = self.final_state.bs_amplitudes
        return x / np.linalg.norm(x)


def _power(v: np.ndarray) -> float:
    return float(np.vdot(v, v).real)


def step(link: Link, state: LinkState) -> tuple[LinkState, IterationRecord]:
    """One full round trip starting from the BS transmit amplitudes in ``state``."""
    x = state.bs_amplitudes
    y = link.h_dl.entries.T @ x
    u = conjugate_retransmit(y, 1 - link.alpha)
    z = link.h_ul.entries.T @ u
    p_tx, p_ue_rx, p_ue_tx, p_rx = _power(x), _power(y), _power(u), _power(z)
    if p_tx <= 0:
        raise DarkLinkError("link dark: BS transmits nothing")
    loss = (1 - link.gamma) * p_rx / p_tx
    if state.last_p_bs_rx:
        gain = p_tx / ((1 - link.gamma) * state.last_p_bs_rx)
    else:
        gain = math.nan
    x_next, g = bs_amplify(z, link.gamma, link.p_cap, link.g_pa_max)
    i = state.iteration + 1
    rec = IterationRecord(i, p_tx, p_ue_rx, p_ue_tx, p_rx, loss, gain, g)
    return LinkState(x_next, u, i, p_rx), rec


def run_link(link: Link, control, keep_history: bool = False, seed=None,
             init: np.ndarray | None = None) -> ResonanceTrace:
    """Iterate one link until the loss coefficient settles or ``max_iters`` is hit."""
    tol, window = control.conv_tol, control.conv_window
    seed = [control.init_seed, link.link_id] if seed is None else seed
    x0 = init if init is not None else initial_excitation(link.m, link.p_cap, control.init_phase, seed)
    state = LinkState(np.asarray(x0, dtype=complex))
    records: list[IterationRecord] = []
    bs_hist, ue_hist = [], []
    reseeded = False
    passes, prev_loss, start = 0, None, None
    while state.iteration < control.max_iters:
        try:
            new_state, rec = step(link, state)
        except DarkLinkError:
            if reseeded:
                raise
            reseeded = True
            x0 = initial_excitation(link.m, link.p_cap, "random", [control.init_seed, link.link_id, 1])
            state = replace(state, bs_amplitudes=x0, last_p_bs_rx=None)
            continue
        if keep_history:
            bs_hist.append(state.bs_amplitudes)
            ue_hist.append(new_state.ue_amplitudes)
        state = new_state
        records.append(rec)
        if prev_loss is None:
            change = math.inf
        else:
            change = abs(rec.loss - prev_loss) / max(rec.loss, EPS)
        prev_loss = rec.loss
        passes = passes + 1 if (change < tol or math.isinf(tol)) else 0
        if passes >= window:
            start = rec.iteration - window + 1
            break
    if start is not None:
        records = [replace(r, converged=True) if r.iteration >= start else r for r in records]
    return ResonanceTrace(link.link_id, records, state, start, bs_hist, ue_hist)


class ResonanceEngine:
    """Builds every link of a scenario once and runs them independently."""

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.links = {k: build_link(scenario, k) for k in scenario.link_ids}

    def step(self, link_id: int, state: LinkState) -> tuple[LinkState, IterationRecord]:
        return step(self.links[link_id], state)

    def run_link(self, link_id: int, keep_history: bool = False) -> ResonanceTrace:
        return run_link(self.links[link_id], self.scenario.control, keep_history)

    def run(self, keep_history: bool = False, workers: int = 1) -> dict[int, ResonanceTrace]:
        ids = list(self.links)
        if workers > 1 and len(ids) > 1:
            with ThreadPoolExecutor(workers) as pool:
                traces = list(pool.map(lambda k: self.run_link(k, keep_history), ids))
        else:
            traces = [self.run_link(k, keep_history) for k in ids]
        return dict(zip(ids, traces))


def run(scenario: Scenario, keep_history: bool = False, workers: int = 1) -> dict[int, ResonanceTrace]:
    return ResonanceEngine(scenario).run(keep_history, workers)
