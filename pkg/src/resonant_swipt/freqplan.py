"""PLL frequency/phase algebra and FDMA sub-band overlap checks."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

import numpy as np

from .scenario import FrequencyPlan

MAX_DENOMINATOR = 10**6


@dataclass(frozen=True)
class PllConfig:
    f_ref: float
    n1: int = 1
    n2: int = 1
    f_dm: float = 0.0
    f_bm: float = 0.0  # baseband demodulation mix; not part of the retransmit path
    f_um: float = 0.0

    def __post_init__(self):
        if not self.f_ref > 0:
            raise ValueError("f_ref must be > 0")
        if self.n1 < 1 or self.n2 < 1:
            raise ValueError("dividers n1, n2 must be >= 1")

    @property
    def pivot(self) -> Fraction:
        """Sum ``f_in + f_out`` fixed by the locked loop."""
        return Fraction(self.n1, self.n2) * Fraction(self.f_ref) + Fraction(self.f_dm) + Fraction(self.f_um)


class InfeasiblePlan(ValueError):
    pass


def pll_output_frequency(cfg: PllConfig, f_in: float) -> float:
    if not f_in > 0:
        raise ValueError("f_in must be > 0")
    f_out = cfg.pivot - Fraction(f_in)
    if f_out <= 0:
        raise InfeasiblePlan(f"non-positive output frequency {float(f_out)} Hz for f_in={f_in} Hz")
    return float(f_out)


def conjugate_phase(phi_in: float) -> float:
    """``-phi_in`` wrapped to (-pi, pi]."""
    phi = math.remainder(-phi_in, 2 * math.pi)
    if phi <= -math.pi:
        phi += 2 * math.pi
    return phi


@dataclass(frozen=True)
class DividerSolution:
    n1: int
    n2: int
    achieved_f_out: float
    error_hz: float

    @property
    def ratio(self) -> Fraction:
        return Fraction(self.n1, self.n2)


class NoDividerSolution(ValueError):
    def __init__(self, msg: str, nearest: DividerSolution | None):
        super().__init__(msg)
        self.nearest = nearest


def solve_divider_product(f_in: float, f_out: float, f_dm: float, f_um: float, f_ref: float,
                          max_denominator: int = MAX_DENOMINATOR) -> DividerSolution:
    """Reduced ``n1/n2`` mapping ``f_in`` to ``f_out`` within 1 Hz.

    Uses the best rational approximation with denominator bounded by
    ``max_denominator``.
    """
    if not f_ref > 0:
        raise ValueError("f_ref must be > 0")
    target = (Fraction(f_in) + Fraction(f_out) - Fraction(f_dm) - Fraction(f_um)) / Fraction(f_ref)
    if target <= 0:
        raise NoDividerSolution("required divider ratio is not positive", None)
    ratio = target.limit_denominator(max_denominator)
    if ratio == 0:
        ratio = Fraction(1, max_denominator)
    cfg = PllConfig(f_ref, ratio.numerator, ratio.denominator, f_dm, 0.0, f_um)
    achieved = float(cfg.pivot - Fraction(f_in))
    sol = DividerSolution(ratio.numerator, ratio.denominator, achieved, abs(achieved - f_out))
    if sol.error_hz > 1.0:
        raise NoDividerSolution(
            f"no divider ratio within denominator {max_denominator} reaches {f_out} Hz; "
            f"nearest achievable {achieved} Hz", sol)
    return sol


@dataclass(frozen=True)
class Band:
    name: str
    center: float
    low: float
    high: float


@dataclass(frozen=True)
class BandPlanReport:
    bands: tuple[Band, ...]
    overlaps: tuple[tuple[str, str], ...]  # unordered pairs, names sorted within each pair

    @property
    def clean(self) -> bool:
        return not self.overlaps

    def overlap_matrix(self) -> np.ndarray:
        idx = {b.name: i for i, b in enumerate(self.bands)}
        m = np.zeros((len(self.bands), len(self.bands)), dtype=bool)
        for a, b in self.overlaps:
            m[idx[a], idx[b]] = m[idx[b], idx[a]] = True
        return m


def validate_fdma_plan(plan: FrequencyPlan, bandwidth: float | None = None) -> BandPlanReport:
    """Flag every pair of DL/UL sub-bands whose [f - B/2, f + B/2] intervals overlap.

    Touching edges do not count as overlap.
    """
    bw = plan.bandwidth if bandwidth is None else bandwidth
    bands = []
    for e in plan.entries:
        for tag, f in (("DL", e.f_dl), ("UL", e.f_ul)):
            bands.append(Band(f"{tag}{e.link_id}", f, f - bw / 2, f + bw / 2))
    overlaps = []
    for a, b in combinations(bands, 2):
        if a.low < b.high and b.low < a.high:
            overlaps.append(tuple(sorted((a.name, b.name))))
    return BandPlanReport(tuple(bands), tuple(overlaps))
