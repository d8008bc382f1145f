"""Power density, field strength, efficiency, noise, SNR and spectral efficiency."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .scenario import ControlParams, PhysicalConstants

NEG_INF_DB = -math.inf


@dataclass(frozen=True)
class NoiseModel:
    sigma_sq: float  # kappa*T*B*F_n, W
    kappa: float
    temperature: float
    bandwidth: float
    noise_figure: float  # linear
    z0: float

    @property
    def sigma_sq_field(self) -> float:
        """Variance with the 2*Z0 field-amplitude factor (V^2)."""
        return 2 * self.z0 * self.sigma_sq

    @property
    def thermal(self) -> float:
        """kappa*T*B without the noise figure."""
        return self.kappa * self.temperature * self.bandwidth


@dataclass(frozen=True)
class FieldQuantities:
    power_density: np.ndarray | float
    aperture: np.ndarray | float
    efield: np.ndarray | float


@dataclass(frozen=True)
class LinkMetrics:
    link_id: int
    eta_dl: float
    eta_ul: float
    snr_dl_db: float
    snr_ul_db: float
    se_dl: float
    se_ul: float
    p_harvested: float


def effective_aperture(gain, wavelength):
    if np.any(np.asarray(gain) <= 0) or np.any(np.asarray(wavelength) <= 0):
        raise ValueError("gain and wavelength must be > 0")
    return gain * wavelength**2 / (4 * math.pi)


def power_density_from_rx(p_rx_element, aperture):
    a = np.asarray(aperture, dtype=float)
    if np.any(a <= 0):
        raise ValueError("aperture must be > 0")
    out = np.asarray(p_rx_element, dtype=float) / a
    return out if out.ndim else float(out)


def efield_from_density(s, z0: float = 377.0):
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise ValueError("power density must be >= 0")
    out = np.sqrt(2 * z0 * s)
    return out if out.ndim else float(out)


def field_quantities(p_rx_element, gain, wavelength, z0: float = 377.0) -> FieldQuantities:
    a = effective_aperture(gain, wavelength)
    s = power_density_from_rx(p_rx_element, a)
    return FieldQuantities(s, a, efield_from_density(s, z0))


def noise_variance(constants: PhysicalConstants, control: ControlParams) -> NoiseModel:
    f_n = control.noise_figure
    sigma = constants.kappa * constants.temperature * control.bandwidth * f_n
    return NoiseModel(sigma, constants.kappa, constants.temperature, control.bandwidth, f_n, constants.z0)


def snr(signal_power_total: float, element_count: int, tap: float, noise: NoiseModel) -> float:
    """Per-element-averaged SNR in dB; ``-inf`` when nothing is tapped."""
    if element_count < 1:
        raise ValueError("element_count must be >= 1")
    lin = tap * signal_power_total / (element_count * noise.sigma_sq)
    if lin <= 0:
        return NEG_INF_DB
    return 10 * math.log10(lin)


def spectral_efficiency(snr_db: float, delta_db: float = 3.0) -> float:
    if snr_db == -math.inf:
        return 0.0
    return math.log2(1 + 10 ** (0.1 * (snr_db - delta_db)))


def efficiencies(finals) -> tuple[float, float]:
    """Aggregate DL and UL efficiency over links from their final iteration records."""
    finals = list(finals)
    p_bs_tx = sum(r.p_bs_tx for r in finals)
    p_ue_tx = sum(r.p_ue_tx for r in finals)
    if p_bs_tx <= 0 or p_ue_tx <= 0:
        raise ZeroDivisionError("total transmit power is zero")
    eta_dl = sum(r.p_ue_rx for r in finals) / p_bs_tx
    eta_ul = sum(r.p_bs_rx for r in finals) / p_ue_tx
    return eta_dl, eta_ul


def link_metrics(rec, link_id: int, m: int, n: int, constants: PhysicalConstants,
                 control: ControlParams, noise: NoiseModel | None = None) -> LinkMetrics:
    noise = noise or noise_variance(constants, control)
    eta_dl, eta_ul = efficiencies([rec])
    snr_dl = snr(rec.p_ue_rx, n, 1 - control.alpha, noise)
    snr_ul = snr(rec.p_bs_rx, m, control.gamma, noise)
    return LinkMetrics(link_id, eta_dl, eta_ul, snr_dl, snr_ul,
                       spectral_efficiency(snr_dl, control.delta_db),
                       spectral_efficiency(snr_ul, control.delta_db),
                       control.alpha * rec.p_ue_rx)


def scenario_metrics(scenario, traces) -> dict[int, LinkMetrics]:
    noise = noise_variance(scenario.constants, scenario.control)
    m = scenario.bs.n_elements
    return {k: link_metrics(t.final, k, m, scenario.ue(k).n_elements, scenario.constants,
                            scenario.control, noise)
            for k, t in traces.items()}
