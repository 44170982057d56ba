"""Closed-form communication, mobility, energy, and latency models.

All functions are pure and stateless.  dB/dBm conversions are explicit; the
SINR is evaluated in the dB domain (received dBm minus the dBm of the
interference-plus-noise power), which is the only dimensionally consistent
composition with the log-distance path loss.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .scenario import FlightConstants, LayerProfile, Position3, RadioConstants, UavSpec

C_LIGHT_M_S = 3.0e8
REFERENCE_DISTANCE_M = 1.0
BOLTZMANN_J_K = 1.380649e-23


class LinkUnreachableError(RuntimeError):
    """Transmitting a nonzero payload over a zero-rate link."""


@dataclass(frozen=True)
class LinkBudget:
    distance_m: float
    pathloss_db: float
    sinr_db: float
    rate_bps: float


@dataclass
class EnergyBreakdown:
    compute_j: float = 0.0
    transmit_j: float = 0.0
    flight_j: float = 0.0

    @property
    def total_j(self) -> float:
        return self.compute_j + self.transmit_j + self.flight_j


@dataclass
class LatencyBreakdown:
    waiting_s: float = 0.0
    transmit_s: float = 0.0
    compute_s: float = 0.0

    @property
    def total_s(self) -> float:
        return self.waiting_s + self.transmit_s + self.compute_s


def watts_to_dbm(power_w: float) -> float:
    if power_w <= 0.0:
        return float("-inf")
    return 10.0 * math.log10(power_w / 1e-3)


def dbm_to_watts(power_dbm: float) -> float:
    return 1e-3 * 10.0 ** (power_dbm / 10.0)


def free_space_reference_db(frequency_hz: float) -> float:
    """Free-space loss at the 1 m reference distance."""
    return 20.0 * math.log10(4.0 * math.pi * frequency_hz
                             * REFERENCE_DISTANCE_M / C_LIGHT_M_S)


def pathloss_ci(distance_m: float, frequency_hz: float,
                pathloss_exponent: float, shadow_db: float = 0.0) -> float:
    """Close-in log-distance path loss in dB; shadow term supplied by caller."""
    if distance_m < REFERENCE_DISTANCE_M:
        raise ValueError(f"distance {distance_m} m below the "
                         f"{REFERENCE_DISTANCE_M} m reference")
    if frequency_hz <= 0.0:
        raise ValueError("frequency must be > 0")
    return (free_space_reference_db(frequency_hz)
            + 10.0 * pathloss_exponent * math.log10(distance_m)
            + shadow_db)


def sinr_db(tx_power_dbm: float, pathloss_db: float,
            interference_w: float, noise_w: float) -> float:
    if noise_w <= 0.0:
        raise ValueError("noise power must be > 0")
    received_dbm = tx_power_dbm - pathloss_db
    denom_dbm = watts_to_dbm(interference_w + noise_w)
    return received_dbm - denom_dbm


def link_rate(bandwidth_hz: float, sinr_value_db: float) -> float:
    """Shannon rate in bits/s."""
    if bandwidth_hz < 0.0:
        raise ValueError("bandwidth must be >= 0")
    if sinr_value_db == float("-inf"):
        return 0.0
    return bandwidth_hz * math.log2(1.0 + 10.0 ** (sinr_value_db / 10.0))


def thermal_noise_w(bandwidth_hz: float, temperature_k: float = 290.0) -> float:
    """kTB alternative to a fixed noise floor; ~1 dB above -115 dBm at 1 MHz."""
    return BOLTZMANN_J_K * temperature_k * bandwidth_hz


def link_between(sender: UavSpec, receiver_pos: Position3,
                 radio: RadioConstants, shadow_db: float = 0.0) -> LinkBudget:
    """Budget of the sender->receiver link at current formation positions."""
    d = sender.position.distance_to(receiver_pos)
    pl = pathloss_ci(d, radio.frequency_hz, radio.pathloss_exponent, shadow_db)
    s = sinr_db(watts_to_dbm(sender.tx_power_w), pl,
                radio.interference_w, radio.noise_w)
    return LinkBudget(distance_m=d, pathloss_db=pl, sinr_db=s,
                      rate_bps=link_rate(sender.bandwidth_hz, s))


def propulsion_power(speed_m_s: float, consts: FlightConstants) -> float:
    """Rotary-wing propulsion power in W at constant speed.

    Blade term + induced term + parasite term; at speed 0 this reduces to the
    sum of blade and induced powers.
    """
    if speed_m_s < 0.0:
        raise ValueError("speed must be >= 0")
    v2 = speed_m_s * speed_m_s
    blade = consts.blade_power_w * (1.0 + 3.0 * v2 / consts.tip_speed_m_s ** 2)
    v0_2 = consts.hover_induced_m_s ** 2
    induced = consts.induced_power_w * (
        math.sqrt(1.0 + v2 * v2 / (4.0 * v0_2 * v0_2)) - v2 / (2.0 * v0_2))
    parasite = 0.5 * (consts.drag_ratio * consts.air_density
                      * consts.rotor_solidity * consts.disk_area_m2
                      * speed_m_s ** 3)
    return blade + induced + parasite


def compute_energy(layers, compute_rate_hz: float, k0: float) -> float:
    """Joules to execute the layer slice at rate f: sum of k0 * f^2 * cycles."""
    if compute_rate_hz <= 0.0:
        raise ValueError("compute rate must be > 0")
    f2 = compute_rate_hz * compute_rate_hz
    return sum(k0 * f2 * l.compute_cycles for l in layers)


def compute_time(layers, compute_rate_hz: float) -> float:
    """Seconds to execute the layer slice at rate f."""
    if compute_rate_hz <= 0.0:
        raise ValueError("compute rate must be > 0")
    return sum(l.compute_cycles for l in layers) / compute_rate_hz


def transmit_time_energy(bits: float, rate_bps: float,
                         tx_power_w: float) -> tuple[float, float]:
    """(seconds, joules) to push `bits` over a link at `rate_bps`."""
    if bits == 0.0:
        return 0.0, 0.0
    if rate_bps <= 0.0:
        raise LinkUnreachableError(
            f"cannot transmit {bits} bits over a zero-rate link")
    t = bits / rate_bps
    return t, tx_power_w * t
