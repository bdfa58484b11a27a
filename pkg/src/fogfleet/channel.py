"""mmWave link budget: UMi street-canyon pathloss, SNR, Shannon capacity.

Pathloss follows TR 38.901 Table 7.4.1-1 (UMi - street canyon):

    d'_BP  = 4 * h'_tx * h'_rx * fc / c,  h' = h - 1.0 m
    PL1    = 32.4 + 21 log10(d3D) + 20 log10(fc_GHz)            (d2D <= d'_BP)
    PL2    = 32.4 + 40 log10(d3D) + 20 log10(fc_GHz)
             - 9.5 log10(d'_BP^2 + (h_tx - h_rx)^2)             (d2D >  d'_BP)
    PL_NLoS' = 35.3 log10(d3D) + 22.4 + 21.3 log10(fc_GHz) - 0.3 (h_ut - 1.5)
    PL_NLoS  = max(PL_LoS, PL_NLoS')

Vehicle bodies on the path add a flat 20 dB penalty on top of the clear-path
(LoS) loss; building blockage switches the link to the NLoS formula.  All
functions broadcast over numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import ScenarioConfig
from .geometry import LosState

SPEED_OF_LIGHT = 299_792_458.0
THERMAL_NOISE_DBM_PER_HZ = -174.0

# Shadow fading standard deviations (same 38.901 table); off by default.
SHADOW_SIGMA_LOS_DB = 4.0
SHADOW_SIGMA_NLOS_DB = 7.82

MIN_2D_DISTANCE_M = 1.0


@dataclass(frozen=True)
class RadioParams:
    carrier_hz: float = 28e9
    system_bandwidth_hz: float = 500e6
    bs_tx_power_dbm: float = 35.0
    vehicle_tx_power_dbm: float = 20.0
    bs_antenna_gain_dbi: float = 10.0
    vehicle_antenna_gain_dbi: float = 5.0
    noise_figure_db: float = 7.0
    vehicle_blockage_penalty_db: float = 20.0

    @classmethod
    def from_config(cls, cfg: ScenarioConfig) -> "RadioParams":
        return cls(
            carrier_hz=cfg.carrier_hz,
            system_bandwidth_hz=cfg.bandwidth_hz,
            bs_tx_power_dbm=cfg.bs_tx_power_dbm,
            vehicle_tx_power_dbm=cfg.vehicle_tx_power_dbm,
            bs_antenna_gain_dbi=cfg.bs_antenna_gain_dbi,
            vehicle_antenna_gain_dbi=cfg.vehicle_antenna_gain_dbi,
            noise_figure_db=cfg.noise_figure_db,
            vehicle_blockage_penalty_db=cfg.vehicle_blockage_penalty_db,
        )


def breakpoint_distance(h_tx, h_rx, carrier_hz) -> np.ndarray | float:
    """UMi breakpoint distance with 1.0 m effective environment height."""
    h_tx_eff = np.maximum(np.asarray(h_tx, dtype=float) - 1.0, 0.01)
    h_rx_eff = np.maximum(np.asarray(h_rx, dtype=float) - 1.0, 0.01)
    return 4.0 * h_tx_eff * h_rx_eff * carrier_hz / SPEED_OF_LIGHT


def pathloss_umi(d2d, h_tx, h_rx, carrier_hz, building_blocked=False):
    """UMi street-canyon pathloss in dB.

    `building_blocked` selects the NLoS branch (itself lower-bounded by the
    LoS value).  d2d below 1 m is clamped to the formula domain.
    """
    d2d = np.maximum(np.asarray(d2d, dtype=float), MIN_2D_DISTANCE_M)
    h_tx = np.asarray(h_tx, dtype=float)
    h_rx = np.asarray(h_rx, dtype=float)
    fc_ghz = carrier_hz / 1e9
    dh = h_tx - h_rx
    d3d = np.sqrt(d2d**2 + dh**2)
    d_bp = breakpoint_distance(h_tx, h_rx, carrier_hz)

    pl1 = 32.4 + 21.0 * np.log10(d3d) + 20.0 * np.log10(fc_ghz)
    pl2 = (
        32.4 + 40.0 * np.log10(d3d) + 20.0 * np.log10(fc_ghz)
        - 9.5 * np.log10(d_bp**2 + dh**2)
    )
    pl_los = np.where(d2d <= d_bp, pl1, pl2)

    h_ut = np.minimum(h_tx, h_rx)
    pl_nlos = np.maximum(
        pl_los,
        35.3 * np.log10(d3d) + 22.4 + 21.3 * np.log10(fc_ghz) - 0.3 * (h_ut - 1.5),
    )
    out = np.where(building_blocked, pl_nlos, pl_los)
    return float(out) if out.ndim == 0 else out


def shadow_sigma_db(building_blocked):
    return np.where(building_blocked, SHADOW_SIGMA_NLOS_DB, SHADOW_SIGMA_LOS_DB)


def noise_power_dbm(bandwidth_hz, noise_figure_db):
    bandwidth_hz = np.asarray(bandwidth_hz, dtype=float)
    return THERMAL_NOISE_DBM_PER_HZ + 10.0 * np.log10(bandwidth_hz) + noise_figure_db


def snr_db(tx_power_dbm, tx_gain_dbi, rx_gain_dbi, pathloss_db,
           bandwidth_hz, noise_figure_db, vehicle_blocked=False,
           vehicle_blockage_penalty_db=20.0):
    """Link SNR over the allocated bandwidth.

    Vehicle blockage applies the flat penalty here, on top of the clear-path
    pathloss, so toggling it shifts the SNR by exactly the penalty.
    """
    penalty = np.where(vehicle_blocked, vehicle_blockage_penalty_db, 0.0)
    out = (
        tx_power_dbm + tx_gain_dbi + rx_gain_dbi
        - np.asarray(pathloss_db, dtype=float) - penalty
        - noise_power_dbm(bandwidth_hz, noise_figure_db)
    )
    return float(out) if np.ndim(out) == 0 else out


def capacity_bps(snr_db_value, bandwidth_hz):
    """Shannon capacity B * log2(1 + SNR_linear); zero bandwidth gives zero."""
    bandwidth_hz = np.asarray(bandwidth_hz, dtype=float)
    snr_lin = 10.0 ** (np.asarray(snr_db_value, dtype=float) / 10.0)
    out = bandwidth_hz * np.log2(1.0 + snr_lin)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class LinkBudget:
    distance_3d_m: float
    los: LosState
    pathloss_db: float
    snr_db: float
    allocated_bandwidth_hz: float
    capacity_bps: float


def link_budget(tx_xyz, rx_xyz, los: LosState, tx_power_dbm, tx_gain_dbi, rx_gain_dbi,
                allocated_bandwidth_hz, params: RadioParams) -> LinkBudget:
    """Close the link budget for one transmitter/receiver pair.

    A vehicle-blocked path reports the clear-path loss plus the flat penalty
    as its pathloss; a building-blocked path reports the NLoS loss.
    """
    tx = np.asarray(tx_xyz, dtype=float)
    rx = np.asarray(rx_xyz, dtype=float)
    d2d = float(np.hypot(rx[0] - tx[0], rx[1] - tx[1]))
    d3d = float(np.linalg.norm(rx - tx))
    pl = float(pathloss_umi(d2d, tx[2], rx[2], params.carrier_hz,
                            building_blocked=(los == LosState.BUILDING_BLOCKED)))
    if los == LosState.VEHICLE_BLOCKED:
        pl += params.vehicle_blockage_penalty_db
    snr = snr_db(
        tx_power_dbm, tx_gain_dbi, rx_gain_dbi, pl,
        allocated_bandwidth_hz, params.noise_figure_db,
    )
    return LinkBudget(
        distance_3d_m=d3d,
        los=los,
        pathloss_db=pl,
        snr_db=float(snr),
        allocated_bandwidth_hz=float(allocated_bandwidth_hz),
        capacity_bps=float(capacity_bps(snr, allocated_bandwidth_hz)),
    )
