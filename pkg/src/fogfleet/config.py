"""Scenario configuration: every modeling parameter as a named, serializable key.

Defaults follow the deployment/radio/vehicle/pedestrian parameter set of the
urban fleet scenario (28 GHz carrier, 500 MHz fog slice, 200 m inter-site
distance, 40 km/h constant driving, 1 jaywalk per minute, ...) plus the
simulator-specific knobs (critical radius, response window, lookahead horizon,
noise figure, antenna gains, block geometry).
"""

from __future__ import annotations

import dataclasses
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib as _toml
else:
    import tomli as _toml


class ConfigError(ValueError):
    """Raised for invalid or unknown configuration values."""


@dataclass
class ScenarioConfig:
    # --- deployment geometry ---
    area_width_m: float = 240.0
    area_height_m: float = 240.0
    block_size_m: float = 100.0
    street_width_m: float = 20.0
    lanes_per_street: int = 4
    building_height_min_m: float = 15.0
    building_height_max_m: float = 45.0
    bs_isd_m: float = 200.0
    bs_height_m: float = 10.0
    bs_sectors_per_site: int = 3

    # --- mmWave radio ---
    carrier_hz: float = 28e9
    bandwidth_hz: float = 500e6
    bs_tx_power_dbm: float = 35.0
    vehicle_tx_power_dbm: float = 20.0
    bs_antenna_gain_dbi: float = 10.0
    vehicle_antenna_gain_dbi: float = 5.0
    noise_figure_db: float = 7.0
    vehicle_blockage_penalty_db: float = 20.0
    shadow_fading: bool = False

    # --- vehicles ---
    vehicle_length_m: float = 4.8
    vehicle_width_m: float = 1.8
    vehicle_height_m: float = 1.4
    antenna_mount_height_m: float = 1.4
    driving_speed_kmh: float = 40.0
    density_veh_per_100m: float = 50.0
    radar_range_m: float = 50.0
    radar_cycle_s: float = 0.066

    # --- pedestrians ---
    jaywalk_speed_kmh: float = 10.0
    jaywalk_intensity_per_min: float = 1.0
    pedestrian_height_m: float = 1.0

    # --- connectivity / oracle ---
    multiconnectivity_degree: int = 3
    proactive_reselection: bool = True
    lookahead_horizon_s: float = 0.1
    horizon_samples: int = 3
    oracle_interval_s: float = 0.1
    association_range_m: float = 200.0
    anchor_min_snr_db: float = 0.0
    candidate_neighbors: int = 10
    per_hop_forwarding_delay_s: float = 0.001
    warning_payload_bits: float = 2e3
    core_capacity_bps: float = 1e12

    # --- hazard sensing / miss criterion ---
    critical_radius_m: float = 14.0
    threat_lane_margin_m: float = 5.0

    # --- fog compute ---
    vehicle_flops: float = 5e12
    bs_flops: float = 3e12
    response_window_s: float = 0.05
    responder_max_hops: int = 1
    job_deadline_s: float = 0.25
    job_flops: float = 1e12
    job_payload_bits: float = 12e6
    job_rate_hz: float = 3.0
    job_origin_fraction: float = 0.03
    infrastructure_compute: bool = False

    # --- experiment / engine ---
    experiment: str = "jaywalk"
    fog_fraction: float = 0.0
    jaywalk_densities: list[float] = field(default_factory=lambda: [10.0, 20.0, 30.0, 40.0, 50.0])
    fog_fractions: list[float] = field(default_factory=lambda: [0.0, 0.2, 0.5, 1.0])
    compute_density_veh_per_100m: float = 20.0
    rounds: int = 10
    round_duration_s: float = 60.0
    dt_s: float = 0.01
    master_seed: int = 1
    workers: int = 1

    # Derived conveniences -------------------------------------------------

    @property
    def driving_speed_mps(self) -> float:
        return self.driving_speed_kmh / 3.6

    @property
    def jaywalk_speed_mps(self) -> float:
        return self.jaywalk_speed_kmh / 3.6

    @property
    def lane_width_m(self) -> float:
        return self.street_width_m / self.lanes_per_street

    @property
    def ticks_per_round(self) -> int:
        return int(round(self.round_duration_s / self.dt_s))

    def validate(self) -> None:
        """Raise ConfigError on any out-of-range or inconsistent value."""
        pitch = self.block_size_m + self.street_width_m
        if self.block_size_m <= 0 or self.street_width_m <= 0:
            raise ConfigError("block_size_m and street_width_m must be positive")
        if self.area_width_m < pitch or self.area_height_m < pitch:
            raise ConfigError(
                f"area must cover at least one block plus street "
                f"({pitch:.0f} m), got {self.area_width_m:.0f} x {self.area_height_m:.0f} m"
            )
        if self.area_width_m < self.bs_isd_m or self.area_height_m < self.bs_isd_m:
            raise ConfigError(
                f"area must cover at least one inter-site distance "
                f"({self.bs_isd_m:.0f} m)"
            )
        for name in ("area_width_m", "area_height_m"):
            v = getattr(self, name)
            if abs(v / pitch - round(v / pitch)) > 1e-9:
                raise ConfigError(
                    f"{name}={v:g} must be a multiple of block+street pitch ({pitch:g} m) "
                    f"so that wrap-around keeps vehicles on the grid"
                )
        if self.lanes_per_street != 4:
            raise ConfigError("lanes_per_street is fixed at 4 (two per direction)")
        if not 0 < self.building_height_min_m <= self.building_height_max_m:
            raise ConfigError("building height range must satisfy 0 < min <= max")
        for name in ("bs_tx_power_dbm", "vehicle_tx_power_dbm"):
            v = getattr(self, name)
            if not -30.0 <= v <= 50.0:
                raise ConfigError(f"{name}={v:g} outside [-30, 50] dBm")
        if self.bandwidth_hz <= 0 or self.carrier_hz <= 0:
            raise ConfigError("carrier_hz and bandwidth_hz must be positive")
        if self.density_veh_per_100m < 0 or self.compute_density_veh_per_100m < 0:
            raise ConfigError("vehicle density must be >= 0")
        if self.jaywalk_intensity_per_min < 0:
            raise ConfigError("jaywalk_intensity_per_min must be >= 0")
        if not 0.0 <= self.fog_fraction <= 1.0:
            raise ConfigError("fog_fraction must lie in [0, 1]")
        for f in self.fog_fractions:
            if not 0.0 <= f <= 1.0:
                raise ConfigError("fog_fractions entries must lie in [0, 1]")
        if not self.jaywalk_densities or not self.fog_fractions:
            raise ConfigError("sweep axes must be non-empty")
        if self.multiconnectivity_degree < 1:
            raise ConfigError("multiconnectivity_degree must be >= 1")
        if self.dt_s <= 0 or self.round_duration_s <= 0:
            raise ConfigError("dt_s and round_duration_s must be positive")
        if self.rounds < 1:
            raise ConfigError("rounds must be >= 1")
        if self.experiment not in ("jaywalk", "compute"):
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if not 0.0 <= self.job_origin_fraction <= 1.0:
            raise ConfigError("job_origin_fraction must lie in [0, 1]")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.antenna_mount_height_m <= 0 or self.bs_height_m <= 0:
            raise ConfigError("antenna heights must be positive")
        if self.horizon_samples < 1:
            raise ConfigError("horizon_samples must be >= 1")

    # Serialization ---------------------------------------------------------

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        known = {f.name: f for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - set(known))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        kwargs = {}
        for key, value in data.items():
            f = known[key]
            if f.type in ("float", float) and isinstance(value, int) and not isinstance(value, bool):
                value = float(value)
            kwargs[key] = value
        cfg = cls(**kwargs)
        cfg.validate()
        return cfg

    @classmethod
    def from_toml(cls, path: str | Path) -> "ScenarioConfig":
        with open(path, "rb") as fh:
            data = _toml.load(fh)
        return cls.from_dict(data)

    def to_toml(self) -> str:
        """Emit the full configuration as TOML, keys in declaration order."""
        lines = []
        for f in dataclasses.fields(self):
            lines.append(f"{f.name} = {_toml_value(getattr(self, f.name))}")
        return "\n".join(lines) + "\n"

    def save_toml(self, path: str | Path) -> None:
        Path(path).write_text(self.to_toml(), encoding="utf-8")

    def replace(self, **kwargs) -> "ScenarioConfig":
        cfg = dataclasses.replace(self, **kwargs)
        cfg.validate()
        return cfg


def _toml_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return repr(value)
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(value, list):
        return "[" + ", ".join(_toml_value(v) for v in value) + "]"
    raise TypeError(f"unsupported config value type: {type(value)!r}")


def paper_scale(cfg: ScenarioConfig | None = None) -> ScenarioConfig:
    """Full-scale regime: 100 independent rounds of 10 simulated minutes."""
    cfg = cfg or ScenarioConfig()
    return cfg.replace(rounds=100, round_duration_s=600.0)


def config_keys() -> list[str]:
    """All config key names, in declaration order (used by CLI help/docs)."""
    return [f.name for f in dataclasses.fields(ScenarioConfig)]
