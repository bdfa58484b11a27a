"""fogfleet: system-level simulator of a collaborative mmWave vehicle fleet.

Library layout mirrors the subsystems: `geometry` (world + line of sight),
`channel` (link budget), `mobility` (fleet + jaywalk process), `connectivity`
(oracle, routing, bandwidth), `sensing` (radar, warnings, misses), `compute`
(fog offloading), `engine` (rounds, sweeps, CSV outputs), `cli`.
"""

from .channel import LinkBudget, RadioParams, capacity_bps, pathloss_umi, snr_db
from .compute import ComputeJob, FogNodeCapacity, discover_responders, execute_job, on_time_rate
from .config import ConfigError, ScenarioConfig, paper_scale
from .connectivity import Oracle, Route, allocate_bandwidth, predict_blockage
from .engine import MetricsRecord, run_experiment, run_round, sweep_points
from .geometry import (
    BoxObstacle,
    Deployment,
    LosState,
    Point3,
    StreetGrid,
    build_deployment,
    los_state,
)
from .mobility import Fleet, JaywalkEvent, JaywalkProcess, build_fleet, step_vehicles
from .sensing import DetectionLedger, fuse_and_warn, judge_miss, radar_scan

__version__ = "0.1.0"

__all__ = [
    "BoxObstacle", "ComputeJob", "ConfigError", "Deployment", "DetectionLedger",
    "Fleet", "FogNodeCapacity", "JaywalkEvent", "JaywalkProcess", "LinkBudget",
    "LosState", "MetricsRecord", "Oracle", "Point3", "RadioParams", "Route",
    "ScenarioConfig", "StreetGrid", "allocate_bandwidth", "build_deployment",
    "build_fleet", "capacity_bps", "discover_responders", "execute_job",
    "fuse_and_warn", "judge_miss", "los_state", "on_time_rate", "paper_scale",
    "pathloss_umi", "predict_blockage", "radar_scan", "run_experiment",
    "run_round", "snr_db", "step_vehicles", "sweep_points",
]
