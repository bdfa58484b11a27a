"""Deterministic time-driven simulation loop and experiment orchestration.

Tick order is fixed: mobility step, jaywalk spawn/advance, oracle update,
bandwidth allocation (inside the oracle update), radar scans, fusion, job
progress, metric capture.  Every random draw comes from a named substream
(geometry, mobility, jaywalk, membership, radar phases, jobs) derived from
the master seed with a counter-based split, so runs that differ only in fog
fraction or infrastructure participation share identical jaywalk and job
realizations (paired-seed contract), and the full experiment output is a
pure function of (config, master seed).

The oracle re-selects links every `oracle_interval_s` (default equal to the
lookahead horizon); between reselections the link set and allocations are
carried forward unchanged, which is equivalent to recomputing them over an
unchanged stream census.
"""

from __future__ import annotations

import csv
import math
import multiprocessing
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from .compute import JobSystem
from .config import ScenarioConfig
from .connectivity import Oracle
from .geometry import build_deployment, hash_label
from .mobility import JaywalkProcess, build_fleet
from .sensing import DetectionLedger, batch_radar, fuse_and_warn, judge_miss

STREAM_GEOMETRY = hash_label("geometry")
STREAM_MOBILITY = hash_label("mobility")
STREAM_JAYWALK = hash_label("jaywalk")
STREAM_MEMBERSHIP = hash_label("membership")
STREAM_RADAR = hash_label("radar-phase")
STREAM_JOBS = hash_label("jobs")

ROUND_COLUMNS = [
    "experiment", "density_veh_per_100m", "fog_fraction", "infrastructure_compute",
    "round", "vehicles", "events", "verdicts", "misses", "detections",
    "warnings", "unroutable_warnings", "blocked_vehicle_ticks",
    "jobs_issued", "jobs_completed", "jobs_on_time",
    "mean_completion_s", "mean_dispatch_s", "mean_responders",
]

SUMMARY_COLUMNS = [
    "experiment", "density_veh_per_100m", "fog_fraction", "infrastructure_compute",
    "rounds", "mean_events", "mean_verdicts", "mean_misses", "ci95_misses",
    "mean_detections", "mean_warnings", "mean_blocked_vehicle_ticks",
    "mean_jobs_issued", "mean_jobs_completed", "mean_jobs_on_time", "ci95_jobs_on_time",
    "mean_completion_s", "ci95_completion_s", "mean_dispatch_s", "mean_responders",
    "on_time_rate_pct",
]

EVENT_TRACE_COLUMNS = [
    "event_id", "spawn_time_s", "street_axis", "street_idx", "s_along_m", "side",
    "first_detection_s", "first_detector", "local_detections", "warned_vehicles",
    "verdicts", "misses",
]

JOB_TRACE_COLUMNS = [
    "job_id", "origin", "issue_s", "responder_count", "site_count",
    "dispatch_latency_s", "completion_s", "duration_s", "on_time",
]


def _substream(master_seed: int, label: int, *key: int) -> np.random.Generator:
    seq = np.random.SeedSequence(master_seed, spawn_key=(label, *key))
    return np.random.Generator(np.random.Philox(seq))


@dataclass
class MetricsRecord:
    """Per-round rows for one sweep point plus aggregate views."""

    sweep_point: dict
    rows: list[dict] = field(default_factory=list)

    def values(self, metric: str) -> np.ndarray:
        return np.array([row[metric] for row in self.rows], dtype=float)

    def mean(self, metric: str) -> float:
        vals = self.values(metric)
        vals = vals[np.isfinite(vals)]
        return float(vals.mean()) if len(vals) else float("nan")

    def ci95(self, metric: str) -> float | None:
        """Half-width of the 95% t confidence interval; None when undefined."""
        vals = self.values(metric)
        vals = vals[np.isfinite(vals)]
        n = len(vals)
        if n < 2:
            return None
        sd = float(vals.std(ddof=1))
        return float(stats.t.ppf(0.975, n - 1) * sd / math.sqrt(n))


def run_round(cfg: ScenarioConfig, density: float, fog_fraction: float,
              infrastructure: bool, round_index: int,
              collect_traces: bool = False):
    """Execute one independent simulation round; returns (row, traces)."""
    cfg.validate()
    dt = cfg.dt_s
    ticks = cfg.ticks_per_round
    dens_key = int(round(density * 1000))
    master = cfg.master_seed

    rng_mob = _substream(master, STREAM_MOBILITY, dens_key, round_index)
    rng_jay = _substream(master, STREAM_JAYWALK, round_index)
    rng_mem = _substream(master, STREAM_MEMBERSHIP, round_index)
    rng_rad = _substream(master, STREAM_RADAR, dens_key, round_index)
    rng_job = _substream(master, STREAM_JOBS, dens_key, round_index)

    deployment = build_deployment(
        cfg, np.random.SeedSequence(master, spawn_key=(STREAM_GEOMETRY,)))
    fleet = build_fleet(cfg, deployment.grid, rng_mob, density_veh_per_100m=density)
    n = fleet.n
    membership = rng_mem.random(max(n, 1))[:n] < fog_fraction
    oracle = Oracle(cfg, deployment)
    ledger = DetectionLedger(n)

    jaywalking = cfg.experiment == "jaywalk"
    computing = cfg.experiment == "compute"
    jay = JaywalkProcess(cfg, deployment.grid, rng_jay) if jaywalking else None
    jobs = JobSystem(cfg, n, rng_job) if computing else None

    radar_phase = rng_rad.random(n) * cfg.radar_cycle_s
    radar_next = radar_phase.copy()
    cycle = cfg.radar_cycle_s
    half_len = cfg.vehicle_length_m / 2.0
    half_wid = cfg.vehicle_width_m / 2.0
    oracle_every = max(1, int(round(cfg.oracle_interval_s / dt)))
    ids = np.arange(n)
    blocked_vehicle_ticks = 0

    for i in range(ticks):
        t = i * dt
        fleet.step(dt, rng_mob)

        if jay is not None:
            spawned = jay.step(t, dt)
            if spawned:
                fronts = fleet.front_positions(half_len)
                for ev in spawned:
                    ledger.register_event(ev)
                    ped = jay.position_xy(ev, ev.spawn_time)
                    d = np.hypot(fronts[:, 0] - ped[0], fronts[:, 1] - ped[1])
                    ev.ineligible = set(ids[d <= cfg.critical_radius_m].tolist())

        if i % oracle_every == 0:
            oracle.update(fleet, t)
        else:
            oracle.refresh_active_blockage(fleet)
        blocked_vehicle_ticks += int(oracle.vehicles_active_blocked().sum())

        if jay is not None:
            active = jay.active_events()
            if active:
                due = np.nonzero(radar_next <= t)[0]
                if len(due):
                    radar_next[due] = radar_phase[due] + (
                        np.floor((t - radar_phase[due]) / cycle) + 1.0) * cycle
                    positions = fleet.positions()
                    blockers = fleet.blocker_index(half_len, half_wid, positions=positions)
                    for ev in active:
                        if ev.spawn_time > t:
                            continue
                        ped_xy = jay.position_xy(ev, t)
                        seen = batch_radar(due, positions, ids, ped_xy, deployment,
                                           blockers, cfg.radar_range_m)
                        for v in sorted(int(v) for v in seen):
                            if ledger.record_local_detection(ev, v, t):
                                fuse_and_warn(ev, v, t, membership, oracle, ledger,
                                              cfg.warning_payload_bits)
            elif radar_next[radar_next <= t].size:
                due = radar_next <= t
                radar_next[due] = radar_phase[due] + (
                    np.floor((t - radar_phase[due]) / cycle) + 1.0) * cycle

        if jobs is not None:
            jobs.step(t, dt, membership, oracle, infrastructure)

        if jay is not None:
            for ev in jay.active_events():
                if ev.spawn_time <= t:
                    _judge_zone_entries(ev, jay, fleet, ledger, cfg, t, half_len)

    row = {
        "experiment": cfg.experiment,
        "density_veh_per_100m": density,
        "fog_fraction": fog_fraction,
        "infrastructure_compute": int(infrastructure),
        "round": round_index,
        "vehicles": n,
        "events": len(jay.events) if jay else 0,
        "verdicts": ledger.verdict_count(),
        "misses": ledger.misses(),
        "detections": ledger.detections_total,
        "warnings": ledger.warnings_delivered,
        "unroutable_warnings": ledger.unroutable_warnings,
        "blocked_vehicle_ticks": blocked_vehicle_ticks,
        "jobs_issued": 0, "jobs_completed": 0, "jobs_on_time": 0,
        "mean_completion_s": float("nan"),
        "mean_dispatch_s": float("nan"),
        "mean_responders": float("nan"),
    }
    if jobs is not None:
        row.update(jobs.summarize(cfg.job_deadline_s))

    traces = None
    if collect_traces:
        traces = (_event_trace_rows(jay, ledger) if jay else [],
                  _job_trace_rows(jobs, cfg.job_deadline_s) if jobs else [])
    return row, traces


def _judge_zone_entries(ev, jay: JaywalkProcess, fleet, ledger: DetectionLedger,
                        cfg: ScenarioConfig, t: float, half_len: float) -> None:
    """Issue verdicts for threatened vehicles entering the critical zone now."""
    host = (fleet.axis == ev.street_axis) & (fleet.street == ev.street_idx)
    if not host.any():
        return
    idx = np.nonzero(host)[0]
    ped_lat = jay.lateral(ev, t)
    veh_lat = fleet.lateral_offsets()[idx]
    lane_match = np.abs(veh_lat - ped_lat) <= cfg.threat_lane_margin_m
    if not lane_match.any():
        return
    idx = idx[lane_match]
    s_front = fleet.s[idx] + fleet.direction[idx] * half_len
    approaching = fleet.direction[idx] * (ev.s_along - s_front) > 0
    idx = idx[approaching]
    if len(idx) == 0:
        return
    ped_xy = jay.position_xy(ev, t)
    fronts = fleet.front_positions(half_len)[idx]
    dist = np.hypot(fronts[:, 0] - ped_xy[0], fronts[:, 1] - ped_xy[1])
    entering = idx[dist <= cfg.critical_radius_m]
    for v in entering.tolist():
        if v in ev.verdicts or v in ev.ineligible:
            continue
        judge_miss(ev, v, t, ledger)


def _event_trace_rows(jay: JaywalkProcess, ledger: DetectionLedger) -> list[dict]:
    rows = []
    for ev in jay.events:
        first_t, first_v = ev.first_detection if ev.first_detection else (float("nan"), -1)
        rows.append({
            "event_id": ev.event_id,
            "spawn_time_s": ev.spawn_time,
            "street_axis": ev.street_axis,
            "street_idx": ev.street_idx,
            "s_along_m": ev.s_along,
            "side": ev.side,
            "first_detection_s": first_t,
            "first_detector": first_v,
            "local_detections": len(ev.local_detections),
            "warned_vehicles": len(ev.warnings),
            "verdicts": len(ev.verdicts),
            "misses": sum(1 for _, missed in ev.verdicts.values() if missed),
        })
    return rows


def _job_trace_rows(jobs: JobSystem, deadline_s: float) -> list[dict]:
    rows = []
    for job in jobs.jobs:
        duration = job.duration()
        rows.append({
            "job_id": job.job_id,
            "origin": job.origin,
            "issue_s": job.issue_t,
            "responder_count": len(job.responders),
            "site_count": len(job.responder_sites),
            "dispatch_latency_s": job.dispatch_latency_s,
            "completion_s": job.completion_t if job.completion_t is not None else float("nan"),
            "duration_s": duration if duration is not None else float("nan"),
            "on_time": int(duration is not None and duration <= deadline_s),
        })
    return rows


# ---------------------------------------------------------------------------
# experiment sweeps


def sweep_points(cfg: ScenarioConfig) -> list[tuple[float, float, bool]]:
    """(density, fog fraction, infrastructure) tuples for the experiment."""
    if cfg.experiment == "jaywalk":
        return [(d, f, False) for d in cfg.jaywalk_densities for f in cfg.fog_fractions]
    return [(cfg.compute_density_veh_per_100m, f, infra)
            for infra in (False, True) for f in cfg.fog_fractions]


def _round_task(args):
    cfg_dict, density, fog, infra, round_index, traces = args
    cfg = ScenarioConfig.from_dict(cfg_dict)
    row, trace = run_round(cfg, density, fog, infra, round_index, collect_traces=traces)
    return row, trace


def run_experiment(cfg: ScenarioConfig, out_dir: str | Path,
                   collect_traces: bool = False,
                   points: list[tuple[float, float, bool]] | None = None) -> list[dict]:
    """Run the configured sweep, write per-point and summary CSVs.

    Returns the summary rows.  Rounds use seeds derived from (master seed,
    sweep point, round index); output is byte-identical across reruns and
    independent of the worker count.
    """
    cfg.validate()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if points is None:
        points = sweep_points(cfg)

    tasks = [
        (cfg.to_dict(), density, fog, infra, r, collect_traces)
        for (density, fog, infra) in points
        for r in range(cfg.rounds)
    ]
    if cfg.workers > 1 and len(tasks) > 1:
        with multiprocessing.Pool(cfg.workers) as pool:
            results = pool.map(_round_task, tasks, chunksize=1)
    else:
        results = [_round_task(t) for t in tasks]

    records: list[MetricsRecord] = []
    cursor = 0
    for (density, fog, infra) in points:
        record = MetricsRecord(sweep_point={
            "density": density, "fog_fraction": fog, "infrastructure": infra})
        point_traces = ([], [])
        for r in range(cfg.rounds):
            row, trace = results[cursor]
            cursor += 1
            record.rows.append(row)
            if trace is not None:
                point_traces[0].extend(trace[0])
                point_traces[1].extend(trace[1])
        records.append(record)
        stem = _point_stem(cfg.experiment, density, fog, infra)
        _write_csv(out / f"rounds_{stem}.csv", ROUND_COLUMNS, record.rows)
        if collect_traces:
            if point_traces[0]:
                _write_csv(out / f"events_{stem}.csv", EVENT_TRACE_COLUMNS, point_traces[0])
            if point_traces[1]:
                _write_csv(out / f"jobs_{stem}.csv", JOB_TRACE_COLUMNS, point_traces[1])

    summary = summarize_records(cfg, records)
    _write_csv(out / f"summary_{cfg.experiment}.csv", SUMMARY_COLUMNS, summary)
    cfg.save_toml(out / "effective_config.toml")
    return summary


def summarize_records(cfg: ScenarioConfig, records: list[MetricsRecord]) -> list[dict]:
    baseline_on_time: dict[tuple, float] = {}
    for rec in records:
        if rec.sweep_point["fog_fraction"] == 0.0:
            key = (rec.sweep_point["density"], rec.sweep_point["infrastructure"])
            baseline_on_time[key] = rec.mean("jobs_on_time")
    summary = []
    for rec in records:
        p = rec.sweep_point
        base = baseline_on_time.get((p["density"], p["infrastructure"]), float("nan"))
        fog_on_time = rec.mean("jobs_on_time")
        if base and np.isfinite(base) and base > 0:
            rate_pct = 100.0 * fog_on_time / base
        else:
            rate_pct = float("nan")
        summary.append({
            "experiment": cfg.experiment,
            "density_veh_per_100m": p["density"],
            "fog_fraction": p["fog_fraction"],
            "infrastructure_compute": int(p["infrastructure"]),
            "rounds": len(rec.rows),
            "mean_events": rec.mean("events"),
            "mean_verdicts": rec.mean("verdicts"),
            "mean_misses": rec.mean("misses"),
            "ci95_misses": rec.ci95("misses"),
            "mean_detections": rec.mean("detections"),
            "mean_warnings": rec.mean("warnings"),
            "mean_blocked_vehicle_ticks": rec.mean("blocked_vehicle_ticks"),
            "mean_jobs_issued": rec.mean("jobs_issued"),
            "mean_jobs_completed": rec.mean("jobs_completed"),
            "mean_jobs_on_time": fog_on_time,
            "ci95_jobs_on_time": rec.ci95("jobs_on_time"),
            "mean_completion_s": rec.mean("mean_completion_s"),
            "ci95_completion_s": rec.ci95("mean_completion_s"),
            "mean_dispatch_s": rec.mean("mean_dispatch_s"),
            "mean_responders": rec.mean("mean_responders"),
            "on_time_rate_pct": rate_pct,
        })
    return summary


def _point_stem(experiment: str, density: float, fog: float, infra: bool) -> str:
    return f"{experiment}_d{density:g}_f{fog:g}_i{int(infra)}"


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        if not math.isfinite(value):
            return ""
        return repr(value)
    return str(value)


def _write_csv(path: Path, columns: list[str], rows: list[dict]) -> None:
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_format_cell(row.get(col)) for col in columns])
