"""Fog compute offloading: responder discovery, shared execution, metrics.

A tagged subset of vehicles generates fixed-size jobs (Poisson arrivals).
When the origin participates in the fog, every fog-member vehicle (and, with
infrastructure participation enabled, every base-station site) whose
round-trip route latency fits the response window joins the responder pool;
otherwise the origin computes alone.  Dispatch costs the slowest responder's
one-way latency, then the pool works in parallel; every node divides its
capacity equally among the jobs it is currently serving, so aggregate
consumption never exceeds the node's rating.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import ScenarioConfig
from .connectivity import Oracle


@dataclass
class FogNodeCapacity:
    node: int
    rate_flops: float
    divisor: int = 1

    @property
    def effective_rate(self) -> float:
        return self.rate_flops / max(self.divisor, 1)


@dataclass
class ComputeJob:
    job_id: int
    origin: int
    issue_t: float
    flops: float
    responders: tuple[int, ...]          # vehicle ids, origin included
    responder_sites: tuple[int, ...]     # BS site indices
    dispatch_latency_s: float
    remaining_flops: float = 0.0
    completion_t: float | None = None

    def __post_init__(self):
        if self.flops < 0:
            raise ValueError("flops must be >= 0")
        self.remaining_flops = self.flops

    @property
    def dispatch_done_t(self) -> float:
        return self.issue_t + self.dispatch_latency_s

    def duration(self) -> float | None:
        if self.completion_t is None:
            return None
        return self.completion_t - self.issue_t


def discover_responders(origin: int, membership: np.ndarray, oracle: Oracle,
                        cfg: ScenarioConfig, infrastructure: bool,
                        ) -> tuple[tuple[int, ...], tuple[int, ...], float]:
    """Responder pool for one job: (vehicle ids, site ids, dispatch latency).

    Only fog-member origins offload; the pool keeps nodes whose round-trip
    route latency (job payload included) fits the response window.  The
    origin always responds to itself at zero latency.
    """
    if not membership[origin]:
        return (origin,), (), 0.0
    window = cfg.response_window_s
    lat = oracle.latencies_from(origin, cfg.job_payload_bits)
    vehicles = [origin]
    worst = 0.0
    member_ids = np.nonzero(membership)[0]
    for v in member_ids:
        if v == origin:
            continue
        l = lat[v]
        if np.isfinite(l) and 2.0 * l <= window:
            vehicles.append(int(v))
            worst = max(worst, float(l))
    sites: list[int] = []
    if infrastructure:
        for site in range(oracle.n_sites):
            sec_nodes = [oracle.sector_node(s) for s in range(oracle.n_sectors)
                         if oracle.sector_site[s] == site]
            l = min((lat[sn] for sn in sec_nodes), default=np.inf)
            if np.isfinite(l) and 2.0 * l <= window:
                sites.append(site)
                worst = max(worst, float(l))
    return tuple(sorted(vehicles)), tuple(sites), worst


def admit_responders(origin: int, membership: np.ndarray, oracle: Oracle,
                     cfg: ScenarioConfig, infrastructure: bool,
                     ) -> tuple[tuple[int, ...], tuple[int, ...], float]:
    """Proximity- and window-filtered responders, congestion-truncated.

    Offload requests go to fog members in radio proximity (at most
    `responder_max_hops` route hops) whose quoted round-trip latency fits
    the response window; they then join in latency order only while the
    dispatch under max-min link sharing still fits the window: a node that
    cannot receive its share of the request in time has not responded in
    time, however fast its empty-network quote.
    """
    if not membership[origin]:
        return (origin,), (), 0.0
    window = cfg.response_window_s
    payload = cfg.job_payload_bits
    max_hops = cfg.responder_max_hops
    lat = oracle.latencies_from(origin, payload)
    hops = oracle.graph_hops_from(origin)
    candidates: list[tuple[float, int, int]] = []   # (quote, kind, id)
    for v in np.nonzero(membership)[0]:
        if v == origin:
            continue
        l = lat[v]
        if np.isfinite(l) and 2.0 * l <= window and hops[v] <= max_hops:
            candidates.append((float(l), 0, int(v)))
    if infrastructure:
        for site in range(oracle.n_sites):
            best = np.inf
            for s in range(oracle.n_sectors):
                if oracle.sector_site[s] == site:
                    node = oracle.sector_node(s)
                    if hops[node] <= max_hops:
                        best = min(best, lat[node])
            if np.isfinite(best) and 2.0 * best <= window:
                candidates.append((float(best), 1, site))
    # vehicle responders (5 TFLOPS each) outrank infrastructure (a shared
    # 3 TFLOPS); sites fill the link budget the vehicle streams leave free
    candidates.sort(key=lambda c: (c[1], c[0], c[2]))

    vehicles = [origin]
    sites: list[int] = []
    dispatch = 0.0
    for _, kind, ident in candidates:
        trial_v = vehicles + [ident] if kind == 0 else vehicles
        trial_s = sites + [ident] if kind == 1 else sites
        trial_dispatch = dispatch_latency_shared(origin, trial_v, trial_s, oracle, payload)
        if 2.0 * trial_dispatch > window:
            continue  # this stream would congest past the window; others may still fit
        vehicles, sites, dispatch = trial_v, trial_s, trial_dispatch
    return tuple(sorted(vehicles)), tuple(sorted(sites)), dispatch


def dispatch_latency_shared(origin: int, vehicles, sites, oracle: Oracle,
                            payload_bits: float) -> float:
    """Dispatch latency when the job's streams share links max-min.

    Each responder receives the request payload over its widest route; hops
    used by several of this job's streams divide their capacity equally, so
    per-sector (and per-link) allocation never exceeds the fog slice.
    Returns the slowest responder's adjusted one-way latency.
    """
    paths = []
    usage: dict[tuple[int, int], int] = {}
    for dst in vehicles:
        if dst == origin:
            continue
        pc = oracle.path_with_caps(origin, dst)
        if pc is None:
            continue
        nodes, caps = pc
        paths.append(list(zip(nodes[:-1], nodes[1:], caps)))
    for site in sites:
        hops = _site_stream_path(origin, site, oracle, payload_bits)
        if hops is not None:
            paths.append(hops)
    for hops in paths:
        for u, v, _ in hops:
            key = (u, v) if u < v else (v, u)
            usage[key] = usage.get(key, 0) + 1
    worst = 0.0
    for hops in paths:
        lat = 0.0
        for u, v, cap in hops:
            key = (u, v) if u < v else (v, u)
            share = cap / usage[key]
            lat += oracle.fwd_delay + payload_bits / share
        worst = max(worst, lat)
    return worst


def _site_stream_path(origin: int, site: int, oracle: Oracle, payload_bits: float):
    """Hop list for the origin-to-site request stream.

    Prefers the origin's own sector link (a dedicated radio edge); without
    one, falls back to the widest route to the site's fastest sector.
    """
    best_direct = None
    for slot in range(oracle.link_peer.shape[1]):
        peer = int(oracle.link_peer[origin, slot])
        if peer < oracle.n_vehicles:
            continue
        if int(oracle.sector_site[peer - oracle.n_vehicles]) != site:
            continue
        cap = float(oracle.link_cap[origin, slot])
        if cap > 0 and (best_direct is None or cap > best_direct[1]):
            best_direct = (peer, cap)
    if best_direct is not None:
        return [(origin, best_direct[0], best_direct[1])]
    best = None
    for s in range(oracle.n_sectors):
        if oracle.sector_site[s] != site:
            continue
        lat = oracle.route_latency(origin, oracle.sector_node(s), payload_bits)
        if lat is not None and (best is None or lat < best[0]):
            best = (lat, oracle.sector_node(s))
    if best is None:
        return None
    pc = oracle.path_with_caps(origin, best[1])
    if pc is None:
        return None
    nodes, caps = pc
    return list(zip(nodes[:-1], nodes[1:], caps))


def execute_job(flops: float, responder_rates, dispatch_latency_s: float = 0.0) -> float:
    """Analytic completion time: dispatch + flops / pooled rate.

    Holds exactly when responder shares stay constant for the job's lifetime
    (the tick-wise engine reproduces it in that regime).
    """
    rates = np.asarray(responder_rates, dtype=float)
    if rates.size == 0 or rates.sum() <= 0:
        raise ValueError("responder set must provide positive capacity")
    if flops < 0:
        raise ValueError("flops must be >= 0")
    return dispatch_latency_s + flops / float(rates.sum())


def on_time_rate(fog_on_time: int, baseline_on_time: int) -> float | None:
    """Fog on-time completions relative to the standalone baseline, percent.

    None (undefined) when the baseline completed nothing on time.
    """
    if baseline_on_time <= 0:
        return None
    return 100.0 * fog_on_time / baseline_on_time


class JobSystem:
    """Per-round job generation and tick-wise shared execution."""

    def __init__(self, cfg: ScenarioConfig, n_vehicles: int, rng: np.random.Generator):
        self.cfg = cfg
        self.rng = rng
        self.n_vehicles = n_vehicles
        n_origins = int(round(cfg.job_origin_fraction * n_vehicles))
        if cfg.job_origin_fraction > 0 and n_vehicles > 0:
            n_origins = max(n_origins, 1)
        self.origins = np.sort(rng.permutation(n_vehicles)[:n_origins])
        self.next_arrival = np.full(len(self.origins), np.inf)
        if cfg.job_rate_hz > 0:
            for i in range(len(self.origins)):
                self.next_arrival[i] = rng.exponential(1.0 / cfg.job_rate_hz)
        self.jobs: list[ComputeJob] = []
        self.active: list[ComputeJob] = []
        self._next_id = 0
        self._responder_cache: dict[int, tuple] = {}
        self._cache_epoch = -1.0

    def _spawn(self, origin: int, t: float, membership: np.ndarray, oracle: Oracle,
               infrastructure: bool) -> None:
        if oracle.t_updated != self._cache_epoch:
            self._responder_cache.clear()
            self._cache_epoch = oracle.t_updated
        cached = self._responder_cache.get(origin)
        if cached is None:
            cached = admit_responders(origin, membership, oracle, self.cfg, infrastructure)
            self._responder_cache[origin] = cached
        vehicles, sites, worst_latency = cached
        job = ComputeJob(
            job_id=self._next_id,
            origin=origin,
            issue_t=t,
            flops=self.cfg.job_flops,
            responders=vehicles,
            responder_sites=sites,
            dispatch_latency_s=worst_latency,
        )
        self._next_id += 1
        self.jobs.append(job)
        self.active.append(job)

    def step(self, t: float, dt: float, membership: np.ndarray, oracle: Oracle,
             infrastructure: bool) -> None:
        """Spawn due jobs, then advance execution with equal-share divisors."""
        rate_hz = self.cfg.job_rate_hz
        for i, origin in enumerate(self.origins):
            while self.next_arrival[i] <= t + dt:
                self._spawn(int(origin), float(self.next_arrival[i]), membership,
                            oracle, infrastructure)
                self.next_arrival[i] += self.rng.exponential(1.0 / rate_hz)

        if not self.active:
            return
        # allocate: per-node divisor counts jobs in execution this tick
        veh_div = np.zeros(self.n_vehicles, dtype=np.int64)
        site_div = np.zeros(max(oracle.n_sites, 1), dtype=np.int64)
        for job in self.active:
            if job.dispatch_done_t >= t + dt:
                continue
            for v in job.responders:
                veh_div[v] += 1
            for s in job.responder_sites:
                site_div[s] += 1
        # then advance
        still_active = []
        for job in self.active:
            if job.dispatch_done_t >= t + dt:
                still_active.append(job)
                continue
            rate = sum(self.cfg.vehicle_flops / veh_div[v] for v in job.responders)
            rate += sum(self.cfg.bs_flops / site_div[s] for s in job.responder_sites)
            start = max(job.dispatch_done_t, t)
            exec_dt = (t + dt) - start
            work = rate * exec_dt
            if work >= job.remaining_flops and rate > 0:
                job.completion_t = start + job.remaining_flops / rate
                job.remaining_flops = 0.0
            else:
                job.remaining_flops -= work
                still_active.append(job)
        self.active = still_active

    # -- metrics ------------------------------------------------------------

    def summarize(self, deadline_s: float) -> dict:
        issued = len(self.jobs)
        done = [j for j in self.jobs if j.completion_t is not None]
        on_time = [j for j in done if j.duration() <= deadline_s]
        durations = [j.duration() for j in done]
        dispatches = [j.dispatch_latency_s for j in self.jobs]
        responders = [len(j.responders) + len(j.responder_sites) for j in self.jobs]
        return {
            "jobs_issued": issued,
            "jobs_completed": len(done),
            "jobs_on_time": len(on_time),
            "mean_completion_s": float(np.mean(durations)) if durations else float("nan"),
            "mean_dispatch_s": float(np.mean(dispatches)) if dispatches else float("nan"),
            "mean_responders": float(np.mean(responders)) if responders else float("nan"),
        }
