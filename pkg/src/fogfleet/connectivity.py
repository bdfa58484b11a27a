"""Oracle-driven connectivity: link selection, routing, bandwidth division.

A centralized oracle observes every radio link.  On each update it re-selects,
for every vehicle, up to `degree` links greedily by predicted SNR over the
lookahead horizon (current SNR when proactive reselection is off), enforcing
the per-vehicle degree bound; base-station sectors accept any number of
associations.  Routes are widest paths (max bottleneck capacity, then fewest
hops) over the current link graph, with per-hop latency = forwarding delay +
payload / hop capacity.

Bandwidth is liquid: infinitely divisible among simultaneous streams by
max-min fairness subject to their rate demands (`allocate_bandwidth`).  Idle
associations are zero-bandwidth standby and demand nothing, so a lone
transfer is quoted the full fog slice; when one dispatch pushes several
streams over the same link at once, the streams split that link's capacity
equally (the max-min outcome for equal elastic demands).

Link capacities are uplink-limited: both directions of a link must carry
data (offload requests upstream, warnings both ways), so the budget closes
with the vehicle transmit power, the weaker side.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from . import channel
from .config import ScenarioConfig
from .geometry import Deployment, segments_hit_buildings_2d
from .mobility import Fleet


@dataclass(frozen=True)
class LinkInfo:
    node: int
    peer: int                 # vehicle id, or sector node id >= n_vehicles
    role: str                 # "active" for the best link, "backup" otherwise
    snr_db: float
    capacity_bps: float
    allocated_bandwidth_hz: float
    blocked: bool
    established_at: float


@dataclass(frozen=True)
class Route:
    nodes: tuple[int, ...]
    bottleneck_bps: float
    hops: int
    latency_s: float


def allocate_bandwidth(total_hz: float, demands) -> np.ndarray:
    """Max-min fair division of `total_hz` among the given demands.

    Demands are upper bounds per stream (use +inf for elastic streams); the
    water-filling level rises until the pool is spent, so equal elastic
    demands split the pool equally.
    """
    demands = np.asarray(demands, dtype=float)
    if demands.size == 0:
        return np.zeros(0)
    if (demands < 0).any():
        raise ValueError("demands must be non-negative")
    alloc = np.zeros_like(demands)
    remaining = float(total_hz)
    order = np.argsort(demands, kind="stable")
    left = len(demands)
    for idx in order:
        fair = remaining / left
        give = min(float(demands[idx]), fair)
        alloc[idx] = give
        remaining -= give
        left -= 1
    return alloc


def single_source_widest(adj: list[list[tuple[int, float]]], src: int):
    """Widest (max bottleneck, then fewest hops) routes from one node.

    Returns (bottleneck, hops, inv_cap, prev) arrays over all nodes, where
    inv_cap accumulates 1/capacity along the chosen route for payload-size
    latency terms.  Deterministic: ties resolve by hop count, then node id.
    """
    n = len(adj)
    bottleneck = np.zeros(n)
    hops = np.zeros(n, dtype=np.int64)
    inv_cap = np.zeros(n)
    prev = np.full(n, -1, dtype=np.int64)
    bottleneck[src] = np.inf
    visited = np.zeros(n, dtype=bool)
    heap = [(-np.inf, 0, src)]
    while heap:
        neg_bn, h, u = heapq.heappop(heap)
        if visited[u]:
            continue
        visited[u] = True
        bn_u = -neg_bn
        for v, cap in adj[u]:
            if visited[v] or cap <= 0.0:
                continue
            nb = min(bn_u, cap)
            nh = h + 1
            if nb > bottleneck[v] or (nb == bottleneck[v] and nh < hops[v]):
                bottleneck[v] = nb
                hops[v] = nh
                inv_cap[v] = inv_cap[u] + 1.0 / cap
                prev[v] = u
                heapq.heappush(heap, (-nb, nh, v))
    return bottleneck, hops, inv_cap, prev


def predict_blockage(a_xyz, a_vel, b_xyz, b_vel, deployment: Deployment,
                     boxes_at, horizon_s: float, n_samples: int = 5,
                     exclude_owners=()) -> bool:
    """Geometric sweep: will the a-b link be blocked within the horizon?

    Positions extrapolate linearly (trajectories are straight over the
    horizon by construction); `boxes_at(tau)` supplies the vehicle body boxes
    at +tau seconds.  True iff any sampled instant is building- or
    vehicle-blocked; horizon 0 degenerates to the current state.
    """
    from .geometry import LosState, los_state

    a = np.asarray(a_xyz, dtype=float)
    b = np.asarray(b_xyz, dtype=float)
    va = np.asarray(a_vel, dtype=float)
    vb = np.asarray(b_vel, dtype=float)
    taus = np.linspace(0.0, horizon_s, max(n_samples, 1)) if horizon_s > 0 else [0.0]
    for tau in taus:
        state = los_state(a + va * tau, b + vb * tau, deployment,
                          vehicle_boxes=boxes_at(tau), exclude_owners=exclude_owners)
        if state != LosState.CLEAR:
            return True
    return False


class Oracle:
    """Global link-state authority for one simulation round."""

    def __init__(self, cfg: ScenarioConfig, deployment: Deployment):
        self.cfg = cfg
        self.deployment = deployment
        self.radio = channel.RadioParams.from_config(cfg)
        self.sector_pos, self.sector_azi, self.sector_site = deployment.sector_table()
        self.n_sectors = len(self.sector_azi)
        self.n_sites = deployment.n_sites
        self.fwd_delay = cfg.per_hop_forwarding_delay_s
        # the 2D fast path requires rooftop-or-lower mounts and BS below rooflines
        min_bh = deployment.min_building_height()
        if cfg.bs_height_m > min_bh or cfg.antenna_mount_height_m > min_bh:
            raise ValueError(
                "fast line-of-sight path requires antenna heights at or below "
                f"the lowest building top ({min_bh:g} m)"
            )
        self._reset(0)

    def _reset(self, n_vehicles: int) -> None:
        self.n_vehicles = n_vehicles
        deg = self.cfg.multiconnectivity_degree
        self.link_peer = np.full((n_vehicles, deg), -1, dtype=np.int64)
        self.link_snr = np.full((n_vehicles, deg), -np.inf)
        self.link_pred_snr = np.full((n_vehicles, deg), -np.inf)
        self.link_cap = np.zeros((n_vehicles, deg))
        self.link_bw = np.zeros((n_vehicles, deg))
        self.link_blocked = np.zeros((n_vehicles, deg), dtype=bool)
        self.link_count = np.zeros(n_vehicles, dtype=np.int64)
        self.sector_streams = np.zeros(self.n_sectors, dtype=np.int64)
        self.adj: list[list[tuple[int, float]]] = []
        self._route_cache: dict[int, tuple] = {}
        self._bfs_cache: dict[int, np.ndarray] = {}
        self.t_updated = 0.0

    # ------------------------------------------------------------------
    # node id helpers: vehicles 0..N-1, sectors N..N+S-1, core N+S

    def sector_node(self, sector_idx: int) -> int:
        return self.n_vehicles + sector_idx

    @property
    def core_node(self) -> int:
        return self.n_vehicles + self.n_sectors

    @property
    def n_nodes(self) -> int:
        return self.n_vehicles + self.n_sectors + 1

    # ------------------------------------------------------------------

    def update(self, fleet: Fleet, t: float) -> None:
        """Re-select every vehicle's links and rebuild the routing graph."""
        cfg = self.cfg
        n = fleet.n
        if n != self.n_vehicles:
            self._reset(n)
        self.t_updated = t
        self._route_cache.clear()
        self._bfs_cache.clear()
        if n == 0:
            self._build_graph([])
            return

        pos = fleet.positions()
        mount = cfg.antenna_mount_height_m

        # --- candidate vehicle pairs (k nearest within association range)
        k = min(cfg.candidate_neighbors + 1, n)
        pairs_i = np.zeros(0, dtype=np.int64)
        pairs_j = np.zeros(0, dtype=np.int64)
        if n > 1:
            tree = cKDTree(pos)
            dist, idx = tree.query(pos, k=k)
            dist = np.atleast_2d(dist)
            idx = np.atleast_2d(idx)
            src = np.repeat(np.arange(n), k - 1)
            dst = idx[:, 1:].ravel()
            d = dist[:, 1:].ravel()
            keep = np.isfinite(d) & (d <= cfg.association_range_m) & (dst != src)
            a = np.minimum(src[keep], dst[keep])
            b = np.maximum(src[keep], dst[keep])
            if len(a):
                uniq = np.unique(a * n + b)
                pairs_i, pairs_j = uniq // n, uniq % n

        # --- candidate vehicle-sector pairs (covering sector per site, in range)
        vs_i = np.zeros(0, dtype=np.int64)
        vs_sector = np.zeros(0, dtype=np.int64)
        if self.n_sites > 0:
            site_xy = np.array([[p.x, p.y] for p, _ in self.deployment.bs_sites])
            diff = pos[:, None, :] - site_xy[None, :, :]          # (n, sites, 2)
            d_site = np.hypot(diff[..., 0], diff[..., 1])
            ang = np.degrees(np.arctan2(diff[..., 1], diff[..., 0])) % 360.0
            sec_of = ((ang + 60.0) % 360.0 // 120.0).astype(np.int64)
            vi, si = np.nonzero(d_site <= cfg.association_range_m)
            vs_i = vi.astype(np.int64)
            vs_sector = (si * 3 + sec_of[vi, si]).astype(np.int64)

        # --- predicted SNR over the lookahead horizon
        if cfg.proactive_reselection and cfg.horizon_samples > 1:
            taus = np.linspace(0.0, cfg.lookahead_horizon_s, cfg.horizon_samples)
        else:
            taus = np.array([0.0])

        vv_snr = np.full(len(pairs_i), np.inf)
        vs_snr = np.full(len(vs_i), np.inf)
        vv_snr_now = np.zeros(len(pairs_i))
        vs_snr_now = np.zeros(len(vs_i))
        vv_blocked_now = np.zeros(len(pairs_i), dtype=bool)
        vs_blocked_now = np.zeros(len(vs_i), dtype=bool)
        half_along = cfg.vehicle_length_m / 2.0
        half_cross = cfg.vehicle_width_m / 2.0
        full_bw = cfg.bandwidth_hz

        lat = fleet.lateral_offsets()
        c = fleet.street_centers()
        cross_coord = c + lat
        on_x = fleet.axis == 0
        for tau in taus:
            s_ext = fleet.s + fleet.direction * fleet.speed_mps * tau
            pt = np.empty((n, 2))
            pt[on_x, 0] = s_ext[on_x]
            pt[on_x, 1] = cross_coord[on_x]
            pt[~on_x, 1] = s_ext[~on_x]
            pt[~on_x, 0] = cross_coord[~on_x]

            if len(pairs_i):
                a_xy, b_xy = pt[pairs_i], pt[pairs_j]
                bldg = segments_hit_buildings_2d(a_xy, b_xy, self.deployment)
                if mount <= cfg.vehicle_height_m:
                    index = fleet.blocker_index(half_along, half_cross, positions=pt)
                    veh = index.blocked(a_xy, b_xy, pairs_i, pairs_j)
                else:
                    veh = np.zeros(len(pairs_i), dtype=bool)
                d2d = np.hypot(*(b_xy - a_xy).T)
                pl = channel.pathloss_umi(d2d, mount, mount, cfg.carrier_hz, bldg)
                snr = channel.snr_db(
                    cfg.vehicle_tx_power_dbm, cfg.vehicle_antenna_gain_dbi,
                    cfg.vehicle_antenna_gain_dbi, pl, full_bw, cfg.noise_figure_db,
                    vehicle_blocked=veh & ~bldg,
                    vehicle_blockage_penalty_db=cfg.vehicle_blockage_penalty_db,
                )
                vv_snr = np.minimum(vv_snr, snr)
                if tau == 0.0:
                    vv_blocked_now = bldg | veh
                    vv_snr_now = np.asarray(snr, dtype=float)

            if len(vs_i):
                a_xy = pt[vs_i]
                b_xy = self.sector_pos[vs_sector][:, :2]
                bldg = segments_hit_buildings_2d(a_xy, b_xy, self.deployment)
                d2d = np.hypot(*(b_xy - a_xy).T)
                pl = channel.pathloss_umi(d2d, cfg.bs_height_m, mount, cfg.carrier_hz, bldg)
                snr = channel.snr_db(
                    cfg.vehicle_tx_power_dbm, cfg.vehicle_antenna_gain_dbi,
                    cfg.bs_antenna_gain_dbi, pl, full_bw, cfg.noise_figure_db,
                )
                vs_snr = np.minimum(vs_snr, snr)
                if tau == 0.0:
                    vs_blocked_now = bldg.copy()
                    vs_snr_now = np.asarray(snr, dtype=float)

        # --- link matching: one slot anchors to the best sector (the oracle
        # keeps every vehicle attached to the infrastructure when feasible),
        # the rest greedy by predicted SNR; degree bound on vehicles only
        deg_cap = cfg.multiconnectivity_degree
        edge_snr = np.concatenate([vv_snr, vs_snr])
        edge_snr_now = np.concatenate([vv_snr_now, vs_snr_now])
        edge_a = np.concatenate([pairs_i, vs_i])
        edge_b = np.concatenate([pairs_j, self.n_vehicles + vs_sector])
        edge_blocked = np.concatenate([vv_blocked_now, vs_blocked_now])

        deg = np.zeros(n, dtype=np.int64)
        accepted = []
        taken = np.zeros(len(edge_a), dtype=bool)
        if len(vs_i):
            vs_order = np.lexsort((vs_sector, vs_i, -vs_snr))
            anchored = np.zeros(n, dtype=bool)
            base = len(pairs_i)
            for e in vs_order.tolist():
                a = int(vs_i[e])
                if anchored[a] or vs_snr[e] < cfg.anchor_min_snr_db:
                    continue
                anchored[a] = True
                deg[a] += 1
                accepted.append(base + e)
                taken[base + e] = True

        order = np.lexsort((edge_b, edge_a, -edge_snr))
        edge_a_l = edge_a.tolist()
        edge_b_l = edge_b.tolist()
        for e in order.tolist():
            if taken[e]:
                continue
            a, b = edge_a_l[e], edge_b_l[e]
            if deg[a] >= deg_cap:
                continue
            if b < n:
                if deg[b] >= deg_cap:
                    continue
                deg[b] += 1
            deg[a] += 1
            accepted.append(e)

        # --- bandwidth quotes: idle associations are zero-bandwidth standby,
        # so a transfer is quoted the full fog slice; concurrent streams of
        # the same dispatch instant divide a link max-min at transfer time
        # (see compute.dispatch_latency_shared).
        acc = np.asarray(accepted, dtype=np.int64)
        acc_a = edge_a[acc] if len(acc) else np.zeros(0, dtype=np.int64)
        acc_b = edge_b[acc] if len(acc) else np.zeros(0, dtype=np.int64)
        is_vs = acc_b >= n
        self.sector_streams = np.bincount(
            (acc_b[is_vs] - n), minlength=self.n_sectors).astype(np.int64)
        bw = np.full(len(acc), full_bw)
        snr_alloc = edge_snr_now[acc] if len(acc) else np.zeros(0)
        cap = channel.capacity_bps(snr_alloc, bw) if len(acc) else np.zeros(0)
        blocked_acc = edge_blocked[acc] if len(acc) else np.zeros(0, dtype=bool)

        deg_idx = np.zeros(n, dtype=np.int64)
        self.link_peer.fill(-1)
        self.link_snr.fill(-np.inf)
        self.link_pred_snr.fill(-np.inf)
        self.link_cap.fill(0.0)
        self.link_bw.fill(0.0)
        self.link_blocked.fill(False)
        pred_acc = edge_snr[acc] if len(acc) else np.zeros(0)
        edges_out = []
        for i in range(len(acc)):
            a, b = int(acc_a[i]), int(acc_b[i])
            for node, peer in ((a, b), (b, a)):
                if node >= n:
                    continue
                slot = deg_idx[node]
                self.link_peer[node, slot] = peer
                self.link_snr[node, slot] = snr_alloc[i]
                self.link_pred_snr[node, slot] = pred_acc[i]
                self.link_cap[node, slot] = cap[i]
                self.link_bw[node, slot] = bw[i]
                self.link_blocked[node, slot] = blocked_acc[i]
                deg_idx[node] += 1
            edges_out.append((a, b, float(cap[i])))
        self.link_count = deg_idx

        self._build_graph(edges_out)

    def _build_graph(self, vehicle_edges) -> None:
        adj: list[list[tuple[int, float]]] = [[] for _ in range(self.n_nodes)]
        for a, b, cap in vehicle_edges:
            adj[a].append((b, cap))
            adj[b].append((a, cap))
        core = self.core_node
        for s in range(self.n_sectors):
            node = self.sector_node(s)
            adj[node].append((core, self.cfg.core_capacity_bps))
            adj[core].append((node, self.cfg.core_capacity_bps))
        for lst in adj:
            lst.sort()
        self.adj = adj

    # ------------------------------------------------------------------
    # routing

    def _widest_from(self, src: int):
        cached = self._route_cache.get(src)
        if cached is not None:
            return cached
        result = single_source_widest(self.adj, src)
        self._route_cache[src] = result
        return result

    def route_latency(self, src: int, dst: int, payload_bits: float) -> float | None:
        """One-way latency over the widest route, or None when unroutable."""
        if src == dst:
            return 0.0
        bottleneck, hops, inv_cap, _ = self._widest_from(src)
        if bottleneck[dst] <= 0.0:
            return None
        return float(hops[dst] * self.fwd_delay + payload_bits * inv_cap[dst])

    def route(self, src: int, dst: int, payload_bits: float = 0.0) -> Route | None:
        """Full widest route with node list (contract/diagnostic helper)."""
        if src == dst:
            return Route((src,), np.inf, 0, 0.0)
        bottleneck, hops, inv_cap, prev = self._widest_from(src)
        if bottleneck[dst] <= 0.0:
            return None
        nodes = [dst]
        while nodes[-1] != src:
            nodes.append(int(prev[nodes[-1]]))
        nodes.reverse()
        latency = float(hops[dst] * self.fwd_delay + payload_bits * inv_cap[dst])
        return Route(tuple(nodes), float(bottleneck[dst]), int(hops[dst]), latency)

    def latencies_from(self, src: int, payload_bits: float) -> np.ndarray:
        """One-way latency from src to every node (inf where unroutable)."""
        bottleneck, hops, inv_cap, _ = self._widest_from(src)
        lat = hops * self.fwd_delay + payload_bits * inv_cap
        lat = np.where(bottleneck > 0.0, lat, np.inf)
        lat[src] = 0.0
        return lat

    def hops_from(self, src: int) -> np.ndarray:
        """Hop count of the widest route from src (0 where unroutable or self)."""
        bottleneck, hops, _, _ = self._widest_from(src)
        return np.where(bottleneck > 0.0, hops, 0)

    def graph_hops_from(self, src: int) -> np.ndarray:
        """Unweighted (radio-adjacency) hop distance from src to every node."""
        cached = self._bfs_cache.get(src)
        if cached is not None:
            return cached
        n = self.n_nodes
        dist = np.full(n, np.iinfo(np.int64).max, dtype=np.int64)
        dist[src] = 0
        frontier = [src]
        d = 0
        while frontier:
            d += 1
            nxt = []
            for u in frontier:
                for v, _ in self.adj[u]:
                    if dist[v] > d:
                        dist[v] = d
                        nxt.append(v)
            frontier = nxt
        self._bfs_cache[src] = dist
        return dist

    # ------------------------------------------------------------------
    # views

    def active_slots(self) -> np.ndarray:
        """Per vehicle, the slot of the link the oracle currently rates best."""
        pred = np.where(self.link_peer >= 0, self.link_pred_snr, -np.inf)
        return pred.argmax(axis=1)

    def links_of(self, vehicle: int, t: float | None = None) -> list[LinkInfo]:
        active = int(self.active_slots()[vehicle]) if self.n_vehicles else 0
        out = []
        for slot in range(self.link_peer.shape[1]):
            peer = int(self.link_peer[vehicle, slot])
            if peer < 0:
                continue
            out.append(LinkInfo(
                node=vehicle,
                peer=peer,
                role="active" if slot == active else "backup",
                snr_db=float(self.link_snr[vehicle, slot]),
                capacity_bps=float(self.link_cap[vehicle, slot]),
                allocated_bandwidth_hz=float(self.link_bw[vehicle, slot]),
                blocked=bool(self.link_blocked[vehicle, slot]),
                established_at=self.t_updated if t is None else t,
            ))
        return out

    def refresh_active_blockage(self, fleet: Fleet) -> None:
        """Re-evaluate the current blockage of every vehicle's active link.

        Runs every tick (selection and budgets refresh only on oracle
        epochs), so the blocked-tick metric and the proactive-reselection
        comparison see mid-epoch blockage as it happens.
        """
        n = self.n_vehicles
        if n == 0:
            return
        cfg = self.cfg
        slots = self.active_slots()
        idx = np.arange(n)
        peers = self.link_peer[idx, slots]
        valid = peers >= 0
        if not valid.any():
            return
        pos = fleet.positions()
        v2v = valid & (peers < n)
        vs = valid & (peers >= n)
        if v2v.any():
            i = idx[v2v]
            j = peers[v2v]
            a_xy, b_xy = pos[i], pos[j]
            bldg = segments_hit_buildings_2d(a_xy, b_xy, self.deployment)
            if cfg.antenna_mount_height_m <= cfg.vehicle_height_m:
                index = fleet.blocker_index(
                    cfg.vehicle_length_m / 2.0, cfg.vehicle_width_m / 2.0, positions=pos)
                veh = index.blocked(a_xy, b_xy, i, j)
            else:
                veh = np.zeros(len(i), dtype=bool)
            self.link_blocked[i, slots[v2v]] = bldg | veh
        if vs.any():
            i = idx[vs]
            sec_xy = self.sector_pos[peers[vs] - n][:, :2]
            bldg = segments_hit_buildings_2d(pos[i], sec_xy, self.deployment)
            self.link_blocked[i, slots[vs]] = bldg

    def vehicles_active_blocked(self) -> np.ndarray:
        """Vehicles whose currently best-rated (active) link is blocked."""
        if self.n_vehicles == 0:
            return np.zeros(0, dtype=bool)
        has = self.link_peer >= 0
        any_link = has.any(axis=1)
        slots = self.active_slots()
        idx = np.arange(self.n_vehicles)
        return any_link & self.link_blocked[idx, slots]

    def path_with_caps(self, src: int, dst: int) -> tuple[list[int], list[float]] | None:
        """Widest-route node list plus per-hop capacities (None if unroutable)."""
        if src == dst:
            return [src], []
        bottleneck, _, _, prev = self._widest_from(src)
        if bottleneck[dst] <= 0.0:
            return None
        nodes = [dst]
        while nodes[-1] != src:
            nodes.append(int(prev[nodes[-1]]))
        nodes.reverse()
        caps = []
        for u, v in zip(nodes[:-1], nodes[1:]):
            caps.append(next(c for w, c in self.adj[u] if w == v))
        return nodes, caps
