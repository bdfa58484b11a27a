"""World geometry: Manhattan street grid, box obstacles, line-of-sight queries.

Two query routes are provided on purpose:

* :func:`los_state` is the exact reference: a 3D slab segment/AABB test with
  inclusive box surfaces and exclusive segment endpoints.
* :class:`BlockerIndex2D` is the vectorized runtime path used by the engine.
  It exploits the fact that with rooftop-mounted transceivers every query
  segment stays below building tops and at-or-below vehicle roof level, so
  blockage reduces to 2D segment/rectangle crossings.  Both routes agree and
  are cross-checked in the test suite.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .config import ScenarioConfig


class LosState(enum.Enum):
    CLEAR = "clear"
    BUILDING_BLOCKED = "building_blocked"
    VEHICLE_BLOCKED = "vehicle_blocked"


class BoxKind(enum.Enum):
    BUILDING = "building"
    VEHICLE_BODY = "vehicle_body"


@dataclass(frozen=True)
class Point3:
    x: float
    y: float
    z: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.z)):
            raise ValueError("coordinates must be finite")
        if self.z < 0:
            raise ValueError("z must be >= 0")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)


def as_point(p) -> Point3:
    if isinstance(p, Point3):
        return p
    return Point3(float(p[0]), float(p[1]), float(p[2]))


@dataclass(frozen=True)
class BoxObstacle:
    center: Point3
    half_extents: tuple[float, float, float]
    kind: BoxKind
    owner: int = -1  # vehicle id for VEHICLE_BODY boxes

    def __post_init__(self):
        if min(self.half_extents) <= 0:
            raise ValueError("half extents must be positive")

    @property
    def lo(self) -> np.ndarray:
        return self.center.as_array() - np.asarray(self.half_extents)

    @property
    def hi(self) -> np.ndarray:
        return self.center.as_array() + np.asarray(self.half_extents)


def vehicle_body_box(center_xy, along_axis: int, cfg: ScenarioConfig, owner: int = -1) -> BoxObstacle:
    """Axis-aligned body box for a vehicle travelling along grid axis 0 (x) or 1 (y)."""
    hl = cfg.vehicle_length_m / 2.0
    hw = cfg.vehicle_width_m / 2.0
    hh = cfg.vehicle_height_m / 2.0
    half = (hl, hw, hh) if along_axis == 0 else (hw, hl, hh)
    center = Point3(float(center_xy[0]), float(center_xy[1]), hh)
    return BoxObstacle(center, half, BoxKind.VEHICLE_BODY, owner=owner)


# ---------------------------------------------------------------------------
# Street grid and deployment


@dataclass(frozen=True)
class StreetGrid:
    width_m: float
    height_m: float
    block_size_m: float
    street_width_m: float
    lanes_per_street: int

    @property
    def pitch(self) -> float:
        return self.block_size_m + self.street_width_m

    @property
    def n_streets_x(self) -> int:
        """Number of vertical (north-south) streets."""
        return int(round(self.width_m / self.pitch))

    @property
    def n_streets_y(self) -> int:
        """Number of horizontal (east-west) streets."""
        return int(round(self.height_m / self.pitch))

    @property
    def centers_x(self) -> np.ndarray:
        return np.arange(self.n_streets_x) * self.pitch + self.street_width_m / 2.0

    @property
    def centers_y(self) -> np.ndarray:
        return np.arange(self.n_streets_y) * self.pitch + self.street_width_m / 2.0

    @property
    def lane_width(self) -> float:
        return self.street_width_m / self.lanes_per_street

    def lane_offset(self, axis: int, direction: int, lane: int) -> float:
        """Signed lateral offset of a lane centerline from the street center.

        axis 0 = horizontal street (travel along x), axis 1 = vertical street.
        Right-hand traffic: heading +y keeps x offset positive, heading +x
        keeps y offset negative.  lane 0 is the inner lane, lane 1 the outer.
        """
        magnitude = (0.5 + lane) * self.lane_width
        side = direction if axis == 1 else -direction
        return side * magnitude

    def total_street_length(self) -> float:
        return self.n_streets_x * self.height_m + self.n_streets_y * self.width_m

    def intersection_coords(self) -> tuple[np.ndarray, np.ndarray]:
        return self.centers_x, self.centers_y


@dataclass
class Deployment:
    """Immutable world: street grid, building boxes, base-station sites."""

    grid: StreetGrid
    buildings: list[BoxObstacle]
    bs_sites: list[tuple[Point3, tuple[float, float, float]]]
    building_lo: np.ndarray = field(repr=False, default=None)
    building_hi: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        if self.building_lo is None:
            if self.buildings:
                self.building_lo = np.stack([b.lo for b in self.buildings])
                self.building_hi = np.stack([b.hi for b in self.buildings])
            else:
                self.building_lo = np.zeros((0, 3))
                self.building_hi = np.zeros((0, 3))

    @property
    def n_sites(self) -> int:
        return len(self.bs_sites)

    def sector_table(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Per-sector (position xyz, azimuth degrees, site index) arrays."""
        pos, azi, site = [], [], []
        for i, (p, azimuths) in enumerate(self.bs_sites):
            for a in azimuths:
                pos.append([p.x, p.y, p.z])
                azi.append(a)
                site.append(i)
        return (
            np.asarray(pos, dtype=float).reshape(-1, 3),
            np.asarray(azi, dtype=float),
            np.asarray(site, dtype=int),
        )

    def min_building_height(self) -> float:
        if not self.buildings:
            return math.inf
        return float(self.building_hi[:, 2].min())


def build_deployment(cfg: ScenarioConfig, seed_seq: np.random.SeedSequence | None = None) -> Deployment:
    """Construct the Manhattan-grid world from the scenario configuration.

    One building per block with height drawn uniformly from the configured
    range; base stations on an ISD lattice anchored at (ISD/2, ISD/2), each
    site snapped per-axis to the nearest street intersection and given three
    sector azimuths.
    """
    cfg.validate()
    grid = StreetGrid(
        width_m=cfg.area_width_m,
        height_m=cfg.area_height_m,
        block_size_m=cfg.block_size_m,
        street_width_m=cfg.street_width_m,
        lanes_per_street=cfg.lanes_per_street,
    )
    if seed_seq is None:
        seed_seq = np.random.SeedSequence(cfg.master_seed, spawn_key=(hash_label("geometry"),))
    rng = np.random.Generator(np.random.Philox(seed_seq))

    sw = cfg.street_width_m
    pitch = grid.pitch
    buildings = []
    for i in range(grid.n_streets_x):
        for j in range(grid.n_streets_y):
            h = float(rng.uniform(cfg.building_height_min_m, cfg.building_height_max_m))
            cx = i * pitch + sw + cfg.block_size_m / 2.0
            cy = j * pitch + sw + cfg.block_size_m / 2.0
            buildings.append(
                BoxObstacle(
                    Point3(cx, cy, h / 2.0),
                    (cfg.block_size_m / 2.0, cfg.block_size_m / 2.0, h / 2.0),
                    BoxKind.BUILDING,
                )
            )

    nx = int(cfg.area_width_m // cfg.bs_isd_m)
    ny = int(cfg.area_height_m // cfg.bs_isd_m)
    cx, cy = grid.intersection_coords()
    sites = []
    for i in range(nx):
        for j in range(ny):
            gx = cfg.bs_isd_m / 2.0 + i * cfg.bs_isd_m
            gy = cfg.bs_isd_m / 2.0 + j * cfg.bs_isd_m
            sx = _snap(gx, cx)
            sy = _snap(gy, cy)
            sites.append((Point3(sx, sy, cfg.bs_height_m), (0.0, 120.0, 240.0)))

    return Deployment(grid=grid, buildings=buildings, bs_sites=sites)


def _snap(value: float, choices: np.ndarray) -> float:
    """Nearest value in `choices`; ties resolve to the lower coordinate."""
    d = np.abs(choices - value)
    return float(choices[int(np.argmin(d))])


def hash_label(label: str) -> int:
    """Stable 32-bit stream id for a named RNG substream."""
    h = 2166136261
    for ch in label.encode():
        h = ((h ^ ch) * 16777619) & 0xFFFFFFFF
    return h


# ---------------------------------------------------------------------------
# Exact 3D segment / AABB intersection (reference route)


def segment_intersects_aabb(a, b, lo, hi) -> bool:
    """Slab test with inclusive box surfaces and exclusive segment endpoints.

    The intersection parameter interval is clipped to the open (0, 1) range,
    so a segment merely touching a box with an endpoint does not count, while
    grazing contact along the box surface mid-segment does.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    d = b - a
    t_lo, t_hi = 0.0, 1.0
    for i in range(3):
        if d[i] == 0.0:
            if a[i] < lo[i] or a[i] > hi[i]:
                return False
            continue
        inv = 1.0 / d[i]
        t1 = (lo[i] - a[i]) * inv
        t2 = (hi[i] - a[i]) * inv
        if t1 > t2:
            t1, t2 = t2, t1
        t_lo = max(t_lo, t1)
        t_hi = min(t_hi, t2)
        if t_lo > t_hi:
            return False
    return t_hi > 0.0 and t_lo < 1.0


def los_state(a, b, deployment: Deployment, vehicle_boxes=(), exclude_owners=()) -> LosState:
    """Line-of-sight state of segment a-b against buildings and vehicle bodies.

    Building blockage dominates vehicle blockage.  Boxes whose owner id is in
    `exclude_owners` (the endpoints' own bodies) never block.
    """
    pa, pb = as_point(a), as_point(b)
    if pa == pb:
        raise ValueError("los_state requires two distinct points")
    av, bv = pa.as_array(), pb.as_array()
    for lo, hi in zip(deployment.building_lo, deployment.building_hi):
        if segment_intersects_aabb(av, bv, lo, hi):
            return LosState.BUILDING_BLOCKED
    excluded = set(exclude_owners)
    for box in vehicle_boxes:
        if box.owner in excluded:
            continue
        if segment_intersects_aabb(av, bv, box.lo, box.hi):
            return LosState.VEHICLE_BLOCKED
    return LosState.CLEAR


# ---------------------------------------------------------------------------
# Vectorized 2D runtime route


def segments_hit_rects_2d(p, q, lo, hi):
    """Pairwise 2D slab test: does segment i cross rectangle i?

    All arguments are (M, 2) arrays; returns a boolean (M,) array.  Same
    inclusive-surface / exclusive-endpoint convention as the 3D reference.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    d = q - p
    t_lo = np.zeros(len(p))
    t_hi = np.ones(len(p))
    ok = np.ones(len(p), dtype=bool)
    for i in range(2):
        di = d[:, i]
        parallel = di == 0.0
        with np.errstate(divide="ignore", invalid="ignore"):
            inv = np.where(parallel, np.inf, 1.0 / np.where(parallel, 1.0, di))
            t1 = (lo[:, i] - p[:, i]) * inv
            t2 = (hi[:, i] - p[:, i]) * inv
        swap = t1 > t2
        t1s = np.where(swap, t2, t1)
        t2s = np.where(swap, t1, t2)
        inside = (p[:, i] >= lo[:, i]) & (p[:, i] <= hi[:, i])
        ok &= np.where(parallel, inside, True)
        t_lo = np.where(parallel, t_lo, np.maximum(t_lo, t1s))
        t_hi = np.where(parallel, t_hi, np.minimum(t_hi, t2s))
    return ok & (t_lo <= t_hi) & (t_hi > 0.0) & (t_lo < 1.0)


class BlockerIndex2D:
    """Street-bucketed index of vehicle body footprints for batch LoS queries.

    Valid whenever all query segments run at or below vehicle roof height,
    which holds for the default rooftop transceiver mount.  Vehicles are
    bucketed per street and sorted by their along-street coordinate so a
    query only tests bodies inside the segment's along-range on the streets
    whose strip the segment overlaps.
    """

    def __init__(self, grid: StreetGrid, axis, street, s_along, lateral, veh_ids,
                 half_along: float, half_cross: float):
        self.grid = grid
        self.half_along = half_along
        self.half_cross = half_cross
        self.strip_half = grid.street_width_m / 2.0
        # per (axis, street index): sorted along-coords plus companion arrays
        self.buckets: dict[tuple[int, int], tuple[np.ndarray, np.ndarray, np.ndarray]] = {}
        axis = np.asarray(axis)
        street = np.asarray(street)
        for ax in (0, 1):
            n_streets = grid.n_streets_y if ax == 0 else grid.n_streets_x
            for k in range(n_streets):
                mask = (axis == ax) & (street == k)
                if not mask.any():
                    self.buckets[(ax, k)] = (
                        np.empty(0), np.empty(0), np.empty(0, dtype=int))
                    continue
                s = np.asarray(s_along)[mask]
                lat = np.asarray(lateral)[mask]
                ids = np.asarray(veh_ids)[mask]
                order = np.argsort(s, kind="stable")
                self.buckets[(ax, k)] = (s[order], lat[order], ids[order])

    def blocked(self, p, q, exclude_a, exclude_b):
        """Boolean per segment: does any non-excluded body cross segment i?

        p, q: (M, 2) world xy endpoints; exclude_a/b: (M,) owner vehicle ids
        (use -1 for none).
        """
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        m = len(p)
        blocked = np.zeros(m, dtype=bool)
        if m == 0:
            return blocked
        exclude_a = np.asarray(exclude_a)
        exclude_b = np.asarray(exclude_b)
        bb_lo = np.minimum(p, q)
        bb_hi = np.maximum(p, q)
        margin = self.strip_half
        for ax in (0, 1):
            # axis 0 streets run along x at centers_y; their strip is in y
            centers = self.grid.centers_y if ax == 0 else self.grid.centers_x
            cross_dim = 1 - ax  # dimension the strip constrains
            along_dim = ax
            for k, c in enumerate(centers):
                s_arr, lat_arr, id_arr = self.buckets[(ax, k)]
                if len(s_arr) == 0:
                    continue
                overlap = (bb_hi[:, cross_dim] >= c - margin) & (bb_lo[:, cross_dim] <= c + margin)
                seg_idx = np.nonzero(overlap & ~blocked)[0]
                if len(seg_idx) == 0:
                    continue
                lo_q = bb_lo[seg_idx, along_dim] - self.half_along
                hi_q = bb_hi[seg_idx, along_dim] + self.half_along
                i0 = np.searchsorted(s_arr, lo_q, side="left")
                i1 = np.searchsorted(s_arr, hi_q, side="right")
                counts = i1 - i0
                total = int(counts.sum())
                if total == 0:
                    continue
                seg_rep = np.repeat(seg_idx, counts)
                # flat candidate indices: concatenated ranges [i0, i1) per segment
                offsets = np.repeat(np.cumsum(counts) - counts, counts)
                cand = np.arange(total) - offsets + np.repeat(i0, counts)
                cand_ids = id_arr[cand]
                # prune by the segment's lateral band on this street, then owners
                lat_a = p[seg_rep, cross_dim] - c
                lat_b = q[seg_rep, cross_dim] - c
                lat_cand = lat_arr[cand]
                keep = (
                    (lat_cand >= np.minimum(lat_a, lat_b) - self.half_cross)
                    & (lat_cand <= np.maximum(lat_a, lat_b) + self.half_cross)
                    & (cand_ids != exclude_a[seg_rep])
                    & (cand_ids != exclude_b[seg_rep])
                )
                if not keep.any():
                    continue
                seg_rep = seg_rep[keep]
                cand = cand[keep]
                rect_lo = np.empty((len(cand), 2))
                rect_hi = np.empty((len(cand), 2))
                rect_lo[:, along_dim] = s_arr[cand] - self.half_along
                rect_hi[:, along_dim] = s_arr[cand] + self.half_along
                rect_lo[:, cross_dim] = c + lat_arr[cand] - self.half_cross
                rect_hi[:, cross_dim] = c + lat_arr[cand] + self.half_cross
                hit = segments_hit_rects_2d(p[seg_rep], q[seg_rep], rect_lo, rect_hi)
                if hit.any():
                    np.logical_or.at(blocked, seg_rep[hit], True)
        return blocked


def segments_hit_buildings_2d(p, q, deployment: Deployment):
    """Boolean per segment: does segment i cross any building footprint?

    Valid while segments stay below every building top (asserted by the
    engine); buildings are few, so this broadcasts over all of them at once.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    m = len(p)
    if m == 0 or len(deployment.buildings) == 0:
        return np.zeros(m, dtype=bool)
    lo = deployment.building_lo[:, :2]          # (B, 2)
    hi = deployment.building_hi[:, :2]
    d = (q - p)[:, None, :]                     # (M, 1, 2)
    pp = p[:, None, :]
    t_lo = np.zeros((m, len(lo)))
    t_hi = np.ones((m, len(lo)))
    ok = np.ones((m, len(lo)), dtype=bool)
    for i in range(2):
        di = d[..., i]
        parallel = di == 0.0
        with np.errstate(divide="ignore", invalid="ignore"):
            inv = 1.0 / np.where(parallel, 1.0, di)
            t1 = (lo[None, :, i] - pp[..., i]) * inv
            t2 = (hi[None, :, i] - pp[..., i]) * inv
        t1s = np.minimum(t1, t2)
        t2s = np.maximum(t1, t2)
        inside = (pp[..., i] >= lo[None, :, i]) & (pp[..., i] <= hi[None, :, i])
        ok &= np.where(parallel, inside, True)
        t_lo = np.where(parallel, t_lo, np.maximum(t_lo, t1s))
        t_hi = np.where(parallel, t_hi, np.minimum(t_hi, t2s))
    hit = ok & (t_lo <= t_hi) & (t_hi > 0.0) & (t_lo < 1.0)
    return hit.any(axis=1)
