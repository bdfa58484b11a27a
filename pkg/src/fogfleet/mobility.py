"""Vehicle motion on the Manhattan grid and the jaywalking hazard process.

Vehicles drive at constant speed along lane centerlines.  At every
intersection a maneuver is drawn uniformly from {straight, left, right}
(no U-turns); turns are executed exactly where the current lane centerline
crosses the target lane centerline, so positions stay on lane lines to
machine precision.  Vehicles leaving the area wrap torus-style, keeping the
configured density exact.

Jaywalk events arrive as a Poisson process over the whole area, located
uniformly by street length on mid-block segments, and cross the street
perpendicularly at constant speed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import ScenarioConfig
from .geometry import BlockerIndex2D, StreetGrid

STRAIGHT, LEFT, RIGHT = 0, 1, 2

# maneuver -> (new_dir for a vehicle on a horizontal street heading dir d,
# resolved below); turning right from +x heads -y, left heads +y, and the
# mirrored cases follow by sign flips.


@dataclass
class Fleet:
    """Vectorized state of all vehicles in one simulation round."""

    grid: StreetGrid
    speed_mps: float
    axis: np.ndarray       # 0 = travels along x (horizontal street), 1 = along y
    street: np.ndarray     # index of the street the vehicle is on
    direction: np.ndarray  # +1 / -1 along the travel axis
    lane: np.ndarray       # 0 = inner, 1 = outer
    s: np.ndarray          # along-axis coordinate
    next_entry: np.ndarray = field(default=None)   # raw coord of next decision edge
    turn_pending: np.ndarray = field(default=None)
    turn_s: np.ndarray = field(default=None)
    turn_axis: np.ndarray = field(default=None)
    turn_street: np.ndarray = field(default=None)
    turn_dir: np.ndarray = field(default=None)

    def __post_init__(self):
        n = len(self.s)
        if self.next_entry is None:
            self.next_entry = np.array(
                [self._entry_after(self.axis[i], self.direction[i], self.s[i]) for i in range(n)]
            )
        if self.turn_pending is None:
            self.turn_pending = np.zeros(n, dtype=bool)
            self.turn_s = np.zeros(n)
            self.turn_axis = np.zeros(n, dtype=np.int8)
            self.turn_street = np.zeros(n, dtype=np.int32)
            self.turn_dir = np.zeros(n, dtype=np.int8)

    # -- derived geometry ---------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.s)

    def _cross_centers(self, axis: int) -> np.ndarray:
        """Centers of the streets crossing a street of the given travel axis."""
        return self.grid.centers_x if axis == 0 else self.grid.centers_y

    def _axis_length(self, axis: int) -> float:
        return self.grid.width_m if axis == 0 else self.grid.height_m

    def _entry_after(self, axis: int, direction: int, s: float) -> float:
        """Raw coordinate of the next intersection decision edge strictly ahead."""
        centers = self._cross_centers(axis)
        half = self.grid.street_width_m / 2.0
        length = self._axis_length(axis)
        edges = centers - direction * half
        if direction > 0:
            ahead = edges[edges > s]
            return float(ahead.min()) if len(ahead) else float(edges.min() + length)
        ahead = edges[edges < s]
        return float(ahead.max()) if len(ahead) else float(edges.max() - length)

    def lateral_offsets(self) -> np.ndarray:
        magnitude = (0.5 + self.lane) * self.grid.lane_width
        side = np.where(self.axis == 1, self.direction, -self.direction)
        return side * magnitude

    def street_centers(self) -> np.ndarray:
        """Center coordinate of each vehicle's street (y for axis 0, x for axis 1)."""
        on_x = self.axis == 0
        out = np.empty(self.n)
        out[on_x] = self.grid.centers_y[self.street[on_x]]
        out[~on_x] = self.grid.centers_x[self.street[~on_x]]
        return out

    def positions(self) -> np.ndarray:
        """(N, 2) world xy of vehicle body centers (lane centerline points)."""
        lat = self.lateral_offsets()
        c = self.street_centers()
        xy = np.empty((self.n, 2))
        on_x = self.axis == 0
        xy[on_x, 0] = self.s[on_x]
        xy[on_x, 1] = c[on_x] + lat[on_x]
        xy[~on_x, 1] = self.s[~on_x]
        xy[~on_x, 0] = c[~on_x] + lat[~on_x]
        return xy

    def velocities(self) -> np.ndarray:
        """(N, 2) current velocity vectors (linear extrapolation basis)."""
        v = np.zeros((self.n, 2))
        on_x = self.axis == 0
        v[on_x, 0] = self.direction[on_x] * self.speed_mps
        v[~on_x, 1] = self.direction[~on_x] * self.speed_mps
        return v

    def front_positions(self, half_length: float) -> np.ndarray:
        pos = self.positions()
        on_x = self.axis == 0
        pos[on_x, 0] += self.direction[on_x] * half_length
        pos[~on_x, 1] += self.direction[~on_x] * half_length
        return pos

    def blocker_index(self, half_along: float, half_cross: float,
                      positions: np.ndarray | None = None) -> BlockerIndex2D:
        if positions is None:
            positions = self.positions()
        on_x = self.axis == 0
        s_along = np.where(on_x, positions[:, 0], positions[:, 1])
        lateral = np.where(on_x, positions[:, 1], positions[:, 0]) - self.street_centers()
        # street axis for bucketing: 0 = horizontal street == travel axis 0
        return BlockerIndex2D(
            self.grid, self.axis, self.street, s_along, lateral,
            np.arange(self.n), half_along, half_cross,
        )

    # -- dynamics -----------------------------------------------------------

    def step(self, dt: float, rng: np.random.Generator) -> None:
        """Advance every vehicle by speed*dt, handling turns and wrap-around."""
        if dt == 0.0 or self.n == 0:
            return
        ds = self.direction * self.speed_mps * dt
        s_old = self.s
        s_new = s_old + ds

        fwd = self.direction > 0
        crossed_turn = self.turn_pending & np.where(
            fwd, (self.turn_s > s_old) & (self.turn_s <= s_new),
            (self.turn_s < s_old) & (self.turn_s >= s_new),
        )
        for i in np.nonzero(crossed_turn)[0]:
            leftover = abs(s_new[i] - self.turn_s[i])
            base = self.street_centers()[i] + self.lateral_offsets()[i]
            self.axis[i] = self.turn_axis[i]
            self.street[i] = self.turn_street[i]
            self.direction[i] = self.turn_dir[i]
            self.turn_pending[i] = False
            s_new[i] = base + self.direction[i] * leftover
            self.next_entry[i] = self._entry_after(self.axis[i], self.direction[i], s_new[i])

        crossed_entry = ~self.turn_pending & np.where(
            fwd, (self.next_entry > s_old) & (self.next_entry <= s_new),
            (self.next_entry < s_old) & (self.next_entry >= s_new),
        )
        crossed_entry &= ~crossed_turn
        half = self.grid.street_width_m / 2.0
        for i in np.nonzero(crossed_entry)[0]:
            maneuver = int(rng.integers(0, 3))
            centers = self._cross_centers(self.axis[i])
            c = self.next_entry[i] + self.direction[i] * half  # intersection center
            if maneuver == STRAIGHT:
                nxt = c + self.direction[i] * (half + 1e-9)
                base = nxt % self._axis_length(self.axis[i])
                entry = self._entry_after(self.axis[i], self.direction[i], base)
                self.next_entry[i] = entry + (nxt - base)
                continue
            new_axis = 1 - self.axis[i]
            # right turn from +x heads -y; left heads +y; mirror by direction,
            # and the vertical-street cases follow by the same cross product.
            if self.axis[i] == 0:
                new_dir = -self.direction[i] if maneuver == RIGHT else self.direction[i]
            else:
                new_dir = self.direction[i] if maneuver == RIGHT else -self.direction[i]
            c_wrapped = c % self._axis_length(self.axis[i])
            new_street = int(np.argmin(np.abs(centers - c_wrapped)))
            mag = (0.5 + self.lane[i]) * self.grid.lane_width
            side = new_dir if new_axis == 1 else -new_dir
            self.turn_pending[i] = True
            self.turn_s[i] = c + side * mag
            self.turn_axis[i] = new_axis
            self.turn_street[i] = new_street
            self.turn_dir[i] = new_dir

        self.s = s_new
        self._wrap()

    def _wrap(self) -> None:
        for axis in (0, 1):
            length = self._axis_length(axis)
            sel = self.axis == axis
            over = sel & (self.s >= length)
            under = sel & (self.s < 0.0)
            for mask, shift in ((over, -length), (under, length)):
                if mask.any():
                    self.s[mask] += shift
                    self.next_entry[mask] += shift
                    self.turn_s[mask] += shift


def build_fleet(cfg: ScenarioConfig, grid: StreetGrid, rng: np.random.Generator,
                density_veh_per_100m: float | None = None) -> Fleet:
    """Spawn a fixed fleet sized from the density knob, uniform over lanes."""
    density = cfg.density_veh_per_100m if density_veh_per_100m is None else density_veh_per_100m
    total_len = grid.total_street_length()
    n = int(round(density * total_len / 100.0))

    # choose a street (axis, index) weighted by street length
    lengths = [grid.height_m] * grid.n_streets_x + [grid.width_m] * grid.n_streets_y
    lengths = np.asarray(lengths, dtype=float)
    street_pick = rng.choice(len(lengths), size=n, p=lengths / lengths.sum())
    axis = np.where(street_pick < grid.n_streets_x, 1, 0).astype(np.int8)
    street = np.where(
        street_pick < grid.n_streets_x, street_pick, street_pick - grid.n_streets_x
    ).astype(np.int32)
    direction = rng.choice(np.array([-1, 1], dtype=np.int8), size=n)
    lane = rng.integers(0, 2, size=n).astype(np.int8)
    length_of = np.where(axis == 0, grid.width_m, grid.height_m)
    s = rng.random(n) * length_of

    return Fleet(
        grid=grid,
        speed_mps=cfg.driving_speed_mps,
        axis=axis,
        street=street,
        direction=direction.astype(np.int8),
        lane=lane,
        s=s,
    )


def step_vehicles(fleet: Fleet, dt: float, rng: np.random.Generator) -> Fleet:
    """Advance the fleet in place (spec operation wrapper)."""
    fleet.step(dt, rng)
    return fleet


# ---------------------------------------------------------------------------
# Jaywalking


@dataclass
class JaywalkEvent:
    event_id: int
    spawn_time: float
    street_axis: int           # travel axis of the host street
    street_idx: int
    s_along: float             # crossing point along the street
    side: int                  # +1: enters from positive-lateral curb
    # detection ledger
    first_detection: tuple[float, int] | None = None
    local_detections: dict = field(default_factory=dict)   # vehicle -> time
    warnings: dict = field(default_factory=dict)           # vehicle -> receipt time
    verdicts: dict = field(default_factory=dict)           # vehicle -> (time, missed)
    ineligible: set = field(default_factory=set)           # inside zone at spawn
    completed: bool = False

    @property
    def state(self) -> str:
        if self.completed:
            return "completed"
        if any(missed for _, missed in self.verdicts.values()):
            return "missed"
        if self.first_detection is not None:
            return "detected"
        return "active"


class JaywalkProcess:
    """Poisson arrivals of curb-to-curb crossings, uniform by street length."""

    def __init__(self, cfg: ScenarioConfig, grid: StreetGrid, rng: np.random.Generator,
                 intensity_per_min: float | None = None):
        self.grid = grid
        self.speed = cfg.jaywalk_speed_mps
        self.rng = rng
        intensity = cfg.jaywalk_intensity_per_min if intensity_per_min is None else intensity_per_min
        self.rate_hz = intensity / 60.0
        self.next_arrival = self._draw_next(0.0)
        self.events: list[JaywalkEvent] = []
        self._next_id = 0
        self.crossing_duration = grid.street_width_m / self.speed

    def _draw_next(self, t: float) -> float:
        if self.rate_hz <= 0.0:
            return float("inf")
        return t + float(self.rng.exponential(1.0 / self.rate_hz))

    def _sample_location(self) -> tuple[int, int, float]:
        """Street + mid-block along-coordinate, uniform by usable length."""
        g = self.grid
        n_v, n_h = g.n_streets_x, g.n_streets_y
        lengths = np.array([g.height_m] * n_v + [g.width_m] * n_h)
        pick = int(self.rng.choice(len(lengths), p=lengths / lengths.sum()))
        if pick < n_v:
            axis, idx, crossers = 1, pick, g.centers_y
            length = g.height_m
        else:
            axis, idx, crossers = 0, pick - n_v, g.centers_x
            length = g.width_m
        half = g.street_width_m / 2.0
        usable = length - len(crossers) * g.street_width_m
        u = float(self.rng.random()) * usable
        # walk the gaps between intersection exclusion zones
        edges = np.sort(crossers)
        cursor = 0.0
        for c in edges:
            gap = (c - half) - cursor
            if u < gap:
                return axis, idx, cursor + u
            u -= gap
            cursor = c + half
        return axis, idx, cursor + u

    def step(self, t: float, dt: float) -> list[JaywalkEvent]:
        """Spawn due events, advance pedestrians, retire finished crossings."""
        spawned = []
        while self.next_arrival <= t + dt:
            spawn_t = self.next_arrival
            axis, idx, s_along = self._sample_location()
            side = 1 if self.rng.random() < 0.5 else -1
            ev = JaywalkEvent(self._next_id, spawn_t, axis, idx, s_along, side)
            self._next_id += 1
            self.events.append(ev)
            spawned.append(ev)
            self.next_arrival = self._draw_next(spawn_t)
        for ev in self.events:
            if not ev.completed and t + dt - ev.spawn_time >= self.crossing_duration:
                ev.completed = True
        return spawned

    def active_events(self) -> list[JaywalkEvent]:
        return [ev for ev in self.events if not ev.completed]

    def lateral(self, ev: JaywalkEvent, t: float) -> float:
        """Signed lateral offset of the pedestrian from the street center."""
        half = self.grid.street_width_m / 2.0
        return ev.side * (half - self.speed * max(t - ev.spawn_time, 0.0))

    def position_xy(self, ev: JaywalkEvent, t: float) -> np.ndarray:
        lat = self.lateral(ev, t)
        if ev.street_axis == 0:
            c = self.grid.centers_y[ev.street_idx]
            return np.array([ev.s_along, c + lat])
        c = self.grid.centers_x[ev.street_idx]
        return np.array([c + lat, ev.s_along])


def spawn_jaywalks(process: JaywalkProcess, t: float, dt: float) -> list[JaywalkEvent]:
    """Advance the jaywalk process one tick (spec operation wrapper)."""
    return process.step(t, dt)
