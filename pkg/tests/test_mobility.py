import numpy as np
import pytest
from scipy import stats

from fogfleet.config import ScenarioConfig
from fogfleet.geometry import build_deployment
from fogfleet.mobility import Fleet, JaywalkProcess, build_fleet, step_vehicles


def make_grid(cfg=None):
    cfg = cfg or ScenarioConfig()
    return cfg, build_deployment(cfg).grid


def single_vehicle(grid, cfg, axis, street, direction, lane, s):
    return Fleet(
        grid=grid,
        speed_mps=cfg.driving_speed_mps,
        axis=np.array([axis], dtype=np.int8),
        street=np.array([street], dtype=np.int32),
        direction=np.array([direction], dtype=np.int8),
        lane=np.array([lane], dtype=np.int8),
        s=np.array([s], dtype=float),
    )


class ScriptedRng:
    """Deterministic stand-in for the turn-decision stream."""

    def __init__(self, choices):
        self.choices = list(choices)

    def integers(self, lo, hi):
        return self.choices.pop(0)


def test_zero_dt_is_noop():
    cfg, grid = make_grid()
    fleet = single_vehicle(grid, cfg, 0, 0, 1, 0, 60.0)
    before = fleet.positions().copy()
    step_vehicles(fleet, 0.0, np.random.default_rng(0))
    assert np.array_equal(fleet.positions(), before)


def test_one_second_straight_displacement():
    cfg, grid = make_grid()
    fleet = single_vehicle(grid, cfg, 0, 0, 1, 0, 40.0)
    start = fleet.positions()[0].copy()
    rng = np.random.default_rng(0)
    for _ in range(100):
        fleet.step(0.01, rng)
    end = fleet.positions()[0]
    assert abs((end[0] - start[0]) - 40.0 / 3.6) < 1e-9
    assert end[1] == start[1]


def test_fleet_size_from_density_and_conserved():
    cfg, grid = make_grid()
    rng = np.random.default_rng(1)
    fleet = build_fleet(cfg, grid, rng, density_veh_per_100m=50.0)
    expected = round(50.0 * grid.total_street_length() / 100.0)
    assert fleet.n == expected == 480
    for _ in range(500):
        fleet.step(0.01, rng)
    assert fleet.n == expected
    assert np.all(fleet.s >= 0.0)
    assert np.all(fleet.s < 240.0)


def test_positions_stay_on_lane_centerlines():
    cfg, grid = make_grid()
    rng = np.random.default_rng(2)
    fleet = build_fleet(cfg, grid, rng, density_veh_per_100m=10.0)
    lane_offsets = np.array([-7.5, -2.5, 2.5, 7.5])
    centers = grid.centers_x  # same coordinates on both axes for a square area
    for _ in range(2000):
        fleet.step(0.01, rng)
    pos = fleet.positions()
    cross = np.where(fleet.axis == 0, pos[:, 1], pos[:, 0])
    err = np.abs(cross[:, None, None] - (centers[None, :, None] + lane_offsets[None, None, :]))
    assert err.min(axis=(1, 2)).max() < 1e-3  # < 1 mm off any lane centerline


@pytest.mark.parametrize("maneuver,expect_axis,expect_dir", [
    (0, 0, 1),    # straight keeps heading +x
    (1, 1, 1),    # left from +x heads +y
    (2, 1, -1),   # right from +x heads -y
])
def test_turn_maneuvers_exact(maneuver, expect_axis, expect_dir):
    cfg, grid = make_grid()
    # heading +x on horizontal street 0 (center y=10), lane 0 => y = 7.5;
    # decision edge at x=120, turn points inside the x=130 intersection
    fleet = single_vehicle(grid, cfg, 0, 0, 1, 0, 110.0)
    rng = ScriptedRng([maneuver])
    prev = fleet.positions()[0].copy()
    step = cfg.driving_speed_mps * 0.01
    for _ in range(250):
        fleet.step(0.01, rng)
        cur = fleet.positions()[0]
        d = np.abs(cur - prev)
        d = np.minimum(d, 240.0 - d)  # torus displacement
        assert np.linalg.norm(d) < step + 1e-9  # continuous path
        prev = cur.copy()
    assert rng.choices == []  # exactly one decision was drawn
    assert fleet.axis[0] == expect_axis
    assert fleet.direction[0] == expect_dir
    pos = fleet.positions()[0]
    # still exactly on a lane line of some street
    cross = pos[1] if expect_axis == 0 else pos[0]
    lane_lines = np.concatenate([grid.centers_x + o for o in (-7.5, -2.5, 2.5, 7.5)])
    assert np.min(np.abs(lane_lines - cross)) < 1e-9


def test_wrap_preserves_lane_and_count():
    cfg, grid = make_grid()
    fleet = single_vehicle(grid, cfg, 0, 0, 1, 1, 239.5)
    rng = ScriptedRng([0, 0, 0, 0])  # go straight at any decision
    for _ in range(100):
        fleet.step(0.01, rng if rng.choices else np.random.default_rng(0))
    assert fleet.n == 1
    assert 0.0 <= fleet.s[0] < 240.0


# ---------------------------------------------------------------------------
# jaywalking


def test_zero_intensity_never_spawns():
    cfg, grid = make_grid()
    proc = JaywalkProcess(cfg.replace(jaywalk_intensity_per_min=0.0), grid,
                          np.random.default_rng(0))
    for i in range(60_000):
        proc.step(i * 0.01, 0.01)
    assert proc.events == []


def test_crossing_takes_7_2_seconds():
    cfg, grid = make_grid()
    proc = JaywalkProcess(cfg, grid, np.random.default_rng(1))
    assert proc.crossing_duration == pytest.approx(20.0 / (10.0 / 3.6), abs=1e-12)
    assert proc.crossing_duration == pytest.approx(7.2, abs=1e-12)


def test_pedestrian_walks_curb_to_curb():
    cfg, grid = make_grid()
    rng = np.random.default_rng(2)
    proc = JaywalkProcess(cfg.replace(jaywalk_intensity_per_min=30.0), grid, rng)
    t = 0.0
    while not proc.events:
        proc.step(t, 0.01)
        t += 0.01
    ev = proc.events[0]
    assert abs(proc.lateral(ev, ev.spawn_time)) == pytest.approx(10.0)
    mid = proc.lateral(ev, ev.spawn_time + 3.6)
    assert abs(mid) < 1e-9
    end = proc.lateral(ev, ev.spawn_time + 7.2)
    assert end == pytest.approx(-ev.side * 10.0)


def test_spawns_exclude_intersections_and_cover_streets():
    cfg, grid = make_grid()
    rng = np.random.default_rng(3)
    proc = JaywalkProcess(cfg.replace(jaywalk_intensity_per_min=1000.0), grid, rng)
    for i in range(20_000):
        proc.step(i * 0.01, 0.01)
    events = proc.events
    assert len(events) > 200
    crossers = grid.centers_x
    for ev in events:
        d = np.min(np.abs(crossers - ev.s_along))
        assert d >= 10.0 - 1e-9
    axes = {ev.street_axis for ev in events}
    assert axes == {0, 1}


def test_interarrival_times_are_exponential():
    cfg, grid = make_grid()
    rng = np.random.default_rng(4)
    proc = JaywalkProcess(cfg, grid, rng)  # 1 per minute
    times = []
    t = 0.0
    for _ in range(1500):
        nxt = proc._draw_next(t)
        times.append(nxt - t)
        t = nxt
    result = stats.kstest(times, "expon", args=(0, 60.0))
    assert result.pvalue > 0.01


def test_poisson_event_count_at_paper_scale():
    cfg, grid = make_grid()
    counts = []
    for seed in range(40):
        proc = JaywalkProcess(cfg, grid, np.random.default_rng(seed))
        n = 0
        t = 0.0
        while True:
            spawned = proc.step(t, 1.0)
            n += len(spawned)
            t += 1.0
            if t >= 600.0:
                break
        counts.append(n)
    mean = np.mean(counts)
    # Poisson(10) mean over 40 rounds: CI roughly 10 +- 3*sqrt(10/40)
    assert abs(mean - 10.0) < 1.5
