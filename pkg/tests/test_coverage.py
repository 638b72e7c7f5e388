import math

import numpy as np
import pytest

from uavrisk.coverage import (CoverageMission, OccupancyMap, astar_cells,
                              coverage_map, out_and_back, plan_path,
                              read_occupancy_pgm, sample_goals,
                              shortcut_cells, write_occupancy_pgm)
from uavrisk.dynamics import (ControllerConfig, DynamicsNoise, SimConfig,
                              simulate_flight_arrays)
from uavrisk.errors import PlanningError, SamplingError
from uavrisk.flight import ContextFeatures, TrajectoryPlan, Waypoint, \
    _feature_matrix
from uavrisk.montecarlo import McConfig
from uavrisk.power import AnalyticalCoefficients, analytical_predict_series
from uavrisk.risk import RiskProfile
from uavrisk.rng import substream

from helpers import uniform_windset
from oracles import dijkstra_cost

SQRT2 = math.sqrt(2.0)


def empty_map(n=40, cell=5.0):
    return OccupancyMap(origin=(0.0, 0.0), cell_size=cell, dims=(n, n),
                        occupied=np.zeros((n, n), dtype=bool))


def walled_map(n=30, cell=5.0, gap_i=None):
    # wall across the map at mid-y with one free gap cell
    occ = np.zeros((n, n), dtype=bool)
    occ[:, n // 2] = True
    occ[n // 2 if gap_i is None else gap_i, n // 2] = False
    return OccupancyMap(origin=(0.0, 0.0), cell_size=cell, dims=(n, n),
                        occupied=occ)


class TestSampleGoals:
    def test_all_within_radius_on_empty_map(self):
        occ = empty_map()
        center = (100.0, 100.0)
        goals = sample_goals(center, 50.0, 200, occ, substream(1, 0))
        assert len(goals) == 200
        assert all(math.dist(g, center) <= 50.0 + 1e-9 for g in goals)

    def test_fully_occupied_map_errors(self):
        occ = OccupancyMap(origin=(0.0, 0.0), cell_size=5.0, dims=(10, 10),
                           occupied=np.ones((10, 10), dtype=bool))
        with pytest.raises(SamplingError):
            sample_goals((25.0, 25.0), 20.0, 5, occ, substream(1, 0))

    def test_half_occupied_map_respects_free_area(self):
        n = 40
        occ_arr = np.zeros((n, n), dtype=bool)
        occ_arr[:, :n // 2] = True   # lower-y half blocked
        occ = OccupancyMap(origin=(0.0, 0.0), cell_size=5.0, dims=(n, n),
                           occupied=occ_arr)
        center = (100.0, 100.0)
        goals = sample_goals(center, 60.0, 10000, occ, substream(2, 0))
        ys = np.array([g[1] for g in goals])
        assert np.all(ys >= 100.0 - 1e-9)
        # within the free half-disc, mass splits evenly by area
        left = np.sum(np.array([g[0] for g in goals]) < 100.0)
        assert left / len(goals) == pytest.approx(0.5, abs=0.05)

    def test_deterministic_given_seed(self):
        occ = empty_map()
        a = sample_goals((100.0, 100.0), 50.0, 20, occ, substream(3, 0))
        b = sample_goals((100.0, 100.0), 50.0, 20, occ, substream(3, 0))
        assert a == b


class TestPlanPath:
    def test_empty_map_straight_plan(self):
        occ = empty_map()
        start, goal = (22.0, 22.0), (171.0, 133.0)
        plan = plan_path(occ, start, goal, cruise_altitude=40.0, speed=5.0)
        assert len(plan.waypoints) == 2
        length = sum(plan.segment_lengths())
        euclid = math.dist(occ.cell_center(occ.world_to_cell(start)),
                           occ.cell_center(occ.world_to_cell(goal)))
        assert abs(length - euclid) <= occ.cell_size * SQRT2
        assert all(wp.position[2] == 40.0 for wp in plan.waypoints)

    def test_wall_with_gap(self):
        occ = walled_map()
        start, goal = (10.0, 10.0), (10.0, 140.0)
        plan = plan_path(occ, start, goal, 40.0, 5.0)
        length = sum(plan.segment_lengths())
        assert length >= math.dist(start, goal)
        # the path passes through the gap column
        gap_x = occ.cell_center((15, 15))[0]
        xs = [wp.position[0] for wp in plan.waypoints]
        assert any(abs(x - gap_x) < 40.0 for x in xs)

    def test_walled_off_goal_errors(self):
        n = 20
        occ_arr = np.zeros((n, n), dtype=bool)
        occ_arr[:, 10] = True   # solid wall, no gap
        occ = OccupancyMap(origin=(0.0, 0.0), cell_size=5.0, dims=(n, n),
                           occupied=occ_arr)
        with pytest.raises(PlanningError):
            plan_path(occ, (10.0, 10.0), (10.0, 90.0), 40.0, 5.0)

    def test_occupied_endpoint_errors(self):
        occ = walled_map()
        blocked = occ.cell_center((0, 15))   # on the wall
        with pytest.raises(PlanningError):
            plan_path(occ, blocked, (10.0, 140.0), 40.0, 5.0)

    def test_tangent_yaw(self):
        occ = empty_map()
        plan = plan_path(occ, (20.0, 20.0), (120.0, 20.0), 40.0, 5.0)
        assert plan.waypoints[0].yaw == pytest.approx(0.0, abs=1e-9)

    def test_cruise_raised_above_buildings(self):
        n = 20
        heights = np.zeros((n, n))
        heights[5:8, :] = 55.0
        occ = OccupancyMap(origin=(0.0, 0.0), cell_size=5.0, dims=(n, n),
                           occupied=np.zeros((n, n), dtype=bool),
                           heights=heights)
        plan = plan_path(occ, (10.0, 50.0), (90.0, 50.0), cruise_altitude=40.0,
                         speed=5.0, clearance=10.0)
        assert all(wp.position[2] == 65.0 for wp in plan.waypoints)

    def test_astar_matches_dijkstra_on_random_maps(self):
        rng = np.random.default_rng(4)
        checked = 0
        for _ in range(5):
            n = int(rng.integers(15, 51))
            occ_arr = rng.random((n, n)) < 0.25
            occ = OccupancyMap(origin=(0.0, 0.0), cell_size=2.0, dims=(n, n),
                               occupied=occ_arr)
            free = np.argwhere(~occ_arr)
            s, g = free[rng.integers(len(free))], free[rng.integers(len(free))]
            s, g = tuple(int(v) for v in s), tuple(int(v) for v in g)
            want = dijkstra_cost(occ_arr.tolist(), s, g)
            if want is None:
                with pytest.raises(PlanningError):
                    astar_cells(occ, s, g)
                continue
            _, got = astar_cells(occ, s, g)
            assert got == tuple(want)
            checked += 1
        assert checked >= 2

    def test_shortcut_preserves_endpoints_and_clearance(self):
        occ = walled_map()
        cells, _ = astar_cells(occ, (2, 2), (2, 27))
        short = shortcut_cells(occ, cells)
        assert short[0] == cells[0]
        assert short[-1] == cells[-1]
        assert len(short) <= len(cells)
        assert all(occ.is_free(c) for c in short)


def mission_for(windset, model, **kw):
    return CoverageMission(
        windset=windset, power_model=model,
        context=ContextFeatures(1.15, 0.5),
        controller=ControllerConfig(), noise=DynamicsNoise((0.2, 0.2, 0.1)),
        sim=SimConfig(dt=0.1, max_sim_time=400.0),
        cruise_altitude=40.0, clearance=10.0, speed=5.0, **kw)


COEFFS = AnalyticalCoefficients(
    beta=np.array([200.0, 3.0, 1.2, 20.0, 6.0, 30.0, 40.0]))


class TestCoverageMap:
    def _run(self, profile, master_seed=21, goals=5, runs=20, one_way=False):
        occ = empty_map(n=40, cell=5.0)
        windset = uniform_windset(vector=(1.5, 0.5, 0.0), ref_speed=2.0,
                                  mean_angle=0.0, mean_speed=2.0,
                                  std_angle=10.0, std_speed=0.5)
        mission = mission_for(windset, COEFFS, one_way=one_way)
        mc = McConfig(runs=runs, master_seed=master_seed, histogram_bins=10)
        return coverage_map((100.0, 100.0), 60.0, goals, occ, mission,
                            profile, 0.95, mc)

    def test_smoke_five_goals(self):
        profile = RiskProfile(gamma=20000.0, lambda_floor=10000.0,
                              battery_capacity=80000.0)
        result = self._run(profile)
        assert len(result.goals) == 5
        assert result.failed_plans == 0
        assert all(0.0 < v <= profile.cap for v in result.cvar_values)
        assert result.grid["values"].shape == (25, 25)

    def test_deterministic(self):
        profile = RiskProfile(gamma=20000.0, lambda_floor=10000.0,
                              battery_capacity=80000.0)
        a = self._run(profile)
        b = self._run(profile)
        assert a.goals == b.goals
        assert a.cvar_values == b.cvar_values

    def test_low_capacity_dominates_generous(self):
        low = RiskProfile(gamma=20000.0, lambda_floor=10000.0,
                          battery_capacity=60000.0)
        generous = RiskProfile(gamma=20000.0, lambda_floor=10000.0,
                               battery_capacity=200000.0)
        a = self._run(low)
        b = self._run(generous)
        assert a.goals == b.goals
        assert all(va > vb for va, vb in zip(a.cvar_values, b.cvar_values))

    def test_cvar_nondecreasing_in_path_length(self):
        # no obstacles, goals straight out at growing distances
        occ = empty_map(n=60, cell=5.0)
        windset = uniform_windset(vector=(1.0, 0.0, 0.0), ref_speed=2.0,
                                  mean_angle=0.0, mean_speed=2.0,
                                  std_angle=5.0, std_speed=0.3)
        mission = mission_for(windset, COEFFS)
        profile = RiskProfile(gamma=20000.0, lambda_floor=5000.0,
                              battery_capacity=90000.0)
        base = (40.0, 150.0)
        values = []
        for i, dist in enumerate((40.0, 90.0, 140.0, 190.0)):
            plan = plan_path(occ, base, (base[0] + dist, base[1]), 40.0, 5.0)
            plan = out_and_back(plan)
            from uavrisk.montecarlo import run_mc
            from uavrisk.risk import cvar, risk_transform
            samples = run_mc(plan, mission.controller, mission.noise,
                             mission.sim, windset, COEFFS,
                             McConfig(runs=30, master_seed=55 + i),
                             mission.context)
            values.append(cvar(risk_transform(samples, profile), 0.95))
        assert all(b > a for a, b in zip(values, values[1:]))


def test_out_and_back_symmetry_in_zero_wind():
    plan = TrajectoryPlan(waypoints=(Waypoint((0, 0, 30), 0.0, 5.0),
                                     Waypoint((1500, 0, 30), 0.0, 5.0)))
    full = out_and_back(plan)
    assert full.waypoints[-1].position == (0.0, 0.0, 30.0)
    sim = SimConfig(dt=0.1, max_sim_time=3000.0)
    res = simulate_flight_arrays(full, ControllerConfig(), DynamicsNoise(),
                                 sim, lambda p: (0.0, 0.0, 0.0),
                                 lambda: (0.0, 0.0, 0.0), substream(3, 0))
    assert res.captured
    turn = int(np.argmin(np.linalg.norm(
        res.positions - np.array([1500.0, 0.0, 30.0]), axis=1)))
    feats = _feature_matrix(res.velocities, res.yaws, res.pitches, res.winds)
    power = analytical_predict_series(COEFFS, feats, ContextFeatures(1.15, 0.5))
    e_out = float(np.sum(power[:turn]) * sim.dt)
    e_back = float(np.sum(power[turn:-1]) * sim.dt)
    assert abs(e_out - e_back) / e_out < 0.02


class TestPgmIo:
    def test_round_trip(self, tmp_path):
        occ = walled_map()
        pgm = tmp_path / "map.pgm"
        sidecar = tmp_path / "map.json"
        write_occupancy_pgm(occ, pgm, sidecar)
        back = read_occupancy_pgm(pgm, sidecar)
        assert back.dims == occ.dims
        assert back.origin == occ.origin
        assert back.cell_size == occ.cell_size
        np.testing.assert_array_equal(back.occupied, occ.occupied)

    def test_binary_pgm_read(self, tmp_path):
        occ = walled_map(n=8, gap_i=3)
        nx, ny = occ.dims
        pixels = bytearray()
        for row in range(ny):
            for i in range(nx):
                pixels.append(255 if occ.occupied[i, ny - 1 - row] else 0)
        pgm = tmp_path / "map.pgm"
        pgm.write_bytes(b"P5\n8 8\n255\n" + bytes(pixels))
        sidecar = tmp_path / "map.json"
        sidecar.write_text('{"origin": [0.0, 0.0], "cell_size": 5.0}')
        back = read_occupancy_pgm(pgm, sidecar)
        np.testing.assert_array_equal(back.occupied, occ.occupied)

    def test_bad_magic_rejected(self, tmp_path):
        pgm = tmp_path / "map.pgm"
        pgm.write_text("P6\n2 2\n255\n")
        sidecar = tmp_path / "map.json"
        sidecar.write_text('{"origin": [0, 0], "cell_size": 1.0}')
        from uavrisk.errors import LoadError
        with pytest.raises(LoadError):
            read_occupancy_pgm(pgm, sidecar)
