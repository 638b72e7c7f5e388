"""Coverage analysis: CVaR of out-and-back missions around a base.

Goals are sampled uniformly over a disc (rejecting occupied cells),
connected to the base by an 8-connected grid A* path smoothed with
greedy line-of-sight shortcutting, lifted to a cruise altitude and
flown out-and-back through the Monte Carlo + risk pipeline. The result
is one CVaR per goal plus an inverse-distance-blended raster for
contour plotting.

A* accumulates path cost as exact (straight, diagonal) step counts so
optimal costs compare exactly against a reference shortest-path
implementation.
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dynamics import ControllerConfig, DynamicsNoise, SimConfig
from .errors import InputError, LoadError, PlanningError, SamplingError
from .flight import ContextFeatures, TrajectoryPlan, Waypoint, fnum
from .montecarlo import McConfig, run_mc
from .risk import RiskProfile, cvar, risk_transform
from .rng import mix_seed, substream
from .wind import WindFieldSet

SQRT2 = math.sqrt(2.0)

# 8-connected moves: (di, dj, is_diagonal)
_MOVES = [(1, 0, False), (-1, 0, False), (0, 1, False), (0, -1, False),
          (1, 1, True), (1, -1, True), (-1, 1, True), (-1, -1, True)]


@dataclass(frozen=True)
class OccupancyMap:
    """2D occupancy grid with optional per-cell building heights."""

    origin: tuple[float, float]
    cell_size: float
    dims: tuple[int, int]
    occupied: np.ndarray               # (nx, ny) bool
    heights: np.ndarray | None = None  # (nx, ny) m

    def __post_init__(self):
        if self.cell_size <= 0.0:
            raise InputError("cell_size must be positive")
        if any(n < 2 for n in self.dims):
            raise InputError("map needs at least 2 cells per axis")
        occ = np.asarray(self.occupied, dtype=bool)
        if occ.shape != self.dims:
            raise InputError(f"occupied shape {occ.shape}, expected {self.dims}")
        object.__setattr__(self, "occupied", occ)
        if self.heights is not None:
            h = np.asarray(self.heights, dtype=float)
            if h.shape != self.dims:
                raise InputError("heights shape must match dims")
            object.__setattr__(self, "heights", h)

    def world_to_cell(self, xy) -> tuple[int, int]:
        return (int(math.floor((xy[0] - self.origin[0]) / self.cell_size)),
                int(math.floor((xy[1] - self.origin[1]) / self.cell_size)))

    def cell_center(self, cell) -> tuple[float, float]:
        return (self.origin[0] + (cell[0] + 0.5) * self.cell_size,
                self.origin[1] + (cell[1] + 0.5) * self.cell_size)

    def in_bounds(self, cell) -> bool:
        return 0 <= cell[0] < self.dims[0] and 0 <= cell[1] < self.dims[1]

    def is_free(self, cell) -> bool:
        return self.in_bounds(cell) and not self.occupied[cell[0], cell[1]]


@dataclass(frozen=True)
class CoverageResult:
    goals: tuple[tuple[float, float], ...]
    cvar_values: tuple[float, ...]
    failed_plans: int
    grid: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.goals) != len(self.cvar_values):
            raise InputError("goals and cvar_values lengths differ")


def sample_goals(center, radius: float, count: int, occ_map: OccupancyMap,
                 rng: np.random.Generator) -> list[tuple[float, float]]:
    """Uniform samples over the disc, rejecting occupied or off-map cells."""
    if radius <= 0.0:
        raise InputError("radius must be positive")
    if count < 1:
        raise InputError("count must be >= 1")
    goals: list[tuple[float, float]] = []
    budget = 100 * count
    for _ in range(budget):
        r = radius * math.sqrt(rng.random())
        theta = rng.random() * 2.0 * math.pi
        pt = (center[0] + r * math.cos(theta), center[1] + r * math.sin(theta))
        if occ_map.is_free(occ_map.world_to_cell(pt)):
            goals.append(pt)
            if len(goals) == count:
                return goals
    raise SamplingError(
        f"could not draw {count} free goals in {budget} attempts; "
        f"the disc may be mostly occupied")


# ---------------------------------------------------------------------------
# Grid planning
# ---------------------------------------------------------------------------

def astar_cells(occ_map: OccupancyMap, start_cell, goal_cell):
    """Optimal 8-connected path; returns (cells, (straights, diagonals)).

    Costs are 1 per straight step and sqrt(2) per diagonal; the counts
    pair represents the total exactly.
    """
    if not occ_map.is_free(start_cell):
        raise PlanningError(f"start cell {start_cell} is occupied or off-map")
    if not occ_map.is_free(goal_cell):
        raise PlanningError(f"goal cell {goal_cell} is occupied or off-map")
    if start_cell == goal_cell:
        return [start_cell], (0, 0)

    def heuristic(c) -> float:
        dx = abs(c[0] - goal_cell[0])
        dy = abs(c[1] - goal_cell[1])
        lo, hi = (dx, dy) if dx < dy else (dy, dx)
        return (hi - lo) + SQRT2 * lo

    free = ~occ_map.occupied
    nx, ny = occ_map.dims
    g_counts = {start_cell: (0, 0)}
    parent = {start_cell: None}
    heap = [(heuristic(start_cell), 0.0, start_cell)]
    closed = set()
    while heap:
        _, g_cur, cur = heapq.heappop(heap)
        if cur == goal_cell:
            cells = []
            c = cur
            while c is not None:
                cells.append(c)
                c = parent[c]
            return cells[::-1], g_counts[goal_cell]
        if cur in closed:
            continue
        closed.add(cur)
        ns, nd = g_counts[cur]
        ci, cj = cur
        for di, dj, diag in _MOVES:
            ni, nj = ci + di, cj + dj
            if not (0 <= ni < nx and 0 <= nj < ny) or not free[ni, nj]:
                continue
            # no corner cutting: a diagonal needs both adjacent sides free
            if diag and not (free[ci, nj] and free[ni, cj]):
                continue
            cand = (ns + (not diag), nd + diag)
            g_new = cand[0] + SQRT2 * cand[1]
            nb = (ni, nj)
            old = g_counts.get(nb)
            if old is None or g_new < old[0] + SQRT2 * old[1]:
                g_counts[nb] = cand
                parent[nb] = cur
                heapq.heappush(heap, (g_new + heuristic(nb), g_new, nb))
    raise PlanningError(f"no path from {start_cell} to {goal_cell}")


def _line_free(occ_map: OccupancyMap, a, b) -> bool:
    """Conservative free-space check along the segment of cell centers."""
    ax, ay = occ_map.cell_center(a)
    bx, by = occ_map.cell_center(b)
    length = math.hypot(bx - ax, by - ay)
    steps = max(int(math.ceil(length / (0.5 * occ_map.cell_size))), 1)
    for s in range(steps + 1):
        t = s / steps
        cell = occ_map.world_to_cell((ax + t * (bx - ax), ay + t * (by - ay)))
        if not occ_map.is_free(cell):
            return False
    return True


def shortcut_cells(occ_map: OccupancyMap, cells: list) -> list:
    """Greedy line-of-sight smoothing: jump to the furthest visible node."""
    if len(cells) <= 2:
        return list(cells)
    out = [cells[0]]
    i = 0
    while i < len(cells) - 1:
        j = len(cells) - 1
        while j > i + 1 and not _line_free(occ_map, cells[i], cells[j]):
            j -= 1
        out.append(cells[j])
        i = j
    return out


def plan_path(occ_map: OccupancyMap, start, goal, cruise_altitude: float,
              speed: float, clearance: float = 0.0) -> TrajectoryPlan:
    """Plan an obstacle-avoiding 3D plan between two world positions.

    The 2D grid path is smoothed and lifted to a constant altitude:
    `cruise_altitude`, raised to clear the tallest cell along the path
    by `clearance` when the map carries building heights. Yaw follows
    the path tangent.
    """
    if speed <= 0.0:
        raise InputError("speed must be positive")
    cells, _ = astar_cells(occ_map, occ_map.world_to_cell(start),
                           occ_map.world_to_cell(goal))
    alt = cruise_altitude
    if occ_map.heights is not None and cells:
        tallest = max(occ_map.heights[c] for c in cells)
        alt = max(alt, tallest + clearance)
    nodes = shortcut_cells(occ_map, cells)
    points = [occ_map.cell_center(c) for c in nodes]
    if len(points) == 1:
        points = [points[0], occ_map.cell_center(cells[-1])]
    return _polyline_plan(points, alt, speed)


def _polyline_plan(points: Sequence[tuple[float, float]], altitude: float,
                   speed: float, name: str = "") -> TrajectoryPlan:
    # drop consecutive duplicates, keep tangent yaw per segment
    kept = [points[0]]
    for p in points[1:]:
        if math.dist(p, kept[-1]) > 1e-9:
            kept.append(p)
    if len(kept) < 2:
        raise PlanningError("degenerate path (start equals goal cell)")
    wps = []
    for i, p in enumerate(kept):
        nxt = kept[i + 1] if i + 1 < len(kept) else kept[i - 1]
        yaw = math.atan2(nxt[1] - p[1], nxt[0] - p[0])
        if i + 1 == len(kept):
            yaw = wps[-1].yaw
        wps.append(Waypoint(position=(p[0], p[1], altitude), yaw=yaw,
                            target_speed=speed))
    return TrajectoryPlan(waypoints=tuple(wps), name=name)


# ---------------------------------------------------------------------------
# The coverage sweep
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CoverageMission:
    """Everything a single goal evaluation needs besides the goal itself."""

    windset: WindFieldSet
    power_model: object
    context: ContextFeatures
    controller: ControllerConfig = ControllerConfig()
    noise: DynamicsNoise = DynamicsNoise()
    sim: SimConfig = SimConfig()
    cruise_altitude: float = 40.0
    clearance: float = 10.0
    speed: float = 5.0
    one_way: bool = False
    workers: int = 1
    raster_resolution: int = 25


def out_and_back(plan: TrajectoryPlan) -> TrajectoryPlan:
    """Append the reverse leg so the mission returns to its start."""
    back = list(plan.waypoints[-2::-1])
    wps = list(plan.waypoints)
    for wp in back:
        ref = wps[-1]
        yaw = math.atan2(wp.position[1] - ref.position[1],
                         wp.position[0] - ref.position[0])
        wps.append(Waypoint(position=wp.position, yaw=yaw,
                            target_speed=wp.target_speed))
    return TrajectoryPlan(waypoints=tuple(wps), name=plan.name + "+return")


def coverage_map(base, radius: float, count: int, occ_map: OccupancyMap,
                 mission: CoverageMission, profile: RiskProfile, nu: float,
                 mc: McConfig) -> CoverageResult:
    """Evaluate CVaR for sampled goals around a base location.

    Planning failures are counted and skipped; their goals do not
    appear in the result. Each goal derives its own Monte Carlo seed
    from the master seed and its index, so results do not depend on
    evaluation order.
    """
    goals_rng = substream(mix_seed(mc.master_seed, 0), 0)
    goals = sample_goals(base, radius, count, occ_map, goals_rng)

    kept_goals: list[tuple[float, float]] = []
    values: list[float] = []
    failed = 0
    for gi, goal in enumerate(goals):
        try:
            plan = plan_path(occ_map, base, goal, mission.cruise_altitude,
                             mission.speed, mission.clearance)
        except PlanningError:
            failed += 1
            continue
        if not mission.one_way:
            plan = out_and_back(plan)
        goal_mc = McConfig(runs=mc.runs,
                           master_seed=mix_seed(mc.master_seed, 1 + gi),
                           histogram_bins=mc.histogram_bins,
                           include_incomplete=mc.include_incomplete)
        horizon = mission.sim
        samples = run_mc(plan, mission.controller, mission.noise, horizon,
                         mission.windset, mission.power_model, goal_mc,
                         mission.context, workers=mission.workers)
        risks = risk_transform(samples, profile)
        kept_goals.append(tuple(goal))
        values.append(cvar(risks, nu))

    grid = _idw_raster(kept_goals, values, base, radius,
                       mission.raster_resolution)
    metadata = {
        "planner": "grid A* (8-connected) with line-of-sight shortcutting",
        "out_and_back": not mission.one_way,
        "nu": nu,
        "master_seed": mc.master_seed,
        "goal_seed_derivation": "mix(master_seed, 1 + goal_index)",
        "notes": ["wind fields are a finite grid library scaled by the "
                  "sampled inlet; not per-sample CFD"],
    }
    return CoverageResult(goals=tuple(kept_goals), cvar_values=tuple(values),
                          failed_plans=failed, grid=grid, metadata=metadata)


def _idw_raster(goals, values, base, radius: float, resolution: int) -> dict:
    """Inverse-distance blend of goal CVaRs onto a regular raster."""
    xs = np.linspace(base[0] - radius, base[0] + radius, resolution)
    ys = np.linspace(base[1] - radius, base[1] + radius, resolution)
    raster = np.full((resolution, resolution), np.nan)
    if goals:
        g = np.asarray(goals)
        v = np.asarray(values)
        for i, x in enumerate(xs):
            d2 = (g[:, 0] - x) ** 2 + (g[:, 1] - ys[:, None]) ** 2
            w = 1.0 / np.maximum(d2, 1e-6)
            raster[:, i] = (w @ v) / w.sum(axis=1)
    return {"x": xs, "y": ys, "values": raster}


# ---------------------------------------------------------------------------
# Occupancy map file I/O: PGM (0 = free, >=128 = occupied) + JSON sidecar
# with `origin` and `cell_size`. Rows are written image-style, top row
# holding the highest y index.
# ---------------------------------------------------------------------------

def write_occupancy_pgm(occ_map: OccupancyMap, pgm_path, sidecar_path) -> None:
    nx, ny = occ_map.dims
    lines = ["P2", f"{nx} {ny}", "255"]
    for j in range(ny - 1, -1, -1):
        lines.append(" ".join("255" if occ_map.occupied[i, j] else "0"
                              for i in range(nx)))
    with open(pgm_path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")
    with open(sidecar_path, "w", encoding="utf-8") as fh:
        json.dump({"origin": list(occ_map.origin),
                   "cell_size": occ_map.cell_size}, fh, indent=1)
        fh.write("\n")


def read_occupancy_pgm(pgm_path, sidecar_path) -> OccupancyMap:
    with open(pgm_path, "rb") as fh:
        data = fh.read()
    tokens: list[bytes] = []
    pos = 0
    # header tokens with '#' comment support
    while len(tokens) < 4 and pos < len(data):
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    if len(tokens) < 4 or tokens[0] not in (b"P2", b"P5"):
        raise LoadError(f"{pgm_path}: not a P2/P5 PGM file")
    nx, ny, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    if tokens[0] == b"P5":
        pos += 1   # single whitespace after maxval
        raw = data[pos:pos + nx * ny]
        if len(raw) != nx * ny:
            raise LoadError(f"{pgm_path}: truncated pixel data")
        pixels = np.frombuffer(raw, dtype=np.uint8).astype(int)
    else:
        pixels = np.array([int(t) for t in data[pos:].split()], dtype=int)
        if pixels.size != nx * ny:
            raise LoadError(f"{pgm_path}: {pixels.size} pixels, "
                            f"expected {nx * ny}")
    img = pixels.reshape(ny, nx)
    occupied = np.zeros((nx, ny), dtype=bool)
    for row in range(ny):
        occupied[:, ny - 1 - row] = img[row] >= (maxval + 1) // 2
    with open(sidecar_path, "r", encoding="utf-8") as fh:
        side = json.load(fh)
    try:
        origin = tuple(float(v) for v in side["origin"])
        cell = float(side["cell_size"])
    except (KeyError, TypeError, ValueError) as e:
        raise LoadError(f"{sidecar_path}: bad sidecar ({e})") from e
    return OccupancyMap(origin=origin, cell_size=cell, dims=(nx, ny),
                        occupied=occupied)


def export_coverage(result: CoverageResult, goals_csv, raster_csv) -> None:
    lines = ["x,y,cvar"]
    for (x, y), v in zip(result.goals, result.cvar_values):
        lines.append(f"{fnum(x)},{fnum(y)},{fnum(v)}")
    with open(goals_csv, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    xs = result.grid["x"]
    ys = result.grid["y"]
    raster = result.grid["values"]
    lines = ["x,y,cvar"]
    for j, y in enumerate(ys):
        for i, x in enumerate(xs):
            lines.append(f"{fnum(x)},{fnum(y)},{fnum(raster[j, i])}")
    with open(raster_csv, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
