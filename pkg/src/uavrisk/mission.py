"""Mission configuration: a single YAML document describing one
assessment (files, distributions, profiles, engine settings).

The document is validated structurally before any computation; the
first violated constraint is reported by its dotted path. The merged
config has a canonical JSON form whose SHA-256 is embedded in every
artifact so outputs can be traced back to their exact inputs.
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
import os
from typing import Any

import yaml

from .coverage import OccupancyMap, read_occupancy_pgm
from .dynamics import ControllerConfig, DynamicsNoise, SimConfig, plan_time_estimate
from .errors import ConfigError, LoadError
from .flight import ContextFeatures, TrajectoryPlan, Waypoint, fnum
from .montecarlo import McConfig
from .power import load_coefficients, load_weights
from .risk import RiskProfile
from .wind import InletDistribution, WindFieldSet, read_wind_grid

DEFAULT_CONFIG: dict = {
    "mission": {
        "name": "mission",
        "output_dir": "out",
        "workers": None,   # falls back to UAVRISK_WORKERS, then 1
    },
    "trajectory": "trajectory.csv",
    "wind": {
        "grids": ["wind_grid.csv"],
        "inlet": {
            "mean_angle_deg": 0.0,
            "mean_speed": 3.0,
            "std_angle_deg": 0.0,
            "std_speed": 0.0,
        },
    },
    "power_model": {
        "path": "model.json",
    },
    "context": {
        "air_density": 1.15,
        "payload_kg": 0.0,
    },
    "risk": {
        "gamma_j": 64000.0,
        "lambda_floor_j": 92340.0,
        "battery_capacity_j": 369360.0,
        "nu": 0.95,
    },
    "mc": {
        "runs": 1000,
        "master_seed": 2024,
        "histogram_bins": 30,
        "include_incomplete": True,
    },
    "sim": {
        "dt": 0.1,
        "max_sim_time": None,   # null -> 3x the nominal plan duration
        "drag_coefficient_per_mass": 0.3,
    },
    "controller": {
        "position_gain": 2.0,
        "velocity_gain": 3.0,
        "max_horizontal_accel": 4.0,
        "max_vertical_speed": 3.0,
        "capture_radius": 2.5,
        "yaw_rate_limit": 1.5,
    },
    "noise": {
        "accel_std": [0.3, 0.3, 0.15],
    },
    "coverage": {
        "occupancy_map": "map.pgm",
        "center": [0.0, 0.0],
        "radius": 100.0,
        "goals": 20,
        "cruise_altitude": 40.0,
        "clearance": 10.0,
        "speed": 5.0,
        "one_way": False,
        "raster_resolution": 25,
    },
    "metrics": {
        "yaw_threshold_deg": 15.0,
        "dwell_s": 1.0,
    },
}


def _merge(base: dict, override: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        where = f"{path}.{key}" if path else key
        if key not in base:
            raise ConfigError(f"unknown config key {where!r}")
        if isinstance(base[key], dict) and not isinstance(value, dict):
            raise ConfigError(f"{where} must be a section")
        if isinstance(base[key], dict):
            out[key] = _merge(base[key], value, where)
        else:
            out[key] = value
    return out


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ConfigError(message)


def _is_num(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) \
        and math.isfinite(x)


def validate_config(cfg: dict) -> None:
    """Structural validation; raises ConfigError naming the first violation."""
    _require(isinstance(cfg["mission"]["name"], str), "mission.name must be a string")
    w = cfg["mission"]["workers"]
    _require(w is None or (isinstance(w, int) and w >= 1),
             "mission.workers must be null or a positive integer")
    inlet = cfg["wind"]["inlet"]
    for key in ("mean_angle_deg", "mean_speed", "std_angle_deg", "std_speed"):
        _require(_is_num(inlet[key]), f"wind.inlet.{key} must be a number")
    _require(inlet["mean_speed"] >= 0, "wind.inlet.mean_speed must be >= 0")
    _require(inlet["std_angle_deg"] >= 0 and inlet["std_speed"] >= 0,
             "wind.inlet std deviations must be >= 0")
    grids = cfg["wind"]["grids"]
    _require(isinstance(grids, list) and grids
             and all(isinstance(g, str) for g in grids),
             "wind.grids must be a non-empty list of file paths")
    rk = cfg["risk"]
    for key in ("gamma_j", "lambda_floor_j", "battery_capacity_j"):
        _require(_is_num(rk[key]) and rk[key] > 0, f"risk.{key} must be > 0")
    _require(_is_num(rk["nu"]) and 0 < rk["nu"] < 1,
             "risk.nu must lie strictly in (0, 1)")
    ctx = cfg["context"]
    _require(_is_num(ctx["air_density"]) and 0.5 <= ctx["air_density"] <= 1.5,
             "context.air_density must lie in [0.5, 1.5]")
    _require(_is_num(ctx["payload_kg"]) and 0 <= ctx["payload_kg"] < 20,
             "context.payload_kg must lie in [0, 20)")
    mc = cfg["mc"]
    _require(isinstance(mc["runs"], int) and mc["runs"] >= 1,
             "mc.runs must be an integer >= 1")
    _require(isinstance(mc["master_seed"], int), "mc.master_seed must be an integer")
    _require(isinstance(mc["histogram_bins"], int) and mc["histogram_bins"] >= 2,
             "mc.histogram_bins must be an integer >= 2")
    _require(isinstance(mc["include_incomplete"], bool),
             "mc.include_incomplete must be a boolean")
    sim = cfg["sim"]
    _require(_is_num(sim["dt"]) and 0 < sim["dt"] <= 0.5,
             "sim.dt must lie in (0, 0.5]")
    _require(sim["max_sim_time"] is None
             or (_is_num(sim["max_sim_time"]) and sim["max_sim_time"] > 0),
             "sim.max_sim_time must be null or > 0")
    _require(_is_num(sim["drag_coefficient_per_mass"])
             and sim["drag_coefficient_per_mass"] >= 0,
             "sim.drag_coefficient_per_mass must be >= 0")
    for key, value in cfg["controller"].items():
        _require(_is_num(value) and value > 0, f"controller.{key} must be > 0")
    std = cfg["noise"]["accel_std"]
    _require(isinstance(std, list) and len(std) == 3
             and all(_is_num(s) and s >= 0 for s in std),
             "noise.accel_std must be three non-negative numbers")
    cov = cfg["coverage"]
    _require(isinstance(cov["center"], list) and len(cov["center"]) == 2
             and all(_is_num(c) for c in cov["center"]),
             "coverage.center must be [x, y]")
    _require(_is_num(cov["radius"]) and cov["radius"] > 0,
             "coverage.radius must be > 0")
    _require(isinstance(cov["goals"], int) and cov["goals"] >= 1,
             "coverage.goals must be an integer >= 1")
    for key in ("cruise_altitude", "speed"):
        _require(_is_num(cov[key]) and cov[key] > 0, f"coverage.{key} must be > 0")
    _require(_is_num(cov["clearance"]) and cov["clearance"] >= 0,
             "coverage.clearance must be >= 0")
    _require(isinstance(cov["one_way"], bool), "coverage.one_way must be a boolean")
    _require(isinstance(cov["raster_resolution"], int)
             and cov["raster_resolution"] >= 2,
             "coverage.raster_resolution must be an integer >= 2")
    met = cfg["metrics"]
    _require(_is_num(met["yaw_threshold_deg"]) and met["yaw_threshold_deg"] > 0,
             "metrics.yaw_threshold_deg must be > 0")
    _require(_is_num(met["dwell_s"]) and met["dwell_s"] > 0,
             "metrics.dwell_s must be > 0")


def load_mission_config(path) -> dict:
    """Read, merge with defaults and validate a mission YAML document."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            user = yaml.safe_load(fh) or {}
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except yaml.YAMLError as e:
        raise ConfigError(f"{path}: YAML parse error: {e}")
    if not isinstance(user, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    cfg = _merge(DEFAULT_CONFIG, user)
    validate_config(cfg)
    cfg["_base_dir"] = os.path.dirname(os.path.abspath(path))
    return cfg


def config_hash(cfg: dict) -> str:
    clean = {k: v for k, v in cfg.items() if not k.startswith("_")}
    return hashlib.sha256(
        json.dumps(clean, sort_keys=True, separators=(",", ":")).encode()
    ).hexdigest()[:16]


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()[:16]


def resolve(cfg: dict, path: str) -> str:
    if os.path.isabs(path):
        return path
    return os.path.join(cfg.get("_base_dir", "."), path)


def _existing(cfg: dict, path: str, what: str) -> str:
    full = resolve(cfg, path)
    if not os.path.exists(full):
        raise ConfigError(f"{what} file does not exist: {full}")
    return full


# ---------------------------------------------------------------------------
# Trajectory file: `# name=<str>` preamble then `x,y,z,yaw_deg,speed` rows.
# ---------------------------------------------------------------------------

TRAJECTORY_CSV_HEADER = "x,y,z,yaw_deg,speed"


def write_trajectory_csv(plan: TrajectoryPlan, path) -> None:
    lines = [f"# name={plan.name}", TRAJECTORY_CSV_HEADER]
    for wp in plan.waypoints:
        x, y, z = wp.position
        lines.append(f"{fnum(x)},{fnum(y)},{fnum(z)},"
                     f"{fnum(math.degrees(wp.yaw))},{fnum(wp.target_speed)}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_trajectory_csv(path) -> TrajectoryPlan:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    name = ""
    if lines and lines[0].startswith("#"):
        head = lines.pop(0).lstrip("#").strip()
        if head.startswith("name="):
            name = head[len("name="):]
    if lines and lines[0].replace(" ", "") == TRAJECTORY_CSV_HEADER:
        lines.pop(0)
    wps = []
    for i, ln in enumerate(lines):
        parts = ln.split(",")
        if len(parts) != 5:
            raise LoadError(f"{path}: row {i}: expected 5 columns "
                            f"({TRAJECTORY_CSV_HEADER})")
        x, y, z, yaw_deg, speed = (float(p) for p in parts)
        wps.append(Waypoint(position=(x, y, z), yaw=math.radians(yaw_deg),
                            target_speed=speed))
    if len(wps) < 2:
        raise LoadError(f"{path}: a plan needs at least 2 waypoints")
    return TrajectoryPlan(waypoints=tuple(wps), name=name or str(path))


# ---------------------------------------------------------------------------
# Builders from the validated config
# ---------------------------------------------------------------------------

def build_plan(cfg: dict) -> tuple[TrajectoryPlan, dict]:
    path = _existing(cfg, cfg["trajectory"], "trajectory")
    return read_trajectory_csv(path), {os.path.basename(path): file_sha256(path)}


def build_windset(cfg: dict) -> tuple[WindFieldSet, dict]:
    hashes = {}
    grids = []
    for rel in cfg["wind"]["grids"]:
        path = _existing(cfg, rel, "wind grid")
        grids.append(read_wind_grid(path))
        hashes[os.path.basename(path)] = file_sha256(path)
    inlet = cfg["wind"]["inlet"]
    dist = InletDistribution(mean_angle=inlet["mean_angle_deg"],
                             mean_speed=inlet["mean_speed"],
                             std_angle=inlet["std_angle_deg"],
                             std_speed=inlet["std_speed"])
    return WindFieldSet(grids=tuple(grids), inlet=dist), hashes


def load_power_model(cfg: dict):
    """Load either weight or coefficient exports (sniffed by content)."""
    path = _existing(cfg, cfg["power_model"]["path"], "power model")
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as e:
            raise LoadError(f"{path}: JSON parse error at byte {e.pos}: {e.msg}")
    if isinstance(doc, dict) and "blocks" in doc:
        model = load_weights(path)
    elif isinstance(doc, dict) and "beta" in doc:
        model = load_coefficients(path)
    else:
        raise LoadError(f"{path}: neither a weight export (blocks) nor a "
                        f"coefficient export (beta)")
    return model, {os.path.basename(path): file_sha256(path)}


def build_context(cfg: dict) -> ContextFeatures:
    return ContextFeatures(air_density=cfg["context"]["air_density"],
                           payload_mass=cfg["context"]["payload_kg"])


def build_risk_profile(cfg: dict) -> RiskProfile:
    return RiskProfile(gamma=cfg["risk"]["gamma_j"],
                       lambda_floor=cfg["risk"]["lambda_floor_j"],
                       battery_capacity=cfg["risk"]["battery_capacity_j"])


def build_mc(cfg: dict) -> McConfig:
    return McConfig(runs=cfg["mc"]["runs"],
                    master_seed=cfg["mc"]["master_seed"],
                    histogram_bins=cfg["mc"]["histogram_bins"],
                    include_incomplete=cfg["mc"]["include_incomplete"])


def build_sim(cfg: dict, plan: TrajectoryPlan | None = None) -> SimConfig:
    horizon = cfg["sim"]["max_sim_time"]
    if horizon is None:
        if plan is None:
            horizon = 600.0
        else:
            horizon = 3.0 * plan_time_estimate(plan)
    return SimConfig(dt=cfg["sim"]["dt"], max_sim_time=horizon,
                     drag_coefficient_per_mass=cfg["sim"]
                     ["drag_coefficient_per_mass"])


def build_controller(cfg: dict) -> ControllerConfig:
    return ControllerConfig(**cfg["controller"])


def build_noise(cfg: dict) -> DynamicsNoise:
    return DynamicsNoise(accel_std=tuple(cfg["noise"]["accel_std"]))


def build_occupancy(cfg: dict) -> tuple[OccupancyMap, dict]:
    pgm = _existing(cfg, cfg["coverage"]["occupancy_map"], "occupancy map")
    sidecar = os.path.splitext(pgm)[0] + ".json"
    if not os.path.exists(sidecar):
        raise ConfigError(f"occupancy map sidecar does not exist: {sidecar}")
    occ = read_occupancy_pgm(pgm, sidecar)
    return occ, {os.path.basename(pgm): file_sha256(pgm)}


def workers_from(cfg: dict) -> int:
    w = cfg["mission"]["workers"]
    if w is not None:
        return w
    env = os.environ.get("UAVRISK_WORKERS", "")
    if env.isdigit() and int(env) >= 1:
        return int(env)
    return 1
