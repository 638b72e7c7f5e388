"""Shared domain types for vehicle state, plans and recorded flights.

Frame conventions used everywhere in this package:
    - inertial frame: x/y horizontal, z up; yaw measured counterclockwise
      from the inertial x axis, normalized to (-pi, pi]
    - body horizontal components are obtained by rotating the horizontal
      air-relative velocity by -yaw (body x points along the heading)
    - pitch is nose-up positive; angle of attack is approximated by pitch

The per-timestep feature vector follows the fixed column order
FEATURE_ORDER; the invariant context follows CONTEXT_ORDER. Trained
power models record the convention string so a mismatch is detectable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import InputError, LoadError

FEATURE_ORDER = ("airspeed", "airspeed_body_x", "airspeed_body_y",
                 "vertical_speed", "angle_of_attack")
CONTEXT_ORDER = ("air_density", "payload_mass")

# Recorded in exported model files; inference refuses mismatched exports.
FRAME_CONVENTION = "xy-body=R(-yaw)*(v-w)_h;z-up;yaw-ccw-from-x;alpha=pitch"

Vec3 = tuple[float, float, float]


def wrap_angle(a: float) -> float:
    """Normalize an angle to (-pi, pi]."""
    a = math.fmod(a, 2.0 * math.pi)
    if a <= -math.pi:
        a += 2.0 * math.pi
    elif a > math.pi:
        a -= 2.0 * math.pi
    return a


def fnum(x) -> str:
    """Shortest round-tripping decimal for a float-like value."""
    return repr(float(x))


@dataclass(frozen=True, slots=True)
class VehicleState:
    """Instantaneous vehicle state in the inertial frame."""

    time: float            # s, finite and non-negative
    position: Vec3         # m
    velocity: Vec3         # m/s, ground velocity
    yaw: float             # rad, in (-pi, pi]
    pitch: float           # rad, in [-pi/2, pi/2], nose-up positive

    def violations(self) -> list[str]:
        out = []
        if not (math.isfinite(self.time) and self.time >= 0.0):
            out.append("time finite and non-negative")
        if not all(math.isfinite(c) for c in (*self.position, *self.velocity)):
            out.append("position/velocity finite")
        if not (-math.pi < self.yaw <= math.pi):
            out.append("yaw in (-pi, pi]")
        if not (-math.pi / 2 <= self.pitch <= math.pi / 2):
            out.append("pitch in [-pi/2, pi/2]")
        return out


@dataclass(frozen=True, slots=True)
class Waypoint:
    position: Vec3
    yaw: float             # rad
    target_speed: float    # m/s, > 0


@dataclass(frozen=True)
class TrajectoryPlan:
    """Nominal path: ordered waypoints with yaw and target speed."""

    waypoints: tuple[Waypoint, ...]
    final_time_hint: float | None = None
    name: str = ""

    def __post_init__(self):
        if len(self.waypoints) < 2:
            raise InputError("trajectory plan needs at least 2 waypoints")
        for i, wp in enumerate(self.waypoints):
            if not wp.target_speed > 0.0:
                raise InputError(f"waypoint {i}: target_speed must be > 0")
        for i in range(len(self.waypoints) - 1):
            a = self.waypoints[i].position
            b = self.waypoints[i + 1].position
            if math.dist(a, b) == 0.0:
                raise InputError(f"waypoints {i} and {i + 1} are coincident")

    def segment_lengths(self) -> list[float]:
        pts = [wp.position for wp in self.waypoints]
        return [math.dist(pts[i], pts[i + 1]) for i in range(len(pts) - 1)]

    def mean_altitude(self) -> float:
        return sum(wp.position[2] for wp in self.waypoints) / len(self.waypoints)


@dataclass(frozen=True, slots=True)
class FeatureFrame:
    """Time-varying features consumed by the power models."""

    airspeed: float          # m/s, magnitude of 3D air-relative velocity
    airspeed_body_x: float   # m/s, horizontal air-relative, along heading
    airspeed_body_y: float   # m/s, horizontal air-relative, across heading
    vertical_speed: float    # m/s, vertical ground velocity
    angle_of_attack: float   # rad

    def as_array(self) -> np.ndarray:
        return np.array([self.airspeed, self.airspeed_body_x,
                         self.airspeed_body_y, self.vertical_speed,
                         self.angle_of_attack])

    def violations(self) -> list[str]:
        h2 = self.airspeed_body_x ** 2 + self.airspeed_body_y ** 2
        v2 = self.airspeed ** 2
        if self.airspeed < 0.0:
            return ["airspeed non-negative"]
        # airspeed is the full 3D magnitude, so it bounds the horizontal part
        if h2 > v2 * (1.0 + 1e-6) + 1e-12:
            return ["airspeed^2 >= body_x^2 + body_y^2"]
        return []


@dataclass(frozen=True, slots=True)
class ContextFeatures:
    """Time-invariant context: ambient air density and payload mass."""

    air_density: float    # kg/m^3
    payload_mass: float   # kg

    def as_array(self) -> np.ndarray:
        return np.array([self.air_density, self.payload_mass])

    def violations(self) -> list[str]:
        out = []
        if not (0.5 <= self.air_density <= 1.5):
            out.append("air_density in [0.5, 1.5]")
        if not (0.0 <= self.payload_mass < 20.0):
            out.append("payload_mass in [0, 20)")
        return out


@dataclass(frozen=True)
class ProcessedFlight:
    """A uniformly sampled recorded flight with features and measured power.

    ``times`` is optional; when the flight came from a log file the raw
    timestamps are kept so jittered sampling can be detected, otherwise
    the samples are taken to sit at ``i * sample_period``.
    """

    sample_period: float
    frames: tuple[FeatureFrame, ...]
    context: ContextFeatures
    measured_power: tuple[float, ...]   # W, all > 0
    yaw_series: tuple[float, ...]       # rad
    times: tuple[float, ...] | None = None
    flight_id: str = ""

    def __len__(self) -> int:
        return len(self.frames)

    def feature_matrix(self) -> np.ndarray:
        """(T, 5) array in FEATURE_ORDER."""
        return np.array([f.as_array() for f in self.frames])


def derive_features(state_history: Sequence[VehicleState],
                    wind_at_vehicle: Sequence[Vec3]) -> list[FeatureFrame]:
    """Turn a state history plus the wind seen at the vehicle into features.

    Per element: air-relative velocity is ground velocity minus wind,
    airspeed its 3D magnitude, body x/y the horizontal air-relative
    components rotated by -yaw, vertical speed the vertical ground
    velocity and angle of attack the pitch angle.
    """
    if len(state_history) != len(wind_at_vehicle):
        raise InputError("state history and wind series differ in length")
    if len(state_history) == 0:
        raise InputError("state history is empty")
    vel = np.array([s.velocity for s in state_history])
    yaw = np.array([s.yaw for s in state_history])
    pitch = np.array([s.pitch for s in state_history])
    wind = np.asarray(wind_at_vehicle, dtype=float)
    feats = _feature_matrix(vel, yaw, pitch, wind)
    return [FeatureFrame(*row) for row in feats]


def _feature_matrix(vel: np.ndarray, yaw: np.ndarray, pitch: np.ndarray,
                    wind: np.ndarray) -> np.ndarray:
    """Vectorized feature derivation; rows follow FEATURE_ORDER."""
    air = vel - wind
    airspeed = np.linalg.norm(air, axis=1)
    c, s = np.cos(yaw), np.sin(yaw)
    bx = c * air[:, 0] + s * air[:, 1]
    by = -s * air[:, 0] + c * air[:, 1]
    return np.column_stack([airspeed, bx, by, vel[:, 2], pitch])


def derive_feature_matrix(velocities, yaws, pitches, winds) -> np.ndarray:
    """Array-based feature derivation, (T, 5) in FEATURE_ORDER.

    Same definitions as derive_features; offered so ingestion tooling
    shares the exact frame conventions of this package.
    """
    vel = np.asarray(velocities, dtype=float)
    wind = np.asarray(winds, dtype=float)
    yaw = np.asarray(yaws, dtype=float)
    pitch = np.asarray(pitches, dtype=float)
    if vel.shape != wind.shape or vel.ndim != 2 or vel.shape[1] != 3:
        raise InputError("velocities and winds must both be (T, 3)")
    if yaw.shape != (vel.shape[0],) or pitch.shape != yaw.shape:
        raise InputError("yaws and pitches must be (T,)")
    return _feature_matrix(vel, yaw, pitch, wind)


def validate_flight(flight: ProcessedFlight) -> list[str]:
    """Return the list of violated invariants (empty means valid)."""
    report: list[str] = []
    n = len(flight.frames)
    if flight.sample_period <= 0.0:
        report.append("sample_period positive")
    if len(flight.measured_power) != n:
        report.append("measured_power length matches frames")
    if len(flight.yaw_series) != n:
        report.append("yaw_series length matches frames")
    if any(p <= 0.0 for p in flight.measured_power):
        report.append("measured_power positive")
    if flight.times is not None:
        if len(flight.times) != n:
            report.append("times length matches frames")
        else:
            gaps = np.diff(flight.times)
            if n > 1 and np.any(np.abs(gaps - flight.sample_period) > 1e-9):
                report.append("uniform sampling at sample_period")
    for f in flight.frames:
        v = f.violations()
        if v:
            report.append(f"frame invariant: {v[0]}")
            break
    report.extend(flight.context.violations())
    return report


# ---------------------------------------------------------------------------
# Canonical flight CSV: `# rho=<float> payload_kg=<float> dt=<float>` preamble
# then `time_s,v,vx,vy,vz,alpha,power_w,yaw` rows.
# ---------------------------------------------------------------------------

FLIGHT_CSV_HEADER = "time_s,v,vx,vy,vz,alpha,power_w,yaw"


def write_flight_csv(flight: ProcessedFlight, path) -> None:
    dt = flight.sample_period
    times = flight.times or tuple(i * dt for i in range(len(flight)))
    lines = [f"# rho={fnum(flight.context.air_density)} "
             f"payload_kg={fnum(flight.context.payload_mass)} dt={fnum(dt)}",
             FLIGHT_CSV_HEADER]
    for t, f, p, y in zip(times, flight.frames, flight.measured_power,
                          flight.yaw_series):
        lines.append(",".join(fnum(x) for x in
                              (t, f.airspeed, f.airspeed_body_x,
                               f.airspeed_body_y, f.vertical_speed,
                               f.angle_of_attack, p, y)))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_flight_csv(path) -> ProcessedFlight:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or not lines[0].startswith("#"):
        raise LoadError(f"{path}: missing '# rho=... payload_kg=... dt=...' preamble")
    meta = {}
    for tok in lines[0].lstrip("#").split():
        if "=" not in tok:
            raise LoadError(f"{path}: malformed preamble token {tok!r}")
        k, v = tok.split("=", 1)
        meta[k] = float(v)
    for key in ("rho", "payload_kg", "dt"):
        if key not in meta:
            raise LoadError(f"{path}: preamble missing {key!r}")
    body = lines[1:]
    if body and body[0].replace(" ", "") == FLIGHT_CSV_HEADER:
        body = body[1:]
    if not body:
        raise LoadError(f"{path}: no data rows")
    rows = np.array([[float(x) for x in ln.split(",")] for ln in body])
    if rows.shape[1] != 8:
        raise LoadError(f"{path}: expected 8 columns ({FLIGHT_CSV_HEADER})")
    frames = tuple(FeatureFrame(*r) for r in rows[:, 1:6])
    return ProcessedFlight(
        sample_period=meta["dt"],
        frames=frames,
        context=ContextFeatures(meta["rho"], meta["payload_kg"]),
        measured_power=tuple(rows[:, 6]),
        yaw_series=tuple(rows[:, 7]),
        times=tuple(rows[:, 0]),
        flight_id=str(path),
    )
