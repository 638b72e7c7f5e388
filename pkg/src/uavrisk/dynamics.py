"""Closed-loop point-mass simulation of a multirotor tracking a plan.

The vehicle is a 3D point mass with linear air-relative drag. A PD
tracking controller chases a reference point that moves along the
waypoint polyline at the segment target speed and holds at each
waypoint until the vehicle has captured it (entered the capture
radius), which guarantees every waypoint is visited. Commanded
acceleration saturates at the configured horizontal limit, vertical
speed is clamped, yaw slews toward the path tangent at the yaw rate
limit, and pitch follows the commanded horizontal acceleration (tilted
into the command, nose-up positive). Per-axis Gaussian acceleration
noise and wind (a constant-field lookup plus a body-frame turbulence
closure) act as disturbances.

Integration is semi-implicit Euler: velocity first, then position with
the updated velocity, so positions re-integrate exactly from the
stored velocities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigError
from .flight import TrajectoryPlan, VehicleState, wrap_angle

GRAVITY = 9.80665


@dataclass(frozen=True)
class ControllerConfig:
    position_gain: float = 2.0         # 1/s^2
    velocity_gain: float = 3.0         # 1/s
    max_horizontal_accel: float = 4.0  # m/s^2
    max_vertical_speed: float = 3.0    # m/s
    capture_radius: float = 2.5        # m
    yaw_rate_limit: float = 1.5        # rad/s

    def __post_init__(self):
        for name in ("position_gain", "velocity_gain", "max_horizontal_accel",
                     "max_vertical_speed", "capture_radius", "yaw_rate_limit"):
            if getattr(self, name) <= 0.0:
                raise ConfigError(f"controller {name} must be positive")


@dataclass(frozen=True)
class DynamicsNoise:
    """Standard deviations of the per-axis additive acceleration noise."""

    accel_std: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if any(s < 0.0 for s in self.accel_std):
            raise ConfigError("acceleration noise stds must be non-negative")


@dataclass(frozen=True)
class SimConfig:
    dt: float = 0.1
    max_sim_time: float = 600.0
    drag_coefficient_per_mass: float = 0.3   # 1/s, linear air-relative drag

    def __post_init__(self):
        if not (0.0 < self.dt <= 0.5):
            raise ConfigError("dt must be in (0, 0.5]")
        if self.max_sim_time <= 0.0:
            raise ConfigError("max_sim_time must be positive")
        if self.drag_coefficient_per_mass < 0.0:
            raise ConfigError("drag coefficient must be non-negative")


@dataclass(frozen=True)
class FlightArrays:
    """Raw simulation output: row k is the state at time k * dt."""

    times: np.ndarray       # (T,)
    positions: np.ndarray   # (T, 3)
    velocities: np.ndarray  # (T, 3)
    yaws: np.ndarray        # (T,)
    pitches: np.ndarray     # (T,)
    winds: np.ndarray       # (T, 3) total wind seen at the vehicle
    captured: bool

    def __len__(self) -> int:
        return len(self.times)

    def states(self) -> list[VehicleState]:
        return [VehicleState(time=float(t), position=tuple(p),
                             velocity=tuple(v), yaw=float(y), pitch=float(pi))
                for t, p, v, y, pi in zip(self.times, self.positions,
                                          self.velocities, self.yaws,
                                          self.pitches)]


@dataclass(frozen=True)
class FlightResult:
    states: list[VehicleState]
    winds: np.ndarray
    captured: bool


def plan_time_estimate(plan: TrajectoryPlan) -> float:
    """Nominal duration: segment length over segment target speed.

    The speed of a segment is the target speed of the waypoint it leads
    to. Used (times a safety factor) for default simulation horizons.
    """
    total = 0.0
    for i, length in enumerate(plan.segment_lengths()):
        total += length / plan.waypoints[i + 1].target_speed
    return total


def simulate_flight(plan: TrajectoryPlan, ctrl: ControllerConfig,
                    noise: DynamicsNoise, sim: SimConfig,
                    wind_lookup: Callable, turbulence: Callable,
                    rng: np.random.Generator) -> FlightResult:
    """Simulate one flight; `wind_lookup(position)` gives the constant
    wind, `turbulence()` one body-axis gust sample per step.

    Returns the state history. If the final waypoint is not captured
    before max_sim_time the result is flagged incomplete but still
    returned.
    """
    arrays = simulate_flight_arrays(plan, ctrl, noise, sim, wind_lookup,
                                    turbulence, rng)
    return FlightResult(states=arrays.states(), winds=arrays.winds,
                        captured=arrays.captured)


def simulate_flight_arrays(plan: TrajectoryPlan, ctrl: ControllerConfig,
                           noise: DynamicsNoise, sim: SimConfig,
                           wind_lookup: Callable, turbulence: Callable,
                           rng: np.random.Generator) -> FlightArrays:
    dt = sim.dt
    max_steps = max(int(round(sim.max_sim_time / dt)), 1)
    eps = rng.standard_normal((max_steps, 3))
    sx, sy, sz = noise.accel_std
    if sx == 0.0 and sy == 0.0 and sz == 0.0:
        noise_rows = None
    else:
        noise_rows = (eps * np.array([sx, sy, sz])).tolist()

    wps = [wp.position for wp in plan.waypoints]
    seg_speeds = [plan.waypoints[i + 1].target_speed
                  for i in range(len(wps) - 1)]
    n_seg = len(wps) - 1

    kp = ctrl.position_gain
    kv = ctrl.velocity_gain
    a_max = ctrl.max_horizontal_accel
    vz_max = ctrl.max_vertical_speed
    cap_r2 = ctrl.capture_radius ** 2
    yaw_step = ctrl.yaw_rate_limit * dt
    drag = sim.drag_coefficient_per_mass

    def segment_tangent(s: int) -> tuple[float, float, float]:
        a, b = wps[s], wps[s + 1]
        length = math.dist(a, b)
        return tuple((q - p) / length for p, q in zip(a, b))

    # reference carrot: holding at waypoint `seg` before flying segment seg
    seg = 0
    arc = 0.0
    holding = True
    tangent = segment_tangent(0)
    seg_len = math.dist(wps[0], wps[1])
    yaw = wrap_angle(plan.waypoints[0].yaw)
    yaw_target = (math.atan2(tangent[1], tangent[0])
                  if tangent[0] ** 2 + tangent[1] ** 2 > 1e-12 else yaw)

    px, py, pz = wps[0]
    vx = vy = vz = 0.0
    fx, fy, fz = wps[-1]

    times = [0.0]
    positions = [(px, py, pz)]
    velocities = [(0.0, 0.0, 0.0)]
    yaws = [yaw]
    pitches: list[float] = []
    winds: list[tuple[float, float, float]] = []
    captured = False

    for k in range(max_steps):
        wcx, wcy, wcz = wind_lookup((px, py, pz))
        tu, tv, tw = turbulence()
        cy_, sy_ = math.cos(yaw), math.sin(yaw)
        # body-axis gusts rotated to the inertial frame by the current yaw
        wx = wcx + cy_ * tu - sy_ * tv
        wy = wcy + sy_ * tu + cy_ * tv
        wz = wcz + tw
        winds.append((wx, wy, wz))

        # advance the reference carrot
        if holding and seg < n_seg:
            dxw = wps[seg][0] - px
            dyw = wps[seg][1] - py
            dzw = wps[seg][2] - pz
            if dxw * dxw + dyw * dyw + dzw * dzw <= cap_r2:
                holding = False
                arc = 0.0
                tangent = segment_tangent(seg)
                seg_len = math.dist(wps[seg], wps[seg + 1])
                if tangent[0] ** 2 + tangent[1] ** 2 > 1e-12:
                    yaw_target = math.atan2(tangent[1], tangent[0])
        if holding:
            rx, ry, rz = wps[seg]
            vrx = vry = vrz = 0.0
        else:
            arc += seg_speeds[seg] * dt
            if arc >= seg_len:
                seg += 1
                holding = True
                rx, ry, rz = wps[seg]
                vrx = vry = vrz = 0.0
            else:
                a = wps[seg]
                rx = a[0] + tangent[0] * arc
                ry = a[1] + tangent[1] * arc
                rz = a[2] + tangent[2] * arc
                spd = seg_speeds[seg]
                vrx, vry, vrz = (tangent[0] * spd, tangent[1] * spd,
                                 tangent[2] * spd)
        if vrz > vz_max:
            vrz = vz_max
        elif vrz < -vz_max:
            vrz = -vz_max

        # PD command with horizontal saturation and vertical speed clamp
        ax = kp * (rx - px) + kv * (vrx - vx)
        ay = kp * (ry - py) + kv * (vry - vy)
        az = kp * (rz - pz) + kv * (vrz - vz)
        ah = math.hypot(ax, ay)
        if ah > a_max:
            scale = a_max / ah
            ax *= scale
            ay *= scale
            ah = a_max
        az_hi = (vz_max - vz) / dt
        az_lo = (-vz_max - vz) / dt
        if az > az_hi:
            az = az_hi
        elif az < az_lo:
            az = az_lo

        # attitude: tilt into the horizontal command, slew yaw to tangent
        pitch_mag = math.atan(ah / GRAVITY)
        along = ax * cy_ + ay * sy_
        pitches.append(-pitch_mag if along >= 0.0 else pitch_mag)
        dyaw = wrap_angle(yaw_target - yaw)
        if dyaw > yaw_step:
            dyaw = yaw_step
        elif dyaw < -yaw_step:
            dyaw = -yaw_step
        yaw = wrap_angle(yaw + dyaw)

        # semi-implicit Euler with linear air-relative drag
        ddx = ax - drag * (vx - wx)
        ddy = ay - drag * (vy - wy)
        ddz = az - drag * (vz - wz)
        if noise_rows is not None:
            nr = noise_rows[k]
            ddx += nr[0]
            ddy += nr[1]
            ddz += nr[2]
        vx += ddx * dt
        vy += ddy * dt
        vz += ddz * dt
        px += vx * dt
        py += vy * dt
        pz += vz * dt

        times.append((k + 1) * dt)
        positions.append((px, py, pz))
        velocities.append((vx, vy, vz))
        yaws.append(yaw)

        # capture only once the reference has finished the whole path;
        # the final waypoint may coincide with the start (return trips)
        if seg >= n_seg:
            dxf = fx - px
            dyf = fy - py
            dzf = fz - pz
            if dxf * dxf + dyf * dyf + dzf * dzf <= cap_r2:
                captured = True
                break

    # The final state never drives a step; pair it with the constant wind
    # at the final position and carry the last attitude. Left-rectangle
    # energy integration never consumes this frame.
    winds.append(tuple(wind_lookup((px, py, pz))))
    pitches.append(pitches[-1] if pitches else 0.0)

    return FlightArrays(
        times=np.array(times),
        positions=np.array(positions),
        velocities=np.array(velocities),
        yaws=np.array(yaws),
        pitches=np.array(pitches),
        winds=np.array(winds),
        captured=captured,
    )
