"""Synthetic raw corpus in the published single-CSV layout.

Stands in for the real flight logs when they are not on disk: simple
kinematic circuits (triangular or random multi-leg) flown through a
gusty constant wind, with a physically flavored latent power law. The
power has a first-order motor lag, a cubic airspeed term and an
attitude-magnitude term, so a temporal model has a real edge over a
static polynomial baseline, plus multiplicative measurement noise that
sets an irreducible error floor.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .quat import quaternion_from_yaw_pitch

GRAVITY = 9.80665
VEHICLE_MASS_KG = 3.07


@dataclass(frozen=True)
class SynthConfig:
    n_triangular: int = 50
    n_random: int = 6
    sample_rate_hz: float = 4.0
    seed: int = 20240
    noise_frac: float = 0.03
    motor_lag_s: float = 1.5


def latent_power(v_air_h, v_air_mag, vz, pitch, payload_kg, dt):
    """Demanded power before motor lag, W. The gust-response term makes
    power depend on the airspeed trend, not just its instantaneous
    value, so feature history carries real signal."""
    m = VEHICLE_MASS_KG + payload_kg
    hover = 118.0 + 62.0 * m
    climb = np.where(vz > 0.0, 54.0 * vz, 16.0 * vz)
    surge = np.maximum(np.gradient(v_air_mag, dt), 0.0)
    return (hover + 2.1 * v_air_h ** 2 + 0.085 * v_air_mag ** 3
            + climb + 170.0 * np.abs(pitch) + 55.0 * surge)


def _legs_for_route(rng, route: str):
    if route == "triangular":
        side = rng.uniform(150.0, 280.0)
        heading0 = rng.uniform(0.0, 2.0 * math.pi)
        return [(heading0 + k * 2.0 * math.pi / 3.0, side) for k in range(3)]
    n = int(rng.integers(4, 7))
    return [(rng.uniform(0.0, 2.0 * math.pi), rng.uniform(80.0, 220.0))
            for _ in range(n)]


def generate_flight(rng, flight_id: int, route: str, cfg: SynthConfig) -> pd.DataFrame:
    dt = 1.0 / cfg.sample_rate_hz
    speed = rng.uniform(4.0, 11.0)
    payload_g = float(rng.choice([0.0, 250.0, 500.0]))
    altitude = rng.uniform(40.0, 90.0)
    wind_mean = rng.uniform(1.0, 5.0)
    wind_dir = rng.uniform(0.0, 2.0 * math.pi)

    # leg-wise velocity profile with trapezoidal ramps, plus an initial
    # climb and a final descent segment
    accel = 2.0
    vels, yaws = [], []

    def push(v, yaw):
        vels.append(v)
        yaws.append(yaw)

    legs = _legs_for_route(rng, route)
    climb_t = altitude / 2.0
    for _ in range(int(climb_t / dt)):
        push((0.0, 0.0, 2.0), legs[0][0])
    for heading, length in legs:
        direction = (math.cos(heading), math.sin(heading))
        dist = 0.0
        v = 0.0
        while dist < length:
            v = min(v + accel * dt, speed)
            if dist > length - v * v / (2 * accel):
                v = max(v - accel * dt, 0.8)
            push((direction[0] * v, direction[1] * v, 0.0), heading)
            dist += v * dt
    for _ in range(int(climb_t / dt)):
        push((0.0, 0.0, -2.0), yaws[-1])

    n = len(vels)
    times = np.arange(n) * dt   # index-based stamps, like a real logger
    vels = np.asarray(vels)
    yaws = np.unwrap(np.asarray(yaws))

    # gusty wind: constant mean plus an OU fluctuation in both components
    theta, sigma = 0.35, 0.45
    gust = np.zeros((n, 2))
    for k in range(1, n):
        gust[k] = gust[k - 1] * (1 - theta * dt) + \
            sigma * math.sqrt(dt) * rng.standard_normal(2)
    wind_vec = np.column_stack([
        wind_mean * math.cos(wind_dir) + gust[:, 0],
        wind_mean * math.sin(wind_dir) + gust[:, 1]])

    air = vels[:, :2] - wind_vec
    v_air_h = np.linalg.norm(air, axis=1)
    v_air_mag = np.sqrt(v_air_h ** 2 + vels[:, 2] ** 2)
    a_along = np.gradient(np.linalg.norm(vels[:, :2], axis=1), dt)
    pitch = -np.arctan((0.016 * v_air_h ** 2 + 0.32 * a_along) / GRAVITY)
    pitch = np.clip(pitch, -0.5, 0.5)

    demanded = latent_power(v_air_h, v_air_mag, vels[:, 2], pitch,
                            payload_g * 1e-3, dt)
    power = np.empty(n)
    power[0] = demanded[0]
    lag = dt / cfg.motor_lag_s
    for k in range(1, n):
        power[k] = power[k - 1] + lag * (demanded[k] - power[k - 1])
    power *= 1.0 + cfg.noise_frac * rng.standard_normal(n)
    power = np.maximum(power, 40.0)

    voltage = 22.4 - 1.2 * (times / times[-1]) + 0.03 * rng.standard_normal(n)
    current = power / voltage
    qx, qy, qz, qw = quaternion_from_yaw_pitch(yaws, pitch)
    positions = np.cumsum(vels * dt, axis=0)
    positions[:, 2] += altitude

    wind_speed_meas = np.linalg.norm(wind_vec, axis=1)
    wind_angle_meas = np.degrees(np.arctan2(wind_vec[:, 1], wind_vec[:, 0]))

    return pd.DataFrame({
        "flight": flight_id,
        "time": times,
        "wind_speed": wind_speed_meas,
        "wind_angle": wind_angle_meas,
        "battery_voltage": voltage,
        "battery_current": current,
        "position_x": positions[:, 0],
        "position_y": positions[:, 1],
        "position_z": positions[:, 2],
        "orientation_x": qx,
        "orientation_y": qy,
        "orientation_z": qz,
        "orientation_w": qw,
        "velocity_x": vels[:, 0],
        "velocity_y": vels[:, 1],
        "velocity_z": vels[:, 2],
        "angular_x": 0.0,
        "angular_y": 0.0,
        "angular_z": np.gradient(yaws, dt),
        "linear_acceleration_x": np.gradient(vels[:, 0], dt),
        "linear_acceleration_y": np.gradient(vels[:, 1], dt),
        "linear_acceleration_z": np.gradient(vels[:, 2], dt),
        "speed": speed,
        "payload": payload_g,
        "altitude": altitude,
        "date": "2024-01-01",
        "time_day": "12:00:00",
        "route": route,
        "pressure": 101325.0 * rng.uniform(0.97, 1.01),
        "temperature": rng.uniform(278.0, 298.0),
    })


def generate_corpus(out_dir, cfg: SynthConfig = SynthConfig()) -> str:
    """Write flights.csv in the published layout; returns the file path."""
    rng = np.random.default_rng(cfg.seed)
    frames = []
    fid = 1
    for _ in range(cfg.n_triangular):
        frames.append(generate_flight(rng, fid, "triangular", cfg))
        fid += 1
    for _ in range(cfg.n_random):
        frames.append(generate_flight(rng, fid, "random", cfg))
        fid += 1
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "flights.csv")
    pd.concat(frames, ignore_index=True).to_csv(path, index=False)
    return path
