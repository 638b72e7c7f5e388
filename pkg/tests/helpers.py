"""Shared fixture builders for the test suite."""

from __future__ import annotations

import numpy as np

from uavrisk.flight import ContextFeatures, FeatureFrame, ProcessedFlight, \
    TrajectoryPlan, Waypoint
from uavrisk.power import ConvLayer, ResidualBlock, TcnWeights
from uavrisk.wind import InletDistribution, WindFieldSet, WindGrid


def random_weights(rng: np.random.Generator, n_blocks: int = 2,
                   channels: int = 8, kernel: int = 2, stacks: int = 1,
                   scale: float = 0.4, sample_period: float = 0.1) -> TcnWeights:
    """Random but structurally valid TCN weights."""
    blocks = []
    prev = 5
    per_stack = max(n_blocks // stacks, 1)
    for b in range(n_blocks):
        dilation = 2 ** (b % per_stack)
        convs = []
        cin = prev
        for _ in range(2):
            convs.append(ConvLayer(
                kernel_size=kernel, dilation=dilation, in_channels=cin,
                out_channels=channels,
                weights=rng.normal(0, scale, (channels, cin, kernel)),
                bias=rng.normal(0, scale, channels)))
            cin = channels
        if prev != channels:
            pw = rng.normal(0, scale, (channels, prev))
            pb = rng.normal(0, scale, channels)
        else:
            pw = pb = None
        blocks.append(ResidualBlock(convs[0], convs[1], pw, pb))
        prev = channels
    return TcnWeights(
        feature_means=rng.normal(0, 1, 5),
        feature_stds=rng.uniform(0.5, 2.0, 5),
        context_means=np.array([1.1, 0.5]),
        context_stds=np.array([0.1, 0.6]),
        target_mean=rng.uniform(200, 400),
        target_std=rng.uniform(20, 80),
        blocks=tuple(blocks),
        head_weights=rng.normal(0, scale, prev + 2),
        head_bias=rng.normal(0, scale),
        sample_period_s=sample_period,
    )


def zero_weights(n_blocks: int = 2, channels: int = 8, kernel: int = 2,
                 head_bias: float = 0.0, target_mean: float = 300.0,
                 target_std: float = 50.0) -> TcnWeights:
    blocks = []
    prev = 5
    for b in range(n_blocks):
        dilation = 2 ** b
        convs = []
        cin = prev
        for _ in range(2):
            convs.append(ConvLayer(
                kernel_size=kernel, dilation=dilation, in_channels=cin,
                out_channels=channels,
                weights=np.zeros((channels, cin, kernel)),
                bias=np.zeros(channels)))
            cin = channels
        pw = np.zeros((channels, prev)) if prev != channels else None
        pb = np.zeros(channels) if prev != channels else None
        blocks.append(ResidualBlock(convs[0], convs[1], pw, pb))
        prev = channels
    return TcnWeights(
        feature_means=np.zeros(5), feature_stds=np.ones(5),
        context_means=np.zeros(2), context_stds=np.ones(2),
        target_mean=target_mean, target_std=target_std,
        blocks=tuple(blocks),
        head_weights=np.zeros(prev + 2), head_bias=head_bias,
    )


def random_frames(rng: np.random.Generator, n: int) -> list[FeatureFrame]:
    frames = []
    for _ in range(n):
        bx, by = rng.normal(0, 3, 2)
        vz = rng.normal(0, 1)
        airspeed = float(np.sqrt(bx * bx + by * by + vz * vz))
        frames.append(FeatureFrame(airspeed, float(bx), float(by), float(vz),
                                   float(rng.uniform(-0.3, 0.3))))
    return frames


def straight_plan(length: float = 100.0, speed: float = 5.0,
                  altitude: float = 30.0) -> TrajectoryPlan:
    return TrajectoryPlan(waypoints=(
        Waypoint((0.0, 0.0, altitude), 0.0, speed),
        Waypoint((length, 0.0, altitude), 0.0, speed)), name="straight")


def uniform_windset(vector=(0.0, 0.0, 0.0), ref_speed: float = 1.0,
                    mean_angle: float = 0.0, mean_speed: float = 1.0,
                    std_angle: float = 0.0, std_speed: float = 0.0,
                    extent: float = 1000.0) -> WindFieldSet:
    """One uniform grid covering a large box around the origin."""
    vec = np.tile(np.asarray(vector, dtype=float), (2, 2, 2, 1))
    grid = WindGrid(origin=(-extent, -extent, -extent), cell_size=extent,
                    dims=(2, 2, 2), vectors=vec, reference_angle=0.0,
                    reference_speed=ref_speed)
    inlet = InletDistribution(mean_angle=mean_angle, mean_speed=mean_speed,
                              std_angle=std_angle, std_speed=std_speed)
    return WindFieldSet(grids=(grid,), inlet=inlet)


def constant_power_flight(power: float = 250.0, n: int = 100,
                          dt: float = 0.1, yaw: float = 0.0,
                          rng: np.random.Generator | None = None,
                          vary: bool = False) -> ProcessedFlight:
    if vary:
        assert rng is not None
        frames = random_frames(rng, n)
    else:
        frames = [FeatureFrame(3.0, 3.0, 0.0, 0.0, 0.0)] * n
    return ProcessedFlight(
        sample_period=dt, frames=tuple(frames),
        context=ContextFeatures(1.15, 0.5),
        measured_power=tuple([power] * n),
        yaw_series=tuple([yaw] * n))
