"""Deterministic parallel Monte Carlo over the flight pipeline.

Each run draws an inlet condition, simulates the closed-loop flight
under the selected wind grid plus Dryden turbulence and acceleration
noise, predicts per-step power from the derived features and
integrates energy with the left rectangle rule. Run i draws every
random number from a counter-based stream keyed by (master_seed, i),
so the sample set is bitwise identical for any worker count or
scheduling order.
"""

from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dynamics import (ControllerConfig, DynamicsNoise, SimConfig,
                       simulate_flight_arrays)
from .errors import ConfigError, InputError
from .flight import ContextFeatures, TrajectoryPlan, _feature_matrix, fnum
from .power import (AnalyticalCoefficients, TcnWeights,
                    analytical_predict_series, predict_power_series)
from .rng import rng_identity, substream
from .wind import DrydenState, WindFieldSet, make_wind_closure, sample_inlet


@dataclass(frozen=True)
class McConfig:
    runs: int = 1000
    master_seed: int = 2024
    histogram_bins: int = 30
    include_incomplete: bool = True

    def __post_init__(self):
        if self.runs < 1:
            raise ConfigError("runs must be >= 1")
        if self.histogram_bins < 2:
            raise ConfigError("histogram_bins must be >= 2")


@dataclass(frozen=True)
class EnergySamples:
    """Per-run total energies (J) plus full provenance."""

    energies: tuple[float, ...]
    incomplete_count: int
    run_indices: tuple[int, ...]
    complete_flags: tuple[bool, ...]
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        arr = np.asarray(self.energies, dtype=float)
        if arr.size and not np.all(np.isfinite(arr) & (arr > 0.0)):
            raise InputError("energies must be finite and positive")
        if len(self.run_indices) != len(self.energies):
            raise InputError("run_indices length mismatch")
        if len(self.complete_flags) != len(self.energies):
            raise InputError("complete_flags length mismatch")

    def __len__(self) -> int:
        return len(self.energies)


def _digest(obj) -> str:
    return hashlib.sha256(repr(obj).encode()).hexdigest()[:16]


def predict_series(model, features: np.ndarray,
                   context: ContextFeatures) -> np.ndarray:
    if isinstance(model, TcnWeights):
        return predict_power_series(model, features, context)
    if isinstance(model, AnalyticalCoefficients):
        return analytical_predict_series(model, features, context)
    raise ConfigError(f"unsupported power model {type(model).__name__}")


def _single_run(run_index: int, master_seed: int, plan: TrajectoryPlan,
                ctrl: ControllerConfig, noise: DynamicsNoise, sim: SimConfig,
                windset: WindFieldSet, model, context: ContextFeatures,
                dryden_altitude: float) -> tuple[float, bool]:
    rng = substream(master_seed, run_index)
    inlet = sample_inlet(windset.inlet, rng)
    wind_closure = make_wind_closure(windset, inlet)

    max_steps = max(int(round(sim.max_sim_time / sim.dt)), 1)
    dryden = DrydenState(altitude=dryden_altitude,
                         mean_wind_speed_6m=inlet.speed, timestep=sim.dt)
    gusts = dryden.run(rng.standard_normal((max_steps, 3))).tolist()
    counter = iter(range(max_steps))
    turbulence = lambda: gusts[next(counter)]

    arrays = simulate_flight_arrays(plan, ctrl, noise, sim, wind_closure,
                                    turbulence, rng)
    feats = _feature_matrix(arrays.velocities, arrays.yaws, arrays.pitches,
                            arrays.winds)
    power = predict_series(model, feats, context)
    # left rectangle rule: power at each step start times dt
    energy = float(np.sum(power[:-1]) * sim.dt)
    return energy, arrays.captured


def _run_batch(args) -> list[tuple[int, float, bool]]:
    indices, payload = args
    return [(i, *_single_run(i, *payload)) for i in indices]


def run_mc(plan: TrajectoryPlan, ctrl: ControllerConfig, noise: DynamicsNoise,
           sim: SimConfig, windset: WindFieldSet, power_model,
           mc: McConfig, context: ContextFeatures,
           workers: int = 1, file_hashes: dict | None = None) -> EnergySamples:
    """Run mc.runs forward simulations and collect total energies.

    `context` supplies the invariant features (air density, payload)
    the power model conditions on. Incomplete flights (horizon reached
    before capture) contribute their energy-so-far when
    mc.include_incomplete is set, and are always counted.
    """
    if isinstance(power_model, TcnWeights):
        if abs(power_model.sample_period_s - sim.dt) > 1e-9:
            raise ConfigError(
                f"power model sample period {power_model.sample_period_s} s "
                f"does not match simulation dt {sim.dt} s")
    # Dryden parameters are fixed per assessment at the plan's mean
    # altitude above ground (floored at 1 m to keep the filters defined).
    dryden_altitude = max(plan.mean_altitude(), 1.0)
    payload = (mc.master_seed, plan, ctrl, noise, sim, windset, power_model,
               context, dryden_altitude)

    results: list[tuple[int, float, bool]] = []
    if workers <= 1 or mc.runs == 1:
        for i in range(mc.runs):
            results.append((i, *_single_run(i, *payload)))
    else:
        workers = min(workers, mc.runs)
        chunks = [(list(range(w, mc.runs, workers)), payload)
                  for w in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for batch in pool.map(_run_batch, chunks):
                results.extend(batch)
    results.sort(key=lambda r: r[0])

    incomplete = sum(1 for _, _, ok in results if not ok)
    if mc.include_incomplete:
        kept = results
    else:
        kept = [r for r in results if r[2]]
    if not kept:
        raise ConfigError("no complete runs and include_incomplete is off; "
                          "raise max_sim_time or enable include_incomplete")

    metadata = {
        "master_seed": mc.master_seed,
        "runs": mc.runs,
        "histogram_bins": mc.histogram_bins,
        "include_incomplete": mc.include_incomplete,
        "incomplete_count": incomplete,
        "rng": rng_identity(),
        "substream_key": "(master_seed, run_index)",
        "dryden_altitude_m": dryden_altitude,
        "dt_s": sim.dt,
        "plan_name": plan.name,
        "config_digests": {
            "plan": _digest(plan),
            "controller": _digest(ctrl),
            "noise": _digest(noise),
            "sim": _digest(sim),
            "windset": _digest((windset.inlet,
                                [(g.reference_angle, g.reference_speed,
                                  g.dims) for g in windset.grids])),
            "power_model": _digest(power_model),
            "context": _digest(context),
        },
        "file_hashes": dict(file_hashes or {}),
        "notes": [
            "wind grids are a finite library: nearest reference angle, "
            "linear speed scaling (inlet variability, not per-sample CFD)",
            "turbulence intensity uses the sampled inlet speed as the "
            "near-surface mean wind surrogate",
        ],
    }
    return EnergySamples(
        energies=tuple(e for _, e, _ in kept),
        incomplete_count=incomplete,
        run_indices=tuple(i for i, _, _ in kept),
        complete_flags=tuple(ok for _, _, ok in kept),
        metadata=metadata,
    )


def energy_histogram(samples, bins: int) -> dict:
    """Equal-width histogram over [min, max] of the samples.

    Probabilities sum to exactly 1 (the last bin absorbs float
    rounding); the right edge of the last bin is inclusive.
    """
    values = np.asarray(getattr(samples, "energies", samples), dtype=float)
    if values.size == 0:
        raise InputError("need at least one sample")
    lo, hi = float(values.min()), float(values.max())
    if hi <= lo:
        width = max(1.0, abs(lo) * 1e-9)
        edges = np.array([lo, lo + width])
        probs = np.array([1.0])
        return {"bin_edges": edges, "probabilities": probs,
                "counts": np.array([values.size])}
    edges = np.linspace(lo, hi, bins + 1)
    idx = np.minimum((np.searchsorted(edges, values, side="right") - 1),
                     bins - 1)
    idx = np.maximum(idx, 0)
    counts = np.bincount(idx, minlength=bins)
    probs = counts / values.size
    # the maximum sample always lands in the last bin, so it has mass to
    # absorb the float rounding of the sum
    for _ in range(10):
        residual = 1.0 - float(np.sum(probs))
        if residual == 0.0:
            break
        probs[-1] += residual
    return {"bin_edges": edges, "probabilities": probs, "counts": counts}


def export_energy_samples(samples: EnergySamples, csv_path, meta_path) -> None:
    lines = ["run,energy_j,complete"]
    for i, e, ok in zip(samples.run_indices, samples.energies,
                        samples.complete_flags):
        lines.append(f"{i},{fnum(e)},{int(ok)}")
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    with open(meta_path, "w", encoding="utf-8") as fh:
        json.dump(samples.metadata, fh, indent=1, sort_keys=True)
        fh.write("\n")
