"""Raw log ingestion: published layout -> canonical flight CSVs.

Per flight: detect the native sample period from the timestamps
(never assumed), resample every channel onto the uniform grid, map the
raw columns to the canonical feature set through the core package's
own feature derivation, and write one canonical CSV. Flights with a
gap larger than five sample periods are excluded and noted in the
manifest. Splits are drawn 60:20:20 over the non-random-route flights
with a seeded shuffle; every random-route flight goes to the test
split only.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

import numpy as np
import pandas as pd

from uavrisk.flight import (ContextFeatures, FeatureFrame, ProcessedFlight,
                            derive_feature_matrix, validate_flight,
                            write_flight_csv, wrap_angle)

from .columns import RANDOM_ROUTE_LABELS, ColumnMap
from .quat import yaw_pitch_from_quaternion

DRY_AIR_R = 287.05
DEFAULT_AIR_DENSITY = 1.15
GAP_FACTOR = 5.0


class IngestionError(Exception):
    pass


@dataclass(frozen=True)
class IngestReport:
    corpus_dir: str
    n_train: int
    n_val: int
    n_test: int
    excluded: tuple


def _resample(t_raw, t_grid, values):
    return np.interp(t_grid, t_raw, values)


def _is_random_route(label: str) -> bool:
    label = str(label)
    return any(label.lower().startswith(tag.lower())
               for tag in RANDOM_ROUTE_LABELS)


def ingest_flight(df: pd.DataFrame, cols: ColumnMap):
    """One raw flight -> (ProcessedFlight, sample_period) or a reason
    string when the flight must be excluded."""
    df = df.sort_values(cols.time)
    t_raw = df[cols.time].to_numpy(dtype=float)
    if t_raw.size < 2:
        return "fewer than 2 samples"
    gaps = np.diff(t_raw)
    if np.any(gaps <= 0.0):
        return "non-monotonic timestamps"
    period = float(np.median(gaps))
    if np.any(gaps > GAP_FACTOR * period):
        return (f"gap {float(np.max(gaps)):.2f} s exceeds "
                f"{GAP_FACTOR:.0f}x sample period {period:.3f} s")

    n_grid = int(math.floor((t_raw[-1] - t_raw[0]) / period)) + 1
    t_grid = t_raw[0] + period * np.arange(n_grid)

    vel = np.column_stack([_resample(t_raw, t_grid, df[c].to_numpy(float))
                           for c in cols.velocity])
    yaw_raw, pitch_raw = yaw_pitch_from_quaternion(
        *(df[c].to_numpy(float) for c in cols.orientation))
    yaw = _resample(t_raw, t_grid, np.unwrap(yaw_raw))
    pitch = _resample(t_raw, t_grid, pitch_raw)

    angle = np.radians(df[cols.wind_angle].to_numpy(float))
    speed = df[cols.wind_speed].to_numpy(float)
    wind_raw = np.column_stack([speed * np.cos(angle),
                                speed * np.sin(angle),
                                np.zeros_like(speed)])
    wind = np.column_stack([_resample(t_raw, t_grid, wind_raw[:, a])
                            for a in range(3)])

    power_raw = (df[cols.battery_voltage].to_numpy(float)
                 * df[cols.battery_current].to_numpy(float))
    power = _resample(t_raw, t_grid, power_raw)
    if np.any(power <= 0.0):
        return "non-positive measured power"

    feats = derive_feature_matrix(vel, np.array([wrap_angle(y) for y in yaw]),
                                  pitch, wind)

    rho = DEFAULT_AIR_DENSITY
    if cols.pressure in df.columns and cols.temperature in df.columns:
        rho = float(np.median(df[cols.pressure].to_numpy(float))
                    / (DRY_AIR_R *
                       np.median(df[cols.temperature].to_numpy(float))))
        rho = min(max(rho, 0.5), 1.5)
    payload_kg = float(df[cols.payload].iloc[0]) * cols.payload_unit_to_kg

    flight = ProcessedFlight(
        sample_period=period,
        frames=tuple(FeatureFrame(*row) for row in feats),
        context=ContextFeatures(air_density=rho, payload_mass=payload_kg),
        measured_power=tuple(power),
        yaw_series=tuple(wrap_angle(y) for y in yaw),
        times=tuple(t_grid - t_grid[0]),
    )
    problems = validate_flight(flight)
    if problems:
        return f"canonical invariants violated: {problems[0]}"
    return flight, period


def ingest_dataset(raw_dir, out_dir, cols: ColumnMap = ColumnMap(),
                   split_seed: int = 7, split=(0.6, 0.2, 0.2)) -> IngestReport:
    """Ingest flights.csv (or per-flight CSVs) into a canonical corpus."""
    paths = []
    single = os.path.join(raw_dir, "flights.csv")
    if os.path.exists(single):
        paths = [single]
    else:
        paths = [os.path.join(raw_dir, p) for p in sorted(os.listdir(raw_dir))
                 if p.endswith(".csv")]
    if not paths:
        raise IngestionError(f"no raw CSV files found in {raw_dir}")
    raw = pd.concat([pd.read_csv(p) for p in paths], ignore_index=True)
    missing = [c for c in cols.required() if c not in raw.columns]
    if missing:
        raise IngestionError(
            f"raw schema is missing required columns: {missing}")

    os.makedirs(out_dir, exist_ok=True)
    entries = []
    excluded = []
    for fid, df in raw.groupby(cols.flight_id):
        result = ingest_flight(df, cols)
        if isinstance(result, str):
            excluded.append({"flight": str(fid), "reason": result})
            continue
        flight, period = result
        route_label = str(df[cols.route].iloc[0])
        route = "random" if _is_random_route(route_label) else route_label
        name = f"flight_{fid}.csv"
        write_flight_csv(flight, os.path.join(out_dir, name))
        entries.append({
            "file": name,
            "route": route,
            "payload_kg": flight.context.payload_mass,
            "sample_period_s": period,
            "source_flight_id": str(fid),
        })

    rng = np.random.default_rng(split_seed)
    regular = [e for e in entries if e["route"] != "random"]
    rand_flights = [e for e in entries if e["route"] == "random"]
    order = rng.permutation(len(regular))
    n_train = round(split[0] * len(regular))
    n_val = round(split[1] * len(regular))
    for rank, idx in enumerate(order):
        if rank < n_train:
            regular[idx]["split"] = "train"
        elif rank < n_train + n_val:
            regular[idx]["split"] = "val"
        else:
            regular[idx]["split"] = "test"
    for e in rand_flights:
        e["split"] = "test"

    manifest = {
        "flights": entries,
        "excluded": excluded,
        "split_seed": split_seed,
        "split_proportions": list(split),
        "random_routes_test_only": True,
        "column_mapping": cols.as_record(),
    }
    with open(os.path.join(out_dir, "manifest.json"), "w",
              encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=1)
        fh.write("\n")
    counts = {s: sum(1 for e in entries if e["split"] == s)
              for s in ("train", "val", "test")}
    return IngestReport(corpus_dir=out_dir, n_train=counts["train"],
                        n_val=counts["val"], n_test=counts["test"],
                        excluded=tuple(e["flight"] for e in excluded))


def load_corpus(corpus_dir):
    """Canonical flights grouped by split, via the manifest."""
    from uavrisk.flight import read_flight_csv
    with open(os.path.join(corpus_dir, "manifest.json"), "r",
              encoding="utf-8") as fh:
        manifest = json.load(fh)
    groups: dict = {"train": [], "val": [], "test": []}
    for entry in manifest["flights"]:
        fl = read_flight_csv(os.path.join(corpus_dir, entry["file"]))
        groups[entry["split"]].append((entry, fl))
    return groups, manifest
