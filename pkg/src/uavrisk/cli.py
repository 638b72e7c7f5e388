"""Command-line surface for the assessment pipeline.

Subcommands:
    assess        single-mission energy/risk assessment (report + histograms)
    coverage      CVaR sweep over sampled goals around a base location
    eval-model    score a power model against a flight corpus
    fit-baseline  least-squares fit of the analytical baseline
    simulate      one deterministic run dumped step by step
    print-config  dump the default mission document

Exit codes: 0 success, 1 computation failure, 2 input/config error.
All data artifacts embed the config hash and master seed and are
byte-identical across re-runs; wall-clock timestamps only ever appear
in the run_info.json sidecar.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np
import yaml

from . import mission as mi
from .errors import ComputationError, InputError, UavRiskError
from .flight import _feature_matrix, fnum, read_flight_csv
from .metrics import adjusted_re
from .montecarlo import (energy_histogram, export_energy_samples,
                         predict_series, run_mc)
from .coverage import CoverageMission, coverage_map, export_coverage
from .dynamics import simulate_flight_arrays
from .power import (TcnWeights, fit_analytical, save_coefficients)
from .risk import cvar, risk_transform, var, write_risk_report
from .rng import substream
from .wind import DrydenState, make_wind_closure, sample_inlet


def _write_histogram_csv(path, hist, stamp: str, value_key: str,
                         value_name: str) -> None:
    lines = [f"# {stamp}", f"bin_lo,bin_hi,{value_name},count"]
    edges = hist["bin_edges"]
    values = hist[value_key]
    counts = hist["counts"]
    for i in range(len(values)):
        lines.append(f"{fnum(edges[i])},{fnum(edges[i + 1])},"
                     f"{fnum(values[i])},{int(counts[i])}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def _write_run_info(out_dir: str, stamp: str) -> None:
    with open(os.path.join(out_dir, "run_info.json"), "w",
              encoding="utf-8") as fh:
        json.dump({"stamp": stamp, "wall_clock_utc": time.strftime(
            "%Y-%m-%dT%H:%M:%SZ", time.gmtime())}, fh, indent=1)
        fh.write("\n")


def cmd_assess(args) -> int:
    cfg = mi.load_mission_config(args.config)
    chash = mi.config_hash(cfg)
    plan, hashes = mi.build_plan(cfg)
    windset, h2 = mi.build_windset(cfg)
    model, h3 = mi.load_power_model(cfg)
    hashes.update(h2)
    hashes.update(h3)
    context = mi.build_context(cfg)
    profile = mi.build_risk_profile(cfg)
    mc = mi.build_mc(cfg)
    sim = mi.build_sim(cfg, plan)
    nu = cfg["risk"]["nu"]

    samples = run_mc(plan, mi.build_controller(cfg), mi.build_noise(cfg),
                     sim, windset, model, mc, context,
                     workers=mi.workers_from(cfg), file_hashes=hashes)
    samples.metadata["config_hash"] = chash
    risks = risk_transform(samples, profile)
    risks.metadata["histogram_bins"] = mc.histogram_bins

    out_dir = mi.resolve(cfg, cfg["mission"]["output_dir"])
    os.makedirs(out_dir, exist_ok=True)
    stamp = f"config={chash} seed={mc.master_seed}"
    from .risk import risk_histogram as _rh
    _write_histogram_csv(os.path.join(out_dir, "energy_histogram.csv"),
                         energy_histogram(samples, mc.histogram_bins), stamp,
                         "probabilities", "probability")
    _write_histogram_csv(os.path.join(out_dir, "risk_histogram.csv"),
                         _rh(risks, mc.histogram_bins), stamp,
                         "density", "density")
    export_energy_samples(samples,
                          os.path.join(out_dir, "energy_samples.csv"),
                          os.path.join(out_dir, "energy_samples_meta.json"))
    write_risk_report(risks, nu, os.path.join(out_dir, "risk_report.json"),
                      extra={"config_hash": chash,
                             "master_seed": mc.master_seed,
                             "incomplete_runs": samples.incomplete_count})
    _write_run_info(out_dir, stamp)

    energies = np.asarray(samples.energies)
    print(f"runs: {len(samples)} ({samples.incomplete_count} incomplete)")
    print(f"mean energy: {energies.mean():.1f} J")
    print(f"VaR[{nu}]: {var(risks, nu):.6g}")
    print(f"CVaR[{nu}]: {cvar(risks, nu):.6g}")
    print(f"artifacts written to {out_dir}")
    return 0


def cmd_coverage(args) -> int:
    cfg = mi.load_mission_config(args.config)
    chash = mi.config_hash(cfg)
    windset, _ = mi.build_windset(cfg)
    model, _ = mi.load_power_model(cfg)
    occ, _ = mi.build_occupancy(cfg)
    cov = cfg["coverage"]
    mission = CoverageMission(
        windset=windset, power_model=model, context=mi.build_context(cfg),
        controller=mi.build_controller(cfg), noise=mi.build_noise(cfg),
        sim=mi.build_sim(cfg), cruise_altitude=cov["cruise_altitude"],
        clearance=cov["clearance"], speed=cov["speed"],
        one_way=cov["one_way"], workers=mi.workers_from(cfg),
        raster_resolution=cov["raster_resolution"])
    result = coverage_map(tuple(cov["center"]), cov["radius"], cov["goals"],
                          occ, mission, mi.build_risk_profile(cfg),
                          cfg["risk"]["nu"], mi.build_mc(cfg))

    out_dir = mi.resolve(cfg, cfg["mission"]["output_dir"])
    os.makedirs(out_dir, exist_ok=True)
    export_coverage(result, os.path.join(out_dir, "coverage_goals.csv"),
                    os.path.join(out_dir, "coverage_raster.csv"))
    report = {"config_hash": chash, "n_goals": len(result.goals),
              "failed_plans": result.failed_plans,
              "cvar_min": min(result.cvar_values) if result.cvar_values else None,
              "cvar_max": max(result.cvar_values) if result.cvar_values else None,
              **result.metadata}
    with open(os.path.join(out_dir, "coverage_report.json"), "w",
              encoding="utf-8") as fh:
        json.dump(report, fh, indent=1, sort_keys=True)
        fh.write("\n")
    _write_run_info(out_dir, f"config={chash}")
    print(f"goals evaluated: {len(result.goals)} "
          f"(planning failures: {result.failed_plans})")
    if result.cvar_values:
        print(f"CVaR range: [{min(result.cvar_values):.6g}, "
              f"{max(result.cvar_values):.6g}]")
    print(f"artifacts written to {out_dir}")
    return 0


def _load_corpus(corpus_dir: str):
    """Flights plus their split/route labels from an optional manifest."""
    if not os.path.isdir(corpus_dir):
        raise InputError(f"corpus directory does not exist: {corpus_dir}")
    manifest_path = os.path.join(corpus_dir, "manifest.json")
    entries = []
    if os.path.exists(manifest_path):
        with open(manifest_path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        for row in doc.get("flights", []):
            entries.append((row["file"], row.get("split", "test"),
                            row.get("route", "")))
    else:
        for name in sorted(os.listdir(corpus_dir)):
            if name.endswith(".csv"):
                entries.append((name, "test", ""))
    if not entries:
        raise InputError(f"no flight CSVs found in {corpus_dir}")
    flights = []
    for name, split, route in entries:
        fl = read_flight_csv(os.path.join(corpus_dir, name))
        flights.append((name, split, route, fl))
    return flights


def cmd_eval_model(args) -> int:
    cfg = {"power_model": {"path": os.path.abspath(args.model)},
           "_base_dir": os.getcwd()}
    model, _ = mi.load_power_model(cfg)
    flights = _load_corpus(args.corpus)

    rows = []
    for name, split, route, fl in flights:
        if isinstance(model, TcnWeights) and \
                abs(model.sample_period_s - fl.sample_period) > 1e-9:
            raise InputError(
                f"{name}: sample period {fl.sample_period} s does not match "
                f"the model ({model.sample_period_s} s)")
        predicted = predict_series(model, fl.feature_matrix(), fl.context)
        ev = adjusted_re(fl, predicted, args.yaw_threshold_deg, args.dwell_s)
        rows.append((name, split, route, ev))

    out_path = args.output
    lines = ["flight_id,split,route,mape,re,sections"]
    for name, split, route, ev in rows:
        lines.append(f"{name},{split},{route},{ev.mape_percent!r},"
                     f"{ev.re_percent!r},{ev.section_count}")
    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")

    groups: dict[str, list] = {}
    for name, split, route, ev in rows:
        groups.setdefault(split, []).append(ev)
        if route == "random":
            groups.setdefault("random", []).append(ev)
    print(f"{'group':<10} {'flights':>7} {'MAPE%':>8} {'RE%':>8}")
    for split in sorted(groups):
        evs = groups[split]
        mape_mean = float(np.mean([e.mape_percent for e in evs]))
        re_mean = float(np.mean([e.re_percent for e in evs]))
        print(f"{split:<10} {len(evs):>7} {mape_mean:>8.2f} {re_mean:>8.2f}")
    best = min(rows, key=lambda r: r[3].mape_percent)
    worst = max(rows, key=lambda r: r[3].mape_percent)
    print(f"best flight by MAPE:  {best[0]} ({best[3].mape_percent:.2f}%)")
    print(f"worst flight by MAPE: {worst[0]} ({worst[3].mape_percent:.2f}%)")
    print(f"per-flight scores written to {out_path}")
    return 0


def cmd_fit_baseline(args) -> int:
    flights = _load_corpus(args.corpus)
    train = [fl for _, split, _, fl in flights if split == "train"]
    if not train:
        train = [fl for _, _, _, fl in flights]
        print("no train split labels found; fitting on all flights")
    coeffs = fit_analytical(train)
    save_coefficients(coeffs, args.output)
    print(f"fitted on {len(train)} flights "
          f"({sum(len(f) for f in train)} frames)")
    print(f"coefficients written to {args.output}")
    return 0


def cmd_simulate(args) -> int:
    cfg = mi.load_mission_config(args.config)
    chash = mi.config_hash(cfg)
    plan, _ = mi.build_plan(cfg)
    windset, _ = mi.build_windset(cfg)
    model, _ = mi.load_power_model(cfg)
    context = mi.build_context(cfg)
    sim = mi.build_sim(cfg, plan)
    mc = mi.build_mc(cfg)

    rng = substream(mc.master_seed, 0)
    inlet = sample_inlet(windset.inlet, rng)
    closure = make_wind_closure(windset, inlet)
    max_steps = max(int(round(sim.max_sim_time / sim.dt)), 1)
    dryden = DrydenState(altitude=max(plan.mean_altitude(), 1.0),
                         mean_wind_speed_6m=inlet.speed, timestep=sim.dt)
    gusts = dryden.run(rng.standard_normal((max_steps, 3))).tolist()
    counter = iter(range(max_steps))
    arrays = simulate_flight_arrays(plan, mi.build_controller(cfg),
                                    mi.build_noise(cfg), sim, closure,
                                    lambda: gusts[next(counter)], rng)
    feats = _feature_matrix(arrays.velocities, arrays.yaws, arrays.pitches,
                            arrays.winds)
    power = predict_series(model, feats, context)

    out_dir = mi.resolve(cfg, cfg["mission"]["output_dir"])
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "simulation.csv")
    lines = [f"# config={chash} seed={mc.master_seed} "
             f"inlet_angle_deg={inlet.angle!r} inlet_speed={inlet.speed!r} "
             f"captured={int(arrays.captured)}",
             "time_s,x,y,z,vx,vy,vz,yaw,pitch,wind_x,wind_y,wind_z,power_w"]
    for i in range(len(arrays)):
        px, py, pz = arrays.positions[i]
        vx, vy, vz = arrays.velocities[i]
        wx, wy, wz = arrays.winds[i]
        lines.append(",".join(repr(float(v)) for v in
                              (arrays.times[i], px, py, pz, vx, vy, vz,
                               arrays.yaws[i], arrays.pitches[i],
                               wx, wy, wz, power[i])))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    energy = float(np.sum(power[:-1]) * sim.dt)
    print(f"flight time: {arrays.times[-1]:.1f} s "
          f"({'captured' if arrays.captured else 'incomplete'})")
    print(f"energy: {energy:.1f} J")
    print(f"trace written to {path}")
    return 0


def cmd_print_config(_args) -> int:
    print(yaml.safe_dump(mi.DEFAULT_CONFIG, sort_keys=False))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uavrisk",
        description="Pre-flight battery-depletion risk assessment for "
                    "multirotor UAVs")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("assess", help="single-mission CVaR assessment")
    p.add_argument("config", help="mission YAML document")
    p.set_defaults(func=cmd_assess)

    p = sub.add_parser("coverage", help="CVaR sweep around a base location")
    p.add_argument("config", help="mission YAML document")
    p.set_defaults(func=cmd_coverage)

    p = sub.add_parser("eval-model", help="score a model against a corpus")
    p.add_argument("model", help="weight or coefficient JSON export")
    p.add_argument("corpus", help="directory of flight CSVs (+ manifest.json)")
    p.add_argument("--output", default="evaluation.csv")
    p.add_argument("--yaw-threshold-deg", type=float, default=15.0)
    p.add_argument("--dwell-s", type=float, default=1.0)
    p.set_defaults(func=cmd_eval_model)

    p = sub.add_parser("fit-baseline", help="fit the analytical baseline")
    p.add_argument("corpus", help="directory of flight CSVs (+ manifest.json)")
    p.add_argument("--output", default="baseline_coefficients.json")
    p.set_defaults(func=cmd_fit_baseline)

    p = sub.add_parser("simulate", help="dump one deterministic run")
    p.add_argument("config", help="mission YAML document")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("print-config", help="dump the default mission document")
    p.set_defaults(func=cmd_print_config)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except ComputationError as e:
        print(f"computation failed: {e}", file=sys.stderr)
        return 1
    except UavRiskError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
