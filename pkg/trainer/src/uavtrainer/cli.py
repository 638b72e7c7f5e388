"""Trainer command line: corpus synthesis, ingestion, training,
boundary checks, figure rendering."""

from __future__ import annotations

import argparse
import sys

from .columns import ColumnMap
from .crosscheck import BoundaryError, cross_check_inference
from .figures import render_all
from .ingest import IngestionError, ingest_dataset
from .synth import SynthConfig, generate_corpus
from .train import TrainConfig, TrainingError, train_tcn


def cmd_synth(args) -> int:
    cfg = SynthConfig(n_triangular=args.triangular, n_random=args.random,
                      seed=args.seed)
    path = generate_corpus(args.out, cfg)
    print(f"synthetic raw corpus written to {path}")
    return 0


def cmd_ingest(args) -> int:
    report = ingest_dataset(args.raw, args.out, ColumnMap(),
                            split_seed=args.split_seed)
    print(f"canonical corpus: {report.corpus_dir}")
    print(f"splits: {report.n_train} train / {report.n_val} val / "
          f"{report.n_test} test")
    if report.excluded:
        print(f"excluded flights: {', '.join(report.excluded)}")
    return 0


def cmd_train(args) -> int:
    cfg = TrainConfig(channels=args.channels, kernel=args.kernel,
                      layers=args.layers, stacks=args.stacks,
                      epochs=args.epochs, dropout=args.dropout,
                      learning_rate=args.learning_rate, seed=args.seed)
    weights = train_tcn(args.corpus, args.out, cfg)
    print(f"exported weights to {args.out} "
          f"(receptive field {weights.receptive_field} steps)")
    deviation = cross_check_inference(weights, n_windows=args.check_windows)
    print(f"trainer/core boundary deviation: {deviation:.3e} (< 1e-5)")
    return 0


def cmd_crosscheck(args) -> int:
    deviation = cross_check_inference(args.weights, n_windows=args.windows)
    print(f"max relative deviation over {args.windows} windows: "
          f"{deviation:.3e} (< 1e-5)")
    return 0


def cmd_figures(args) -> int:
    made = render_all(args.artifacts, args.dest)
    if not made:
        print("no renderable artifacts found", file=sys.stderr)
        return 2
    for path in made:
        print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uavtrainer",
        description="Train and export portable power models for the "
                    "uavrisk assessment core")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic raw corpus")
    p.add_argument("--out", default="raw")
    p.add_argument("--triangular", type=int, default=50)
    p.add_argument("--random", type=int, default=6)
    p.add_argument("--seed", type=int, default=20240)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ingest", help="raw logs -> canonical corpus")
    p.add_argument("raw")
    p.add_argument("--out", default="corpus")
    p.add_argument("--split-seed", type=int, default=7)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("train", help="train the TCN and export weights")
    p.add_argument("corpus")
    p.add_argument("--out", default="tcn_weights.json")
    p.add_argument("--channels", type=int, default=64)
    p.add_argument("--kernel", type=int, default=2)
    p.add_argument("--layers", type=int, default=5)
    p.add_argument("--stacks", type=int, default=1)
    p.add_argument("--epochs", type=int, default=25)
    p.add_argument("--dropout", type=float, default=0.05)
    p.add_argument("--learning-rate", type=float, default=0.002)
    p.add_argument("--seed", type=int, default=31412)
    p.add_argument("--check-windows", type=int, default=1000)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("crosscheck", help="verify an export against the core")
    p.add_argument("weights")
    p.add_argument("--windows", type=int, default=1000)
    p.set_defaults(func=cmd_crosscheck)

    p = sub.add_parser("figures", help="render figures from core CSVs")
    p.add_argument("artifacts")
    p.add_argument("--dest", default="figures")
    p.set_defaults(func=cmd_figures)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (IngestionError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (TrainingError, BoundaryError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
