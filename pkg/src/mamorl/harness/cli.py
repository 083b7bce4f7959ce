"""Command-line entry point: ``mamorl {train,evaluate,metrics,gradcheck}``.

Exit codes: 0 success, 1 a check or grid cell failed, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

import numpy as np

from ..checkpoint import CheckpointError
from ..errors import ConfigError, MamorlError
from ..metrics import hypervolume_exact, hypervolume_mc
from .config import ExperimentConfig, load_config
from .gradsuite import THRESHOLD, run_gradient_suite
from .grid import cell_name, evaluate_learner, load_learner, read_front, run_grid, write_csv, write_front

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse exits 2 with usage on stderr; keep that, but raise so cli() returns
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise _UsageExit()


class _UsageExit(Exception):
    pass


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mamorl", description="Multi-agent multi-objective RL experiments.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    t = sub.add_parser("train", help="run the variant x seed grid from a config file")
    t.add_argument("--config", required=True, type=Path)
    t.add_argument("--jobs", type=_positive_int, default=1)
    t.add_argument("--force", action="store_true", help="allow a non-empty output directory")
    t.add_argument("--seed-override", type=int, default=None, help="run this single seed instead")

    e = sub.add_parser("evaluate", help="GU and HV of a saved checkpoint")
    e.add_argument("checkpoint", type=Path)
    e.add_argument("--config", type=Path, default=None, help="override the eval/env settings stored in the checkpoint")
    e.add_argument("--seed-override", type=int, default=None)
    e.add_argument("--out", type=Path, default=None, help="write results and front CSVs here")

    m = sub.add_parser("metrics", help="recompute hypervolume from a front CSV")
    m.add_argument("front", type=Path)
    m.add_argument("--mc-samples", type=int, default=0, help="also report a Monte-Carlo estimate")
    m.add_argument("--seed", type=int, default=0)

    g = sub.add_parser("gradcheck", help="finite-difference check of every network")
    g.add_argument("--seeds", type=_positive_int, default=10)
    g.add_argument("--max-coords", type=int, default=8)
    return p


def _train(args) -> int:
    config: ExperimentConfig = load_config(args.config)
    if args.seed_override is not None:
        config = config.replace(experiment=dataclasses.replace(config.experiment, seeds=(args.seed_override,)))
    grid = run_grid(config, force=args.force, jobs=args.jobs)
    for row in grid.summary:
        print(
            f"{row['variant']}: gu {row['gu_mean']:.4f} +/- {row['gu_std']:.4f}  "
            f"hv {row['hv_mean']:.4f} +/- {row['hv_std']:.4f}  runs {row['n_runs']} failed {row['n_failed']}"
        )
    for f in grid.failures:
        print(f"FAILED {cell_name(f['variant'], f['seed'])}: {f['error']}", file=sys.stderr)
    print(f"wrote {grid.out_dir / 'summary.csv'}")
    return EXIT_OK if grid.ok else EXIT_FAIL


def _evaluate(args) -> int:
    if not args.checkpoint.is_file():
        print(f"mamorl: error: checkpoint {args.checkpoint} not found", file=sys.stderr)
        return EXIT_USAGE
    stored, variant, seed, learner = load_learner(args.checkpoint)
    config = stored
    if args.config is not None:
        override = load_config(args.config)
        config = stored.replace(eval=override.eval)
    if args.seed_override is not None:
        seed = args.seed_override
    ev = evaluate_learner(config, learner, seed)
    print(f"variant {variant} seed {seed}: gu {ev.gu:.6f} hv {ev.hv:.6f} front points {len(ev.front)}")
    if args.out is not None:
        m = len(ev.ref)
        row = {"variant": variant, "seed": seed, "gu": ev.gu, "hv": ev.hv, "n_front_points": len(ev.front)}
        row.update({f"ref_{k}": float(ev.ref[k]) for k in range(m)})
        write_csv(args.out / "results.csv", list(row), [row])
        write_front(args.out / "front.csv", ev)
    return EXIT_OK


def _metrics(args) -> int:
    if not args.front.is_file():
        print(f"mamorl: error: front file {args.front} not found", file=sys.stderr)
        return EXIT_USAGE
    points, ref = read_front(args.front)
    if len(ref) <= 3:
        print(f"hv {hypervolume_exact(points, ref)!r}")
    if args.mc_samples or len(ref) > 3:
        est, se = hypervolume_mc(points, ref, max(args.mc_samples, 10_000), np.random.default_rng(args.seed))
        print(f"hv_mc {est!r} +/- {se!r}")
    print(f"n_points {len(points)}")
    return EXIT_OK


def _gradcheck(args) -> int:
    worst = run_gradient_suite(range(args.seeds), max_coords=args.max_coords or None)
    ok = True
    for name, err in worst.items():
        status = "ok" if err < THRESHOLD else "FAIL"
        ok &= err < THRESHOLD
        print(f"{name:10s} max rel error {err:.3e}  {status}")
    return EXIT_OK if ok else EXIT_FAIL


_COMMANDS = {"train": _train, "evaluate": _evaluate, "metrics": _metrics, "gradcheck": _gradcheck}


def cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageExit:
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, CheckpointError, FileNotFoundError, ValueError) as exc:
        print(f"mamorl: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except MamorlError as exc:
        print(f"mamorl: error: {exc}", file=sys.stderr)
        return EXIT_FAIL


def main() -> None:
    sys.exit(cli())


if __name__ == "__main__":
    main()
