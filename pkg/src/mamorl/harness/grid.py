"""Variant x seed grids: training, evaluation, CSV logs and the summary.

Output layout under the output directory::

    config.cfg                     the resolved config, serialised
    runs/<variant>_seed<k>.csv     one row per episode
    checkpoints/<variant>_seed<k>.ckpt   (plus _ep<e> snapshots with train.checkpoint_every)
    fronts/<variant>_seed<k>.csv   evaluated points, front and reference point
    results.csv                    variant, seed, gu, hv, n_front_points, ref_*
    summary.csv                    mean and population std per variant
    failures.csv                   cells that raised (only when any did)

Every CSV starts with the line ``# schema=1``. Floats are written with
``repr`` so they parse back bit-exactly.
"""

from __future__ import annotations

import csv
import os
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..checkpoint import load_checkpoint, save_checkpoint
from ..errors import ConfigError
from ..metrics import build_front_from_sweep, evaluate_gu, hypervolume_exact, hypervolume_mc, preference_grid
from ..training import PreferenceSource, make_learner, run_training
from .config import ExperimentConfig, parse_config, serialize

SCHEMA_LINE = "# schema=1"
TIMING_COLUMNS = ("wall_ms",)
OUT_ENV = "MAMORL_OUT"


class OutputDirNotEmpty(ConfigError):
    pass


def cell_name(variant: str, seed: int) -> str:
    return f"{variant}_seed{seed}"


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path: Path, columns: list[str], rows: list[dict]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(SCHEMA_LINE + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row[c]) for c in columns])


def read_csv(path) -> list[dict[str, str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        first = fh.readline().rstrip("\n")
        if first != SCHEMA_LINE:
            raise ValueError(f"{path}: missing '{SCHEMA_LINE}' header")
        return list(csv.DictReader(fh))


def resolve_output_dir(config: ExperimentConfig) -> Path:
    return Path(os.environ.get(OUT_ENV) or config.output_dir)


def prepare_output_dir(path: Path, force: bool) -> None:
    if path.exists() and not path.is_dir():
        raise OutputDirNotEmpty(f"{path} exists and is not a directory")
    if path.exists() and any(path.iterdir()) and not force:
        raise OutputDirNotEmpty(f"output directory {path} is not empty; pass --force to overwrite")
    path.mkdir(parents=True, exist_ok=True)


@dataclass
class Evaluation:
    gu: float
    hv: float
    front: np.ndarray
    ref: np.ndarray
    raw: np.ndarray


def evaluate_learner(config: ExperimentConfig, learner, seed: int) -> Evaluation:
    """Greedy GU over ``eval.n_states`` initial states plus the preference-sweep front and its HV."""
    env, ev = config.env, config.eval
    prefs = PreferenceSource(config.preference, env)
    rng = np.random.default_rng([int(seed), 1])
    gu = evaluate_gu(learner, env, prefs, ev.n_states, rng)
    grid = preference_grid(env.n_objectives, ev.grid_size)
    front, raw = build_front_from_sweep(
        learner, env, config.preference.case, grid, prefs.generators, ev.front_states, rng
    )
    if front.n_points == 0:
        hv = 0.0
    elif front.n_objectives <= 3:
        hv = hypervolume_exact(front)
    else:
        hv = hypervolume_mc(front, rng=rng)[0]
    return Evaluation(gu, hv, front.points, front.ref, raw)


def _result_row(variant: str, seed: int, ev: Evaluation) -> dict:
    row = {"variant": variant, "seed": seed, "gu": ev.gu, "hv": ev.hv, "n_front_points": len(ev.front)}
    row.update({f"ref_{k}": float(r) for k, r in enumerate(ev.ref)})
    return row


def write_front(path: Path, ev: Evaluation) -> None:
    m = ev.ref.shape[0]
    cols = ["kind"] + [f"obj_{k}" for k in range(m)]
    rows = [{"kind": "ref", **{f"obj_{k}": float(ev.ref[k]) for k in range(m)}}]
    rows += [{"kind": "point", **{f"obj_{k}": float(p[k]) for k in range(m)}} for p in ev.front]
    rows += [{"kind": "raw", **{f"obj_{k}": float(p[k]) for k in range(m)}} for p in ev.raw]
    write_csv(path, cols, rows)


def read_front(path) -> tuple[np.ndarray, np.ndarray]:
    """(front points, ref) from a front CSV."""
    rows = read_csv(path)
    if not rows:
        raise ValueError(f"{path}: empty front file")
    keys = sorted((k for k in rows[0] if k.startswith("obj_")), key=lambda k: int(k[4:]))
    vec = lambda r: [float(r[k]) for k in keys]  # noqa: E731
    refs = [vec(r) for r in rows if r["kind"] == "ref"]
    if len(refs) != 1:
        raise ValueError(f"{path}: expected exactly one ref row, found {len(refs)}")
    points = np.array([vec(r) for r in rows if r["kind"] == "point"], dtype=np.float64).reshape(-1, len(keys))
    return points, np.array(refs[0])


def run_cell(config: ExperimentConfig, variant: str, seed: int, out_dir: Path) -> dict:
    """Train, checkpoint, evaluate and log one (variant, seed); returns its results row."""
    name = cell_name(variant, seed)
    meta = {"variant": variant, "seed": seed, "config": serialize(config)}

    def checkpoint(episode, learner):
        save_checkpoint(out_dir / "checkpoints" / f"{name}_ep{episode}.ckpt", learner.state_dict(), meta)

    result = run_training(variant, config.env, config.train, seed, config.preference, on_checkpoint=checkpoint)
    n = config.env.n_agents
    cols = ["variant", "seed", "episode", "env_steps", *[f"return_{i}" for i in range(n)], "loss", "sigma", "wall_ms"]
    write_csv(out_dir / "runs" / f"{name}.csv", cols, [{"variant": variant, "seed": seed, **r} for r in result.log])
    save_checkpoint(
        out_dir / "checkpoints" / f"{name}.ckpt",
        result.learner.state_dict(),
        meta,
    )
    ev = evaluate_learner(config, result.learner, seed)
    write_front(out_dir / "fronts" / f"{name}.csv", ev)
    return _result_row(variant, seed, ev)


def _cell_job(args) -> tuple[str, int, dict | None, str | None]:
    config, variant, seed, out_dir = args
    try:
        return variant, seed, run_cell(config, variant, seed, out_dir), None
    except Exception as exc:  # one failed cell must not stop the grid
        return variant, seed, None, "".join(traceback.format_exception_only(type(exc), exc)).strip()


@dataclass
class GridResult:
    out_dir: Path
    results: list[dict] = field(default_factory=list)
    failures: list[dict] = field(default_factory=list)
    summary: list[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def run_grid(config: ExperimentConfig, force: bool = False, jobs: int = 1) -> GridResult:
    """Run every (variant, seed) cell, then write results and the summary once all are done."""
    out_dir = resolve_output_dir(config)
    prepare_output_dir(out_dir, force)
    (out_dir / "config.cfg").write_text(serialize(config), encoding="utf-8")
    cells = [(config, v, s, out_dir) for v in config.variants for s in config.seeds]
    if jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_cell_job, cells))
    else:
        outcomes = [_cell_job(c) for c in cells]

    grid = GridResult(out_dir)
    for variant, seed, row, err in outcomes:
        if err is None:
            grid.results.append(row)
        else:
            grid.failures.append({"variant": variant, "seed": seed, "error": err})
    m = config.env.n_objectives
    write_csv(
        out_dir / "results.csv",
        ["variant", "seed", "gu", "hv", "n_front_points", *[f"ref_{k}" for k in range(m)]],
        grid.results,
    )
    if grid.failures:
        write_csv(out_dir / "failures.csv", ["variant", "seed", "error"], grid.failures)
    grid.summary = summarize(out_dir, config.variants, {(f["variant"], f["seed"]) for f in grid.failures})
    write_csv(out_dir / "summary.csv", SUMMARY_COLUMNS, grid.summary)
    return grid


SUMMARY_COLUMNS = [
    "variant",
    "n_runs",
    "n_failed",
    "gu_mean",
    "gu_std",
    "hv_mean",
    "hv_std",
    "final_return_mean",
    "final_return_std",
]


def _mean_std(values: list[float]) -> tuple[float, float]:
    if not values:
        return float("nan"), float("nan")
    a = np.asarray(values, dtype=np.float64)
    return float(a.mean()), float(a.std())


def final_return(run_rows: list[dict[str, str]]) -> float:
    """Agent-mean scalarised return of the last logged episode."""
    last = run_rows[-1]
    vals = [float(v) for k, v in last.items() if k.startswith("return_")]
    return float(np.mean(vals))


def summarize(out_dir, variants, failed: set = frozenset()) -> list[dict]:
    """Per-variant mean and population std, recomputed from results.csv and the run CSVs."""
    out_dir = Path(out_dir)
    results = read_csv(out_dir / "results.csv")
    rows = []
    for v in variants:
        mine = [r for r in results if r["variant"] == v]
        finals = [final_return(read_csv(out_dir / "runs" / f"{cell_name(v, int(r['seed']))}.csv")) for r in mine]
        gu = _mean_std([float(r["gu"]) for r in mine])
        hv = _mean_std([float(r["hv"]) for r in mine])
        fr = _mean_std(finals)
        rows.append(
            {
                "variant": v,
                "n_runs": len(mine),
                "n_failed": sum(1 for fv, _ in failed if fv == v),
                "gu_mean": gu[0],
                "gu_std": gu[1],
                "hv_mean": hv[0],
                "hv_std": hv[1],
                "final_return_mean": fr[0],
                "final_return_std": fr[1],
            }
        )
    return rows


def load_learner(path) -> tuple[ExperimentConfig, str, int, object]:
    """Rebuild a trained learner from a checkpoint written by :func:`run_cell`."""
    arrays, meta = load_checkpoint(path)
    config = parse_config(meta["config"])
    variant, seed = meta["variant"], int(meta["seed"])
    learner = make_learner(variant, config.env, config.train, np.random.default_rng(0))
    learner.load_state_dict(arrays)
    return config, variant, seed, learner
