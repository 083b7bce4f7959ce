"""Config files, experiment grids and the command line."""

from .cli import cli, main
from .config import EvalConfig, ExperimentConfig, ExperimentSection, load_config, parse_config, serialize
from .gradsuite import run_gradient_suite
from .grid import (
    GridResult,
    OutputDirNotEmpty,
    evaluate_learner,
    load_learner,
    read_csv,
    read_front,
    run_cell,
    run_grid,
    summarize,
)

__all__ = [
    "EvalConfig",
    "ExperimentConfig",
    "ExperimentSection",
    "GridResult",
    "OutputDirNotEmpty",
    "cli",
    "evaluate_learner",
    "load_config",
    "load_learner",
    "main",
    "parse_config",
    "read_csv",
    "read_front",
    "run_cell",
    "run_grid",
    "run_gradient_suite",
    "serialize",
    "summarize",
]
