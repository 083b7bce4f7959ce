"""Replay, update rules, learner variants and the training loop."""

from .config import TrainConfig
from .core import (
    exploration_noise,
    gpi_select_action,
    mse_vector_loss,
    noise_sigma,
    scalarize,
    scalarize_tensor,
    soft_update,
)
from .learners import (
    LEARNERS,
    VARIANTS,
    AALearner,
    GPLearner,
    IPLearner,
    Learner,
    ScalarizedLearner,
    make_learner,
)
from .loop import CASE_FOR_VARIANT, PreferenceConfig, PreferenceSource, TrainResult, run_training
from .replay import Batch, ReplayBuffer, Transition

__all__ = [
    "AALearner",
    "Batch",
    "CASE_FOR_VARIANT",
    "GPLearner",
    "IPLearner",
    "LEARNERS",
    "Learner",
    "PreferenceConfig",
    "PreferenceSource",
    "ReplayBuffer",
    "ScalarizedLearner",
    "TrainConfig",
    "TrainResult",
    "Transition",
    "VARIANTS",
    "exploration_noise",
    "gpi_select_action",
    "make_learner",
    "mse_vector_loss",
    "noise_sigma",
    "run_training",
    "scalarize",
    "scalarize_tensor",
    "soft_update",
]
