from __future__ import annotations

from dataclasses import dataclass

from ..errors import ConfigError


@dataclass(frozen=True)
class TrainConfig:
    """Learning hyperparameters; defaults follow the published settings where given."""

    gamma: float = 0.99
    tau: float = 0.005
    batch_size: int = 128
    buffer_capacity: int = 500_000
    actor_lr: float = 5e-4
    critic_lr: float = 3e-4
    gpi_candidates: int = 32
    noise_sigma_start: float = 0.3
    noise_sigma_end: float = 0.02
    noise_decay_steps: int = 4000
    update_every: int = 1
    warmup_steps: int = 1000
    episodes: int = 200
    checkpoint_every: int = 0  # episodes between intermediate checkpoints; 0 keeps only the final one

    def __post_init__(self) -> None:
        if not 0.0 <= self.gamma <= 1.0:
            raise ConfigError(f"gamma must lie in [0, 1], got {self.gamma}")
        if not 0.0 < self.tau <= 1.0:
            raise ConfigError(f"tau must lie in (0, 1], got {self.tau}")
        if self.batch_size < 1 or self.batch_size > self.buffer_capacity:
            raise ConfigError("batch_size must be in [1, buffer_capacity]")
        if self.actor_lr <= 0 or self.critic_lr <= 0:
            raise ConfigError("learning rates must be > 0")
        if self.gpi_candidates < 0:
            raise ConfigError("gpi_candidates must be >= 0")
        if self.noise_sigma_start < 0 or self.noise_sigma_end < 0:
            raise ConfigError("noise sigmas must be >= 0")
        if self.noise_decay_steps < 0 or self.warmup_steps < 0:
            raise ConfigError("noise_decay_steps and warmup_steps must be >= 0")
        if self.update_every < 1:
            raise ConfigError("update_every must be >= 1")
        if self.checkpoint_every < 0:
            raise ConfigError("checkpoint_every must be >= 0")
        if self.episodes < 1:
            raise ConfigError("episodes must be >= 1")
