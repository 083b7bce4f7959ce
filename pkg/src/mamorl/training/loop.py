"""Episode loop shared by every variant."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .. import envs
from ..envs import EnvConfig
from ..errors import ConfigError, DivergedTrainingError
from ..preferences import (
    PreferenceGenerator,
    build_generators,
    generate_all,
    sample_global_preference,
    with_conflict,
)
from .config import TrainConfig
from .core import exploration_noise, noise_sigma
from .learners import Learner, make_learner
from .replay import ReplayBuffer, Transition

CASE_FOR_VARIANT = {"gp": "random", "aa": "observation", "ip": "observation", "scalarized": "observation"}


@dataclass(frozen=True)
class PreferenceConfig:
    """Where preferences come from: per-episode uniform draws or frozen observation generators.

    ``conflict`` shifts each agent's generator toward a different objective
    (observation case only).
    """

    case: str = "observation"
    generator_seed: int = 12345
    scale: float = 1.0
    conflict: float = 0.0

    def __post_init__(self) -> None:
        if self.case not in ("random", "observation"):
            raise ConfigError(f"preference case must be 'random' or 'observation', got {self.case!r}")
        if self.scale <= 0:
            raise ConfigError("preference scale must be > 0")
        if self.conflict < 0:
            raise ConfigError("preference conflict must be >= 0")


class PreferenceSource:
    """Yields the active global preference W (N, M) at each step."""

    def __init__(self, pref_cfg: PreferenceConfig, env: EnvConfig, generators=None) -> None:
        self.case = pref_cfg.case
        self.n_agents, self.m = env.n_agents, env.n_objectives
        self.generators: list[PreferenceGenerator] | None = None
        if self.case == "observation":
            if generators is None:
                generators = build_generators(
                    pref_cfg.generator_seed, env.n_agents, env.n_objectives, env.obs_dim, pref_cfg.scale
                )
                if pref_cfg.conflict:
                    generators = with_conflict(generators, pref_cfg.conflict)
            self.generators = generators
        self._episode_w: np.ndarray | None = None

    def start_episode(self, rng: np.random.Generator) -> None:
        if self.case == "random":
            self._episode_w = sample_global_preference(rng, self.n_agents, self.m)

    def __call__(self, obs: np.ndarray) -> np.ndarray:
        if self.case == "random":
            assert self._episode_w is not None, "start_episode() not called"
            return self._episode_w.copy()
        return generate_all(self.generators, obs)


@dataclass
class TrainResult:
    variant: str
    learner: Learner
    preferences: PreferenceSource
    log: list[dict] = field(default_factory=list)
    loss_trace: list[tuple[int, float]] = field(default_factory=list)


def _streams(seed: int) -> dict[str, np.random.Generator]:
    names = ("init", "env", "noise", "update", "pref")
    return {n: np.random.default_rng(s) for n, s in zip(names, np.random.SeedSequence(seed).spawn(len(names)))}


def run_training(
    variant: str,
    env_cfg: EnvConfig,
    train_cfg: TrainConfig,
    seed: int,
    pref_cfg: PreferenceConfig | None = None,
    max_env_steps: int | None = None,
    log_timing: bool = True,
    on_checkpoint: Callable[[int, Learner], None] | None = None,
) -> TrainResult:
    """Train one variant; returns the learner, one log row per episode and the loss trace.

    Per step: observe, form preferences, act with annealed Gaussian noise,
    step, store. After ``warmup_steps`` and every ``update_every`` steps:
    sample a batch, update critics, actors and targets. With
    ``train_cfg.checkpoint_every > 0``, ``on_checkpoint(episode, learner)`` is
    called after every that-many completed episodes.
    """
    pref_cfg = pref_cfg or PreferenceConfig(case=CASE_FOR_VARIANT.get(variant, "observation"))
    rng = _streams(seed)
    learner = make_learner(variant, env_cfg, train_cfg, rng["init"])
    prefs = PreferenceSource(pref_cfg, env_cfg)
    buffer = ReplayBuffer(train_cfg.buffer_capacity)
    result = TrainResult(variant, learner, prefs)
    total_steps = train_cfg.episodes * env_cfg.max_steps
    if max_env_steps is not None:
        total_steps = min(total_steps, max_env_steps)
    env_step = 0
    episode = 0
    while env_step < total_steps:
        t0 = time.perf_counter()
        state, obs = envs.reset(env_cfg, rng["env"])
        prefs.start_episode(rng["pref"])
        w = prefs(obs)
        returns = np.zeros(env_cfg.n_agents)
        losses: list[float] = []
        done = False
        while not done and env_step < total_steps:
            action = exploration_noise(learner.act(obs, w), env_step, train_cfg, rng["noise"])
            next_state, next_obs, rewards, done = envs.step(state, action, env_cfg)
            next_w = prefs(next_obs)
            buffer.push(
                Transition(
                    state=state.flat(),
                    actions=action,
                    rewards=rewards,
                    next_state=next_state.flat(),
                    prefs=w,
                    obs=obs,
                    next_obs=next_obs,
                    next_prefs=next_w,
                )
            )
            returns += np.sum(w * rewards, axis=1)
            env_step += 1
            if (
                env_step >= train_cfg.warmup_steps
                and env_step % train_cfg.update_every == 0
                and buffer.ready(train_cfg.batch_size)
            ):
                batch = buffer.sample(rng["update"], train_cfg.batch_size)
                try:
                    step_losses = learner.update(batch, rng["update"])
                except DivergedTrainingError as exc:
                    raise DivergedTrainingError(
                        f"{exc} at env step {env_step}", name=exc.name, step=env_step
                    ) from exc
                loss = float(np.mean(step_losses))
                losses.append(loss)
                result.loss_trace.append((env_step, loss))
            state, obs, w = next_state, next_obs, next_w
        row = {
            "episode": episode,
            "env_steps": env_step,
            **{f"return_{i}": float(r) for i, r in enumerate(returns)},
            "loss": float(np.mean(losses)) if losses else float("nan"),
            "sigma": noise_sigma(env_step, train_cfg),
        }
        if log_timing:
            row["wall_ms"] = (time.perf_counter() - t0) * 1000.0
        result.log.append(row)
        episode += 1
        every = train_cfg.checkpoint_every
        if on_checkpoint is not None and every and episode % every == 0:
            on_checkpoint(episode, learner)
    return result
