"""Multi-objective particle worlds.

Agents are point masses in ``[-world_size, world_size]^2`` driven by 2-D
force actions. Every agent receives an m-vector reward per step:

* ``spread``: ``[shared coverage/collision score, -energy]``
* ``tag``: ``[catch score, -energy]``; the last ``n_adversaries`` agents are
  the (faster) prey, the rest are the chasers.
* ``diagnostic``: ``[-dist to landmark 0, -dist to landmark 1]`` with two
  fixed landmarks; the per-step optimum has a closed form, see
  :func:`diagnostic_optimum`.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, DimensionError, EpisodeFinishedError

ENV_KINDS = ("spread", "tag", "diagnostic")
DAMPING = 0.75
TAG_CONTACT_REWARD = 10.0
TAG_SHAPING = 0.1


@dataclass(frozen=True)
class EnvConfig:
    env_kind: str = "spread"
    n_agents: int = 2
    n_landmarks: int = 2
    n_adversaries: int = 0
    world_size: float = 1.0
    dt: float = 0.1
    max_steps: int = 25
    energy_move_coeff: float = 1.0
    seed: int = 0
    collision_frac: float = 0.1
    adversary_speed: float = 1.3
    # diagnostic only: fixed landmark positions as (x0, y0, x1, y1)
    diagnostic_landmarks: tuple[float, float, float, float] = (-1.0, 0.0, 1.0, 0.0)

    def __post_init__(self) -> None:
        if self.env_kind not in ENV_KINDS:
            raise ConfigError(f"unknown env_kind {self.env_kind!r}; expected one of {ENV_KINDS}")
        if self.n_agents < 1:
            raise ConfigError("n_agents must be >= 1")
        if self.n_landmarks < 1:
            raise ConfigError("n_landmarks must be >= 1")
        if self.env_kind == "spread" and self.n_landmarks < self.n_agents:
            raise ConfigError("spread needs n_landmarks >= n_agents")
        if self.env_kind == "diagnostic" and self.n_landmarks != 2:
            raise ConfigError("diagnostic uses exactly 2 landmarks")
        if self.env_kind == "tag":
            if not 1 <= self.n_adversaries < self.n_agents:
                raise ConfigError("tag needs 1 <= n_adversaries < n_agents")
        elif self.n_adversaries != 0:
            raise ConfigError("n_adversaries is only valid for tag")
        if self.dt <= 0:
            raise ConfigError("dt must be > 0")
        if self.max_steps < 1:
            raise ConfigError("max_steps must be >= 1")
        if self.energy_move_coeff < 0:
            raise ConfigError("energy_move_coeff must be >= 0")
        if self.world_size <= 0:
            raise ConfigError("world_size must be > 0")

    @property
    def n_objectives(self) -> int:
        return 2

    @property
    def action_dim(self) -> int:
        return 2

    @property
    def obs_dim(self) -> int:
        return 4 + 2 * self.n_landmarks + 2 * (self.n_agents - 1)

    @property
    def state_dim(self) -> int:
        return 4 * self.n_agents + 2 * self.n_landmarks

    @property
    def collision_radius(self) -> float:
        return self.collision_frac * self.world_size

    def landmark_array(self) -> np.ndarray:
        return np.asarray(self.diagnostic_landmarks, dtype=np.float64).reshape(2, 2)


@dataclass(frozen=True)
class WorldState:
    """Agent positions, landmark positions, agent velocities, step counter."""

    agent_pos: np.ndarray
    landmark_pos: np.ndarray
    agent_vel: np.ndarray
    step_index: int = 0

    @property
    def positions(self) -> np.ndarray:
        return np.concatenate([self.agent_pos, self.landmark_pos], axis=0)

    def flat(self) -> np.ndarray:
        """Global state vector: agent positions, agent velocities, landmark positions."""
        return np.concatenate([self.agent_pos.ravel(), self.agent_vel.ravel(), self.landmark_pos.ravel()])

    def translated(self, offset) -> "WorldState":
        offset = np.asarray(offset, dtype=np.float64)
        return replace(self, agent_pos=self.agent_pos + offset, landmark_pos=self.landmark_pos + offset)


def observe(state: WorldState, agent_index: int, config: EnvConfig) -> np.ndarray:
    if not 0 <= agent_index < config.n_agents:
        raise IndexError(f"agent_index {agent_index} out of range for {config.n_agents} agents")
    me = state.agent_pos[agent_index]
    others = np.delete(state.agent_pos, agent_index, axis=0)
    return np.concatenate(
        [me, state.agent_vel[agent_index], (state.landmark_pos - me).ravel(), (others - me).ravel()]
    )


def observe_all(state: WorldState, config: EnvConfig) -> np.ndarray:
    return np.stack([observe(state, i, config) for i in range(config.n_agents)])


def reset(config: EnvConfig, rng: np.random.Generator) -> tuple[WorldState, np.ndarray]:
    w = config.world_size
    agent_pos = rng.uniform(-w, w, size=(config.n_agents, 2))
    if config.env_kind == "diagnostic":
        landmark_pos = config.landmark_array().copy()
    else:
        landmark_pos = rng.uniform(-w, w, size=(config.n_landmarks, 2))
    state = WorldState(agent_pos, landmark_pos, np.zeros((config.n_agents, 2)), 0)
    return state, observe_all(state, config)


def _force_scale(config: EnvConfig) -> np.ndarray:
    s = np.ones(config.n_agents)
    if config.env_kind == "tag":
        s[config.n_agents - config.n_adversaries :] = config.adversary_speed
    return s


def step(
    state: WorldState, actions, config: EnvConfig
) -> tuple[WorldState, np.ndarray, np.ndarray, bool]:
    """Advance one tick with semi-implicit Euler; returns (next_state, obs, rewards, done)."""
    if state.step_index >= config.max_steps:
        raise EpisodeFinishedError(f"episode finished at step {state.step_index}")
    actions = np.asarray(actions, dtype=np.float64)
    if actions.shape != (config.n_agents, 2):
        raise DimensionError(f"actions must have shape {(config.n_agents, 2)}, got {actions.shape}")
    force = np.clip(actions, -1.0, 1.0) * _force_scale(config)[:, None]
    vel = DAMPING * state.agent_vel + config.dt * force
    w = config.world_size
    pos = np.clip(state.agent_pos + config.dt * vel, -w, w)
    nxt = WorldState(pos, state.landmark_pos, vel, state.step_index + 1)
    rewards = compute_rewards(config.env_kind, state, nxt, force, config)
    return nxt, observe_all(nxt, config), rewards, nxt.step_index == config.max_steps


def _pairwise(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.linalg.norm(a[:, None, :] - b[None, :, :], axis=-1)


def compute_rewards(
    env_kind: str, state: WorldState, next_state: WorldState, actions, config: EnvConfig
) -> np.ndarray:
    """Per-agent reward vectors, shape ``(n_agents, 2)``; ``actions`` are applied forces."""
    if env_kind not in ENV_KINDS:
        raise ConfigError(f"unknown env_kind {env_kind!r}")
    forces = np.asarray(actions, dtype=np.float64)
    n = config.n_agents
    pos = next_state.agent_pos
    rewards = np.zeros((n, 2))

    if env_kind == "diagnostic":
        rewards[:, :] = -_pairwise(pos, next_state.landmark_pos)
        return rewards

    if env_kind == "spread":
        cover = _pairwise(next_state.landmark_pos, pos).min(axis=1).sum()
        dist = _pairwise(pos, pos)
        collisions = np.count_nonzero(np.triu(dist < config.collision_radius, k=1))
        rewards[:, 0] = -cover - float(collisions)
    else:
        n_adv = config.n_adversaries
        chasers, prey = pos[: n - n_adv], pos[n - n_adv :]
        d = _pairwise(chasers, prey)
        contact = d < config.collision_radius
        rewards[: n - n_adv, 0] = TAG_CONTACT_REWARD * contact.sum() - TAG_SHAPING * d.min(axis=1)
        rewards[n - n_adv :, 0] = -TAG_CONTACT_REWARD * contact.sum(axis=0) + TAG_SHAPING * d.min(axis=0)

    moved = np.linalg.norm(next_state.agent_pos - state.agent_pos, axis=1)
    rewards[:, 1] = -config.energy_move_coeff * np.linalg.norm(forces, axis=1) * moved
    return rewards


def diagnostic_optimum(config: EnvConfig, preference) -> float:
    """Best achievable per-step scalarised reward in the diagnostic world.

    ``min_p w0*d0 + w1*d1`` is attained on the landmark segment and equals
    ``min(w0, w1) * |l0 - l1|``; the bound is its negation.
    """
    if config.env_kind != "diagnostic":
        raise ConfigError("diagnostic_optimum requires env_kind='diagnostic'")
    w = np.asarray(preference, dtype=np.float64)
    if w.shape != (2,):
        raise DimensionError(f"diagnostic preference must have 2 components, got {w.shape}")
    lm = config.landmark_array()
    return -float(w.min() * np.linalg.norm(lm[0] - lm[1]))


def diagnostic_optimum_point(config: EnvConfig, preference) -> np.ndarray:
    """A minimiser of the weighted distance sum (landmark 0 on ties)."""
    w = np.asarray(preference, dtype=np.float64)
    lm = config.landmark_array()
    return lm[1].copy() if w[1] > w[0] else lm[0].copy()


@dataclass
class ParticleEnv:
    """Stateful convenience wrapper around :func:`reset` / :func:`step`."""

    config: EnvConfig
    rng: np.random.Generator = field(default=None)  # type: ignore[assignment]
    state: WorldState | None = None

    def __post_init__(self) -> None:
        if self.rng is None:
            self.rng = np.random.default_rng(self.config.seed)

    def reset(self) -> np.ndarray:
        self.state, obs = reset(self.config, self.rng)
        return obs

    def step(self, actions) -> tuple[np.ndarray, np.ndarray, bool]:
        if self.state is None:
            raise EpisodeFinishedError("call reset() before step()")
        self.state, obs, rewards, done = step(self.state, actions, self.config)
        return obs, rewards, done
