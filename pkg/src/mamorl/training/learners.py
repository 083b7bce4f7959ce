"""The four learner variants.

* ``GPLearner``: preference-conditioned actors ``mu_i(o_i, W)`` and per-agent
  global critics ``Q_i(s, A, W)``; targets use GPI over the agent's own
  preference.
* ``AALearner``: observation-only actors and one attention critic with
  per-agent embeddings/heads and a shared attention block.
* ``IPLearner``: ablation whose critics see only ``(o_i, a_i, w_i)``.
* ``ScalarizedLearner``: single-objective baseline; scalar critics over
  ``(s, A)`` trained on ``w_i . r_i``.

All learners expose ``act``, ``compute_targets``, ``critic_update``,
``actor_update``, ``soft_update`` and ``state_dict``/``load_state_dict``.
"""

from __future__ import annotations

from typing import ClassVar

import numpy as np

from .. import autodiff as ad
from ..autodiff import Adam, Tape, Tensor
from ..envs import EnvConfig
from ..errors import DivergedTrainingError
from ..networks import (
    Actor,
    AttentionCritic,
    MLPCritic,
    Module,
    clone_as_target,
    gp_critic_forward,
    split_agents,
)
from .config import TrainConfig
from .core import gpi_select_action, mse_vector_loss, scalarize_tensor, soft_update
from .replay import Batch

VARIANTS = ("gp", "aa", "ip", "scalarized")


def _check_loss(value: float, name: str) -> float:
    if not np.isfinite(value):
        raise DivergedTrainingError(f"non-finite loss in {name}", name=name)
    return value


class Learner:
    variant: ClassVar[str]
    uses_global_preference: ClassVar[bool] = False

    def __init__(self, env: EnvConfig, cfg: TrainConfig, rng: np.random.Generator) -> None:
        self.env, self.cfg = env, cfg
        self.n_agents = env.n_agents
        self.n_obj = env.n_objectives
        self.actors = [self._make_actor(rng) for _ in range(self.n_agents)]
        self.target_actors = [clone_as_target(a) for a in self.actors]
        self.actor_opts = [Adam(a.params, cfg.actor_lr) for a in self.actors]
        self._build_critics(rng)

    # construction hooks
    def _make_actor(self, rng: np.random.Generator) -> Actor:
        return Actor(self.env.obs_dim, self.env.action_dim, rng)

    def _build_critics(self, rng: np.random.Generator) -> None:
        raise NotImplementedError

    # acting
    def _actor_prefs(self, prefs: np.ndarray):
        """Preference input to the actors; ``prefs`` is (B, N, M)."""
        return prefs if self.uses_global_preference else None

    def act(self, obs: np.ndarray, prefs: np.ndarray) -> np.ndarray:
        """Greedy joint action (N, a) from per-agent observations (N, obs_dim) and W (N, M)."""
        w = self._actor_prefs(prefs[None])
        return np.stack([a.act(obs[None, i], w)[0] for i, a in enumerate(self.actors)])

    def target_actions(self, next_obs: np.ndarray, next_prefs: np.ndarray) -> np.ndarray:
        w = self._actor_prefs(next_prefs)
        return np.stack([a.act(next_obs[:, i], w) for i, a in enumerate(self.target_actors)], axis=1)

    # learning
    def compute_targets(self, batch: Batch, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def critic_update(self, batch: Batch, targets: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def actor_update(self, batch: Batch) -> None:
        raise NotImplementedError

    def update(self, batch: Batch, rng: np.random.Generator) -> np.ndarray:
        """One full gradient round: targets, critic step, actor step, soft target update."""
        y = self.compute_targets(batch, rng)
        losses = self.critic_update(batch, y)
        self.actor_update(batch)
        self.soft_update(self.cfg.tau)
        return losses

    def online_modules(self) -> dict[str, Module]:
        raise NotImplementedError

    def target_modules(self) -> dict[str, Module]:
        raise NotImplementedError

    def soft_update(self, tau: float) -> None:
        targets = self.target_modules()
        for key, online in self.online_modules().items():
            soft_update(online, targets[key], tau)

    def state_dict(self) -> dict[str, np.ndarray]:
        out = {}
        for group, modules in (("online", self.online_modules()), ("target", self.target_modules())):
            for key, mod in modules.items():
                for name, value in mod.state_dict().items():
                    out[f"{group}/{key}/{name}"] = value
        return out

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        for group, modules in (("online", self.online_modules()), ("target", self.target_modules())):
            for key, mod in modules.items():
                prefix = f"{group}/{key}/"
                mod.load_state_dict({k[len(prefix):]: v for k, v in state.items() if k.startswith(prefix)})

    def _actor_step(self, loss: Tensor, tape: Tape) -> None:
        _check_loss(float(loss.data), "actor loss")
        params = [p for a in self.actors for p in a.params.values()]
        tape.backward(loss, only=params)
        for opt in self.actor_opts:
            opt.step()


class _PerAgentCriticLearner(Learner):
    """Shared plumbing for learners with one MLP critic per agent."""

    critics: list[MLPCritic]

    def _critic_in_dim(self) -> int:
        raise NotImplementedError

    def _critic_out_dim(self) -> int:
        return self.n_obj

    def _build_critics(self, rng: np.random.Generator) -> None:
        self.critics = [MLPCritic(self._critic_in_dim(), self._critic_out_dim(), rng) for _ in range(self.n_agents)]
        self.target_critics = [clone_as_target(c) for c in self.critics]
        self.critic_opts = [Adam(c.params, self.cfg.critic_lr) for c in self.critics]

    def online_modules(self) -> dict[str, Module]:
        mods: dict[str, Module] = {f"actor{i}": a for i, a in enumerate(self.actors)}
        mods.update({f"critic{i}": c for i, c in enumerate(self.critics)})
        return mods

    def target_modules(self) -> dict[str, Module]:
        mods: dict[str, Module] = {f"actor{i}": a for i, a in enumerate(self.target_actors)}
        mods.update({f"critic{i}": c for i, c in enumerate(self.target_critics)})
        return mods

    def _q(self, critic: MLPCritic, i: int, state, obs, actions, prefs) -> Tensor:
        raise NotImplementedError

    def _reward_target(self, batch: Batch, i: int) -> np.ndarray:
        return batch.rewards[:, i, :]

    def critic_update(self, batch: Batch, targets: np.ndarray) -> np.ndarray:
        losses = np.zeros(self.n_agents)
        for i, (critic, opt) in enumerate(zip(self.critics, self.critic_opts)):
            with Tape() as tape:
                q = self._q(critic, i, batch.state, batch.obs, batch.actions, batch.prefs)
                loss = mse_vector_loss(q, targets[:, i, :])
            losses[i] = _check_loss(float(loss.data), f"critic{i} loss")
            tape.backward(loss, only=list(critic.params.values()))
            opt.step()
        return losses

    def _actor_objective(self, i: int, q: Tensor, batch: Batch) -> Tensor:
        return scalarize_tensor(batch.prefs[:, i, :], q)

    def actor_loss(self, batch: Batch) -> Tensor:
        """Sum over agents of the negated mean scalarised Q, other agents' actions from the batch."""
        total = None
        for i, actor in enumerate(self.actors):
            a_i = actor.forward(batch.obs[:, i], self._actor_prefs(batch.prefs))
            acts = [Tensor(batch.actions[:, j]) if j != i else a_i for j in range(self.n_agents)]
            joint = ad.stack(acts, axis=1)
            q = self._q(self.critics[i], i, batch.state, batch.obs, joint, batch.prefs)
            term = ad.neg(ad.mean(self._actor_objective(i, q, batch)))
            total = term if total is None else ad.add(total, term)
        return total

    def actor_update(self, batch: Batch) -> None:
        for c in self.critics:
            c.requires_grad_(False)
        try:
            with Tape() as tape:
                total = self.actor_loss(batch)
            self._actor_step(total, tape)
        finally:
            for c in self.critics:
                c.requires_grad_(True)

    def compute_targets(self, batch: Batch, rng: np.random.Generator) -> np.ndarray:
        next_a = self.target_actions(batch.next_obs, batch.next_prefs)
        ys = []
        for i, critic in enumerate(self.target_critics):
            q = self._q(critic, i, batch.next_state, batch.next_obs, next_a, batch.next_prefs).data
            ys.append(self._reward_target(batch, i) + self.cfg.gamma * q)
        return np.stack(ys, axis=1)


class GPLearner(_PerAgentCriticLearner):
    variant = "gp"
    uses_global_preference = True

    def _make_actor(self, rng: np.random.Generator) -> Actor:
        return Actor(self.env.obs_dim, self.env.action_dim, rng, pref_dim=self.n_agents * self.n_obj)

    def _critic_in_dim(self) -> int:
        return self.env.state_dim + self.n_agents * (self.env.action_dim + self.n_obj)

    def _q(self, critic, i, state, obs, actions, prefs) -> Tensor:
        return gp_critic_forward(critic, state, actions, prefs)

    def compute_targets(self, batch: Batch, rng: np.random.Generator) -> np.ndarray:
        next_a = self.target_actions(batch.next_obs, batch.next_prefs)
        ys = []
        for i in range(self.n_agents):
            a_gpi = gpi_select_action(
                self.target_actors[i],
                self.target_critics[i],
                batch.next_obs[:, i],
                batch.next_state,
                next_a,
                batch.next_prefs,
                i,
                rng,
                self.cfg.gpi_candidates,
            )
            acts = next_a.copy()
            acts[:, i] = a_gpi
            q = gp_critic_forward(self.target_critics[i], batch.next_state, acts, batch.next_prefs).data
            ys.append(batch.rewards[:, i, :] + self.cfg.gamma * q)
        return np.stack(ys, axis=1)


class IPLearner(_PerAgentCriticLearner):
    variant = "ip"

    def _critic_in_dim(self) -> int:
        return self.env.obs_dim + self.env.action_dim + self.n_obj

    def _q(self, critic, i, state, obs, actions, prefs) -> Tensor:
        a_i = actions[:, i] if not isinstance(actions, Tensor) else ad.getitem(actions, (slice(None), i))
        return critic.forward(obs[:, i], a_i, prefs[:, i])


class ScalarizedLearner(_PerAgentCriticLearner):
    variant = "scalarized"

    def _critic_in_dim(self) -> int:
        return self.env.state_dim + self.n_agents * self.env.action_dim

    def _critic_out_dim(self) -> int:
        return 1

    def _q(self, critic, i, state, obs, actions, prefs) -> Tensor:
        a = actions if isinstance(actions, Tensor) else Tensor(actions)
        return critic.forward(state, ad.reshape(a, (a.shape[0], -1)))

    def _reward_target(self, batch: Batch, i: int) -> np.ndarray:
        return np.sum(batch.prefs[:, i, :] * batch.rewards[:, i, :], axis=-1, keepdims=True)

    def _actor_objective(self, i: int, q: Tensor, batch: Batch) -> Tensor:
        return ad.sum(q, axis=-1)


class AALearner(Learner):
    variant = "aa"

    def _build_critics(self, rng: np.random.Generator) -> None:
        n = self.n_agents
        self.critic = AttentionCritic([self.env.obs_dim] * n, [self.env.action_dim] * n, self.n_obj, rng)
        self.target_critic = clone_as_target(self.critic)
        self.critic_opt = Adam(self.critic.params, self.cfg.critic_lr)

    def online_modules(self) -> dict[str, Module]:
        mods: dict[str, Module] = {f"actor{i}": a for i, a in enumerate(self.actors)}
        mods["critic"] = self.critic
        return mods

    def target_modules(self) -> dict[str, Module]:
        mods: dict[str, Module] = {f"actor{i}": a for i, a in enumerate(self.target_actors)}
        mods["critic"] = self.target_critic
        return mods

    def compute_targets(self, batch: Batch, rng: np.random.Generator) -> np.ndarray:
        # observation-only actors ignore preferences, so GPI over candidate
        # preferences collapses to the plain target action
        n = self.n_agents
        next_a = self.target_actions(batch.next_obs, batch.next_prefs)
        qs = self.target_critic.forward(
            split_agents(batch.next_obs, n), split_agents(next_a, n), split_agents(batch.next_prefs, n)
        )
        q = np.stack([t.data for t in qs], axis=1)
        return batch.rewards + self.cfg.gamma * q

    def critic_update(self, batch: Batch, targets: np.ndarray) -> np.ndarray:
        n = self.n_agents
        with Tape() as tape:
            qs = self.critic.forward(
                split_agents(batch.obs, n), split_agents(batch.actions, n), split_agents(batch.prefs, n)
            )
            losses = [mse_vector_loss(q, targets[:, i, :]) for i, q in enumerate(qs)]
        shared = list(self.critic.shared_params().values())
        values = np.zeros(n)
        for i, loss in enumerate(losses):
            values[i] = _check_loss(float(loss.data), f"attention critic loss (agent {i})")
            # agent i's embedding and head learn from its own loss; the shared
            # block accumulates every agent's loss
            tape.backward(loss, only=list(self.critic.agent_params(i).values()) + shared)
        self.critic_opt.step()
        return values

    def actor_loss(self, batch: Batch) -> Tensor:
        """Sum over agents of the negated mean scalarised own-head Q.

        All agents share one critic pass over a stacked batch: block i
        replaces agent i's action with ``mu_i(o_i)`` and keeps the others'
        batch actions.
        """
        n, b = self.n_agents, batch.size
        own = [actor.forward(batch.obs[:, i]) for i, actor in enumerate(self.actors)]
        act_cols = []
        for j in range(n):
            blocks = [own[j] if blk == j else Tensor(batch.actions[:, j]) for blk in range(n)]
            act_cols.append(ad.concat(blocks, axis=0))
        obs_rep = np.tile(batch.obs, (n, 1, 1))
        pref_rep = np.tile(batch.prefs, (n, 1, 1))
        h = self.critic.trunk(split_agents(obs_rep, n), act_cols, split_agents(pref_rep, n))
        total = None
        for i in range(n):
            h_i = ad.getitem(h, (slice(i * b, (i + 1) * b), i, slice(None)))
            q_i = self.critic.q_head(i, h_i)
            term = ad.neg(ad.mean(scalarize_tensor(batch.prefs[:, i, :], q_i)))
            total = term if total is None else ad.add(total, term)
        return total

    def actor_update(self, batch: Batch) -> None:
        self.critic.requires_grad_(False)
        try:
            with Tape() as tape:
                total = self.actor_loss(batch)
            self._actor_step(total, tape)
        finally:
            self.critic.requires_grad_(True)


LEARNERS: dict[str, type[Learner]] = {
    "gp": GPLearner,
    "aa": AALearner,
    "ip": IPLearner,
    "scalarized": ScalarizedLearner,
}


def make_learner(variant: str, env: EnvConfig, cfg: TrainConfig, rng: np.random.Generator) -> Learner:
    try:
        cls = LEARNERS[variant]
    except KeyError:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}") from None
    return cls(env, cfg, rng)
