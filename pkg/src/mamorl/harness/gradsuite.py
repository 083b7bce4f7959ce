"""Finite-difference checks of every network at its full architecture."""

from __future__ import annotations

import numpy as np

from .. import autodiff as ad
from ..autodiff import Tensor, check_parameters, finite_difference_check
from ..networks import Actor, AttentionCritic, MLPCritic, gp_critic_forward

THRESHOLD = 1e-4
NETWORKS = ("actor", "gp_critic", "aa_critic")


def _projected(out: Tensor, proj: np.ndarray) -> Tensor:
    """Scalar ``sum(proj * out)`` so every output coordinate contributes a distinct gradient."""
    return ad.sum(ad.mul(out, proj))


def _check_actor(rng, eps, max_coords, n_agents=2, obs_dim=12, m=2, batch=3):
    actor = Actor(obs_dim, 2, rng, pref_dim=n_agents * m, final_init=0.3)
    obs = Tensor(rng.normal(size=(batch, obs_dim)))
    prefs = rng.dirichlet(np.ones(m), size=(batch, n_agents))
    proj = rng.normal(size=(batch, 2))
    f = lambda: _projected(actor(obs, prefs), proj)  # noqa: E731
    errs = check_parameters(f, actor.params, eps, max_coords, rng)
    errs["input"] = finite_difference_check(lambda x: _projected(actor(x, prefs), proj), obs, eps)
    return errs


def _check_gp_critic(rng, eps, max_coords, n_agents=2, state_dim=12, m=2, batch=3):
    critic = MLPCritic(state_dim + n_agents * (2 + m), m, rng)
    state = rng.normal(size=(batch, state_dim))
    actions = Tensor(rng.uniform(-1, 1, size=(batch, n_agents, 2)))
    prefs = rng.dirichlet(np.ones(m), size=(batch, n_agents))
    proj = rng.normal(size=(batch, m))
    f = lambda: _projected(gp_critic_forward(critic, state, actions, prefs), proj)  # noqa: E731
    errs = check_parameters(f, critic.params, eps, max_coords, rng)
    errs["actions"] = finite_difference_check(
        lambda a: _projected(gp_critic_forward(critic, state, a, prefs), proj), actions, eps
    )
    return errs


def _check_aa_critic(rng, eps, max_coords, n_agents=3, obs_dim=12, m=2, batch=2):
    critic = AttentionCritic([obs_dim] * n_agents, [2] * n_agents, m, rng)
    obs = [rng.normal(size=(batch, obs_dim)) for _ in range(n_agents)]
    acts = [Tensor(rng.uniform(-1, 1, size=(batch, 2))) for _ in range(n_agents)]
    prefs = [rng.dirichlet(np.ones(m), size=batch) for _ in range(n_agents)]
    projs = [rng.normal(size=(batch, m)) for _ in range(n_agents)]

    def loss(actions=acts):
        qs = critic(obs, actions, prefs)
        total = _projected(qs[0], projs[0])
        for q, p in zip(qs[1:], projs[1:]):
            total = ad.add(total, _projected(q, p))
        return total

    errs = check_parameters(loss, critic.params, eps, max_coords, rng)
    errs["action0"] = finite_difference_check(lambda a: loss([a, *acts[1:]]), acts[0], eps)
    return errs


_CHECKS = {"actor": _check_actor, "gp_critic": _check_gp_critic, "aa_critic": _check_aa_critic}


def run_gradient_suite(
    seeds=range(10), eps: float = 1e-6, max_coords: int | None = 8
) -> dict[str, float]:
    """Max relative error per network over all seeds, parameters and probed coordinates.

    Networks keep their full widths; ``max_coords`` bounds the probed
    coordinates per tensor (None probes every coordinate).
    """
    worst = dict.fromkeys(NETWORKS, 0.0)
    for seed in seeds:
        for name, check in _CHECKS.items():
            rng = np.random.default_rng([int(seed), NETWORKS.index(name)])
            errs = check(rng, eps, max_coords)
            worst[name] = max(worst[name], max(errs.values()))
    return worst
