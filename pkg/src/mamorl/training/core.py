"""Update rules shared by all learners."""

from __future__ import annotations

import numpy as np

from .. import autodiff as ad
from ..autodiff import Tensor
from ..errors import DimensionError
from ..networks import Actor, MLPCritic, Module, gp_critic_forward
from ..preferences import sample_uniform_simplex_batch
from .config import TrainConfig


def scalarize(w, v):
    """Preference-weighted sum ``w . v`` over the last axis."""
    w = np.asarray(w, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if w.shape[-1] != v.shape[-1]:
        raise DimensionError(f"preference length {w.shape[-1]} does not match value length {v.shape[-1]}")
    out = np.sum(w * v, axis=-1)
    return float(out) if out.ndim == 0 else out


def scalarize_tensor(w, q: Tensor) -> Tensor:
    """Differentiable ``sum(w * q, axis=-1)``."""
    return ad.sum(ad.mul(q, w), axis=-1)


def soft_update(online: Module, target: Module, tau: float) -> None:
    """``target <- tau * online + (1 - tau) * target`` for every parameter."""
    if online.params.keys() != target.params.keys():
        raise DimensionError("online and target networks have different parameter sets")
    for name, p in online.params.items():
        t = target.params[name]
        if t.shape != p.shape:
            raise DimensionError(f"{name}: shape {p.shape} vs target {t.shape}")
        if tau == 1.0:
            t.data[...] = p.data
        else:
            t.data *= 1.0 - tau
            t.data += tau * p.data


def noise_sigma(step: int, cfg: TrainConfig) -> float:
    """Gaussian exploration scale, linearly annealed then held at the end value."""
    if cfg.noise_decay_steps <= 0:
        return cfg.noise_sigma_end
    frac = min(max(step, 0) / cfg.noise_decay_steps, 1.0)
    return cfg.noise_sigma_start + frac * (cfg.noise_sigma_end - cfg.noise_sigma_start)


def exploration_noise(action, step: int, cfg: TrainConfig, rng: np.random.Generator) -> np.ndarray:
    action = np.asarray(action, dtype=np.float64)
    sigma = noise_sigma(step, cfg)
    if sigma > 0:
        action = action + rng.normal(0.0, sigma, size=action.shape)
    return np.clip(action, -1.0, 1.0)


def gpi_select_action(
    actor: Actor,
    critic: MLPCritic,
    obs_i: np.ndarray,
    state: np.ndarray,
    joint_actions: np.ndarray,
    prefs: np.ndarray,
    agent: int,
    rng: np.random.Generator,
    n_candidates: int = 32,
    return_scores: bool = False,
):
    """Pick agent ``agent``'s action by generalised policy improvement over its own preference.

    Candidate 0 is the true preference; candidates 1..K are uniform simplex
    draws replacing the agent's own entry of ``W``. Each candidate induces
    ``mu_i(o_i, W')`` and is scored by ``w_i . Q_i(s, a_{-i}, mu_i(o_i, W'), W')``
    under the true ``w_i``; the highest score wins (lowest index on ties).

    Shapes: obs_i (B, obs_dim), state (B, S), joint_actions (B, N, a),
    prefs (B, N, M). Returns actions (B, a) and, optionally, the candidate
    scores (B, K+1).
    """
    b, n, m = prefs.shape
    c = n_candidates + 1
    cand = np.repeat(prefs[:, None, :, :], c, axis=1)  # (B, C, N, M)
    if c > 1:
        cand[:, 1:, agent, :] = sample_uniform_simplex_batch(rng, (b, c - 1), m)
    flat_prefs = cand.reshape(b * c, n, m)
    obs_rep = np.repeat(obs_i, c, axis=0)
    cand_actions = actor.forward(obs_rep, flat_prefs).data  # (B*C, a)
    acts = np.repeat(joint_actions, c, axis=0).copy()
    acts[:, agent, :] = cand_actions
    q = gp_critic_forward(critic, np.repeat(state, c, axis=0), acts, flat_prefs).data
    true_w = np.repeat(prefs[:, agent, :], c, axis=0)
    scores = scalarize(true_w, q).reshape(b, c)
    best = np.argmax(scores, axis=1)
    chosen = cand_actions.reshape(b, c, -1)[np.arange(b), best]
    if return_scores:
        return chosen, scores
    return chosen


def mse_vector_loss(q: Tensor, y: np.ndarray) -> Tensor:
    """Mean over the batch of the squared error summed over objectives."""
    diff = ad.sub(q, y)
    return ad.mean(ad.sum(ad.square(diff), axis=-1))
