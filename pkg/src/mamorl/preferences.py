"""Preference vectors on the probability simplex.

Two sources are supported: uniform draws on the simplex (one per agent per
episode) and frozen observation-driven generators ``w = softmax(A o + b)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DimensionError

SIMPLEX_TOL = 1e-9


def is_valid_preference(w, tol: float = SIMPLEX_TOL) -> bool:
    w = np.asarray(w, dtype=np.float64)
    return bool(w.ndim == 1 and w.size >= 1 and np.all(w >= 0) and abs(w.sum() - 1.0) <= tol)


def sample_uniform_simplex(rng: np.random.Generator, m: int) -> np.ndarray:
    """Exact uniform draw from the (m-1)-simplex via sorted uniform gaps."""
    if m < 1:
        raise ConfigError(f"number of objectives must be >= 1, got {m}")
    if m == 1:
        return np.ones(1)
    cuts = np.sort(rng.random(m - 1))
    w = np.diff(np.concatenate(([0.0], cuts, [1.0])))
    return w / w.sum()


def sample_uniform_simplex_batch(rng: np.random.Generator, size: tuple[int, ...], m: int) -> np.ndarray:
    """Array of shape ``size + (m,)`` of independent uniform simplex draws."""
    if m < 1:
        raise ConfigError(f"number of objectives must be >= 1, got {m}")
    if m == 1:
        return np.ones(tuple(size) + (1,))
    cuts = np.sort(rng.random(tuple(size) + (m - 1,)), axis=-1)
    zeros = np.zeros(tuple(size) + (1,))
    ones = np.ones(tuple(size) + (1,))
    w = np.diff(np.concatenate([zeros, cuts, ones], axis=-1), axis=-1)
    return w / w.sum(axis=-1, keepdims=True)


def sample_global_preference(rng: np.random.Generator, n_agents: int, m: int) -> np.ndarray:
    return np.stack([sample_uniform_simplex(rng, m) for _ in range(n_agents)])


def _softmax(z: np.ndarray) -> np.ndarray:
    e = np.exp(z - z.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


@dataclass(frozen=True)
class PreferenceGenerator:
    """Deterministic map from one agent's observation to its preference."""

    agent_index: int
    weight: np.ndarray  # (M, obs_dim)
    bias: np.ndarray  # (M,)

    def __post_init__(self) -> None:
        self.weight.setflags(write=False)
        self.bias.setflags(write=False)

    @property
    def frozen(self) -> bool:
        return True

    @property
    def n_objectives(self) -> int:
        return self.weight.shape[0]

    @property
    def obs_dim(self) -> int:
        return self.weight.shape[1]

    def __call__(self, obs) -> np.ndarray:
        return generate_from_observation(self, obs)

    def with_bias(self, bias) -> "PreferenceGenerator":
        return PreferenceGenerator(self.agent_index, self.weight, np.array(bias, dtype=np.float64))


def generate_from_observation(gen: PreferenceGenerator, obs) -> np.ndarray:
    """``softmax(A o + b)``; accepts one observation or a batch along the leading axis."""
    o = np.asarray(obs, dtype=np.float64)
    if o.shape[-1] != gen.obs_dim:
        raise DimensionError(f"observation has {o.shape[-1]} features, generator expects {gen.obs_dim}")
    return _softmax(o @ gen.weight.T + gen.bias)


def build_generators(
    seed: int, n_agents: int, m: int, obs_dim: int, scale: float = 1.0
) -> list[PreferenceGenerator]:
    """Agent-specific frozen generators with ``A_ij ~ N(0, scale^2 / obs_dim)`` and zero bias.

    Each agent draws from its own child stream of ``seed``, so the same seed
    reproduces the same generators across every algorithm being compared.
    """
    if scale <= 0:
        raise ConfigError(f"generator scale must be > 0, got {scale}")
    streams = np.random.SeedSequence(seed).spawn(n_agents)
    gens = []
    for i, ss in enumerate(streams):
        rng = np.random.default_rng(ss)
        a = rng.normal(0.0, scale / np.sqrt(obs_dim), size=(m, obs_dim))
        gens.append(PreferenceGenerator(i, a, np.zeros(m)))
    return gens


def generate_all(generators: list[PreferenceGenerator], observations: np.ndarray) -> np.ndarray:
    """Global preference ``W`` of shape (N, M) (or (B, N, M) for batched observations)."""
    return np.stack(
        [g(observations[..., i, :]) for i, g in enumerate(generators)], axis=-2
    )


def with_conflict(generators: list[PreferenceGenerator], strength: float) -> list[PreferenceGenerator]:
    """Add ``strength`` to agent i's logit for objective ``i mod M`` so agents lean toward different objectives."""
    out = []
    for g in generators:
        b = np.array(g.bias, dtype=np.float64)
        b[g.agent_index % g.n_objectives] += strength
        out.append(g.with_bias(b))
    return out


def bias_toward(generators: list[PreferenceGenerator], target) -> list[PreferenceGenerator]:
    """Replace every generator's bias with ``log(target)`` so that zero logits map to ``target``."""
    b = np.log(np.clip(np.asarray(target, dtype=np.float64), 1e-6, None))
    return [g.with_bias(b) for g in generators]
