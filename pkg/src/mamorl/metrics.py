"""Global utility, Pareto filtering and hypervolume.

Convention: every objective is maximised. ``p`` dominates ``q`` iff
``p >= q`` componentwise and ``p != q``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import _kernels, envs
from .envs import EnvConfig
from .errors import UnsupportedDimensionError
from .preferences import PreferenceGenerator, bias_toward

Policy = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ParetoFront:
    points: np.ndarray  # (k, m), mutually non-dominated, each strictly dominating ref
    ref: np.ndarray  # (m,)

    @property
    def n_points(self) -> int:
        return int(self.points.shape[0])

    @property
    def n_objectives(self) -> int:
        return int(self.ref.shape[0])


def _as_policy(policy) -> Policy:
    return policy.act if hasattr(policy, "act") else policy


def random_policy(rng: np.random.Generator, n_agents: int, action_dim: int = 2) -> Policy:
    """Uniform random actions in [-1, 1]."""

    def act(obs, prefs):
        return rng.uniform(-1.0, 1.0, size=(n_agents, action_dim))

    return act


@dataclass
class Rollouts:
    """Per-episode evaluation results.

    vector_returns: (E, N, m) undiscounted reward sums.
    scalar_returns: (E, N) sums of ``w_i[t] . r_i[t]`` with each step's active preference.
    bounds: (E, N) sums of the diagnostic per-step optimum (diagnostic env only, else NaN).
    """

    vector_returns: np.ndarray
    scalar_returns: np.ndarray
    bounds: np.ndarray

    @property
    def gu(self) -> float:
        return float(self.scalar_returns.mean())

    @property
    def bound_gu(self) -> float:
        return float(self.bounds.mean())


def rollout(policy, env_cfg: EnvConfig, prefs, n_states: int, rng: np.random.Generator) -> Rollouts:
    """Greedy evaluation episodes from ``n_states`` initial states drawn from ``rng``.

    ``prefs`` is a :class:`~mamorl.training.PreferenceSource`-like object:
    ``start_episode(rng)`` then ``prefs(obs) -> W``.
    """
    act = _as_policy(policy)
    n, m, t_max = env_cfg.n_agents, env_cfg.n_objectives, env_cfg.max_steps
    vec = np.zeros((n_states, n, m))
    scal = np.zeros((n_states, n))
    bnd = np.full((n_states, n), np.nan)
    diag = env_cfg.env_kind == "diagnostic"
    for e in range(n_states):
        state, obs = envs.reset(env_cfg, rng)
        prefs.start_episode(rng)
        if diag:
            bnd[e] = 0.0
        for _ in range(t_max):
            w = prefs(obs)
            state, obs, r, done = envs.step(state, act(obs, w), env_cfg)
            vec[e] += r
            scal[e] += np.sum(w * r, axis=1)
            if diag:
                bnd[e] += [envs.diagnostic_optimum(env_cfg, wi) for wi in w]
            if done:
                break
    return Rollouts(vec, scal, bnd)


def evaluate_gu(policy, env_cfg: EnvConfig, prefs, n_states: int = 128, rng: np.random.Generator | None = None) -> float:
    """Global utility: mean over initial states and agents of preference-scalarised returns."""
    rng = rng if rng is not None else np.random.default_rng(0)
    return rollout(policy, env_cfg, prefs, n_states, rng).gu


# ------------------------------------------------------------------ Pareto / HV


def pareto_filter(points) -> np.ndarray:
    """Maximal elements under componentwise dominance, duplicates collapsed,
    sorted lexicographically descending."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[None, :]
    if pts.shape[0] == 0:
        return pts.reshape(0, pts.shape[-1] if pts.ndim == 2 else 0)
    front = pts[_kernels.ACTIVE.pareto_mask(np.ascontiguousarray(pts))]
    order = np.lexsort(tuple(-front[:, k] for k in reversed(range(front.shape[1]))))
    return front[order]


def make_front(points, ref) -> ParetoFront:
    """Filter ``points`` and drop those not strictly dominating ``ref``."""
    ref = np.asarray(ref, dtype=np.float64)
    front = pareto_filter(points)
    if front.shape[0]:
        front = front[np.all(front > ref, axis=1)]
    return ParetoFront(front.reshape(-1, ref.shape[0]), ref)


def hypervolume_exact(front, ref=None) -> float:
    """Exact hypervolume for 2 or 3 objectives.

    Accepts a :class:`ParetoFront` or ``(points, ref)``. Points not strictly
    dominating the reference point contribute nothing.
    """
    if isinstance(front, ParetoFront):
        points, ref = front.points, front.ref
    else:
        points = np.asarray(front, dtype=np.float64)
        ref = np.asarray(ref, dtype=np.float64)
    m = ref.shape[0]
    if m not in (2, 3):
        raise UnsupportedDimensionError(
            f"exact hypervolume supports 2 or 3 objectives, got {m}; use hypervolume_mc instead"
        )
    points = points.reshape(-1, m)
    points = np.ascontiguousarray(points[np.all(points > ref, axis=1)])
    if points.shape[0] == 0:
        return 0.0
    kern = _kernels.ACTIVE
    return float(kern.hv2d(points, ref) if m == 2 else kern.hv3d(points, ref))


def hypervolume_mc(front, ref=None, n_samples: int = 1_000_000, rng: np.random.Generator | None = None):
    """Monte-Carlo hypervolume in the box ``[ref, max(front)]``; returns ``(estimate, std_error)``."""
    if isinstance(front, ParetoFront):
        points, ref = front.points, front.ref
    else:
        points = np.asarray(front, dtype=np.float64)
        ref = np.asarray(ref, dtype=np.float64)
    if n_samples < 10_000:
        raise ValueError("n_samples must be >= 1e4")
    rng = rng if rng is not None else np.random.default_rng(0)
    points = points.reshape(-1, ref.shape[0])
    if points.shape[0] == 0:
        return 0.0, 0.0
    upper = points.max(axis=0)
    extent = upper - ref
    if np.any(extent <= 0):
        return 0.0, 0.0
    box = float(np.prod(extent))
    samples = ref + rng.random((n_samples, ref.shape[0])) * extent
    hits = _kernels.ACTIVE.mc_hits(samples, np.ascontiguousarray(points))
    p = hits / n_samples
    return float(box * p), float(box * np.sqrt(p * (1.0 - p) / n_samples))


def reference_point(points, margin: float = 0.1) -> np.ndarray:
    """Componentwise minimum minus ``margin`` times the range (unit range when degenerate)."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, np.shape(points)[-1])
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    span = np.where(hi - lo > 0, hi - lo, np.maximum(np.abs(lo), 1.0))
    return lo - margin * span


def preference_grid(m: int = 2, size: int = 11) -> np.ndarray:
    """Evenly spaced preferences on the simplex (only m = 2 is a line grid)."""
    if m == 1:
        return np.ones((1, 1))
    if m == 2:
        a = np.linspace(1.0, 0.0, size)
        return np.stack([a, 1.0 - a], axis=1)
    steps = size - 1
    grid = [
        np.array(c, dtype=np.float64) / steps
        for c in np.ndindex(*([steps + 1] * (m - 1)))
        if np.sum(c) <= steps
    ]
    return np.array([np.concatenate([g, [1.0 - g.sum()]]) for g in grid])


class _FixedPreference:
    def __init__(self, w: np.ndarray, n_agents: int) -> None:
        self.w = np.tile(w, (n_agents, 1))

    def start_episode(self, rng) -> None:
        pass

    def __call__(self, obs) -> np.ndarray:
        return self.w.copy()


class _GeneratorPreference:
    def __init__(self, generators: list[PreferenceGenerator]) -> None:
        self.generators = generators

    def start_episode(self, rng) -> None:
        pass

    def __call__(self, obs) -> np.ndarray:
        from .preferences import generate_all

        return generate_all(self.generators, obs)


def sweep_preference_sources(case: str, env_cfg: EnvConfig, grid, generators=None) -> list:
    """One preference source per grid point.

    Preference-conditioned (random case) learners get the grid point injected
    for every agent; observation-driven learners keep their generators with
    the bias replaced by ``log(grid point)``.
    """
    if case == "random":
        return [_FixedPreference(np.asarray(w), env_cfg.n_agents) for w in grid]
    if generators is None:
        raise ValueError("observation-driven sweeps need the preference generators")
    return [_GeneratorPreference(bias_toward(generators, w)) for w in grid]


def build_front_from_sweep(
    policy,
    env_cfg: EnvConfig,
    case: str,
    grid=None,
    generators=None,
    n_states: int = 16,
    rng: np.random.Generator | None = None,
    margin: float = 0.1,
) -> tuple[ParetoFront, np.ndarray]:
    """Evaluate the agent-mean return vector at every grid preference, then filter.

    Returns the front (with reference point ``min - margin * range`` over all
    evaluated points) and the raw evaluated points.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    grid = preference_grid(env_cfg.n_objectives) if grid is None else np.asarray(grid, dtype=np.float64)
    sources = sweep_preference_sources(case, env_cfg, grid, generators)
    raw = np.array([rollout(policy, env_cfg, src, n_states, rng).vector_returns.mean(axis=(0, 1)) for src in sources])
    return make_front(raw, reference_point(raw, margin)), raw
