"""Actors and critics built on :mod:`mamorl.autodiff`.

Shapes: batch first. ``Actor`` maps ``(B, obs_dim)`` (plus the flattened
global preference for preference-conditioned actors) to ``(B, action_dim)``.
``MLPCritic`` is a plain ReLU MLP over a concatenated input and serves as the
global-preference critic, the local-input ablation critic and the scalar
baseline critic. ``AttentionCritic`` embeds every agent's
``[o_i; a_i; w_i]``, mixes the embeddings with shared multi-head attention,
applies a residual FFN + LayerNorm and reads per-agent vector Q-values.
"""

from __future__ import annotations

import copy
from typing import Iterator, Sequence

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import CaseMismatchError, DimensionError


class Module:
    """Container of named parameter tensors (insertion ordered)."""

    def __init__(self) -> None:
        self.params: dict[str, Tensor] = {}

    def _param(self, name: str, value: np.ndarray) -> Tensor:
        t = Tensor(value, requires_grad=True, name=name)
        self.params[name] = t
        return t

    def parameters(self) -> dict[str, Tensor]:
        return self.params

    def __iter__(self) -> Iterator[Tensor]:
        return iter(self.params.values())

    def n_parameters(self) -> int:
        return sum(p.size for p in self.params.values())

    def requires_grad_(self, flag: bool) -> "Module":
        for p in self.params.values():
            p.set_requires_grad(flag)
        return self

    def zero_grad(self) -> None:
        for p in self.params.values():
            if p.grad is not None:
                p.grad[...] = 0.0

    def state_dict(self) -> dict[str, np.ndarray]:
        return {k: p.data.copy() for k, p in self.params.items()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        missing = set(self.params) - set(state)
        if missing:
            raise KeyError(f"missing parameters: {sorted(missing)}")
        for k, p in self.params.items():
            value = np.asarray(state[k], dtype=np.float64)
            if value.shape != p.shape:
                raise DimensionError(f"{k}: expected shape {p.shape}, got {value.shape}")
            p.data[...] = value


def clone_as_target(module: Module) -> Module:
    """Independent deep copy whose parameters do not require grad."""
    target = copy.deepcopy(module)
    target.requires_grad_(False)
    return target


def _uniform(rng: np.random.Generator, fan_in: int, shape, bound: float | None = None) -> np.ndarray:
    b = 1.0 / np.sqrt(fan_in) if bound is None else bound
    return rng.uniform(-b, b, size=shape)


def _as_input(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


class Actor(Module):
    """Deterministic policy ``obs[+W] -> 128 -> 256 -> action_dim`` with tanh output.

    Hidden layers are Linear -> LayerNorm -> ReLU. ``pref_dim > 0`` makes the
    actor consume the flattened global preference next to its observation.
    """

    def __init__(
        self,
        obs_dim: int,
        action_dim: int,
        rng: np.random.Generator,
        pref_dim: int = 0,
        hidden: Sequence[int] = (128, 256),
        final_init: float = 3e-3,
    ) -> None:
        super().__init__()
        self.obs_dim, self.action_dim, self.pref_dim = obs_dim, action_dim, pref_dim
        self.hidden = tuple(hidden)
        sizes = [obs_dim + pref_dim, *self.hidden]
        for k in range(len(self.hidden)):
            self._param(f"l{k}.W", _uniform(rng, sizes[k], (sizes[k], sizes[k + 1])))
            self._param(f"l{k}.b", _uniform(rng, sizes[k], (sizes[k + 1],)))
            self._param(f"ln{k}.gain", np.ones(sizes[k + 1]))
            self._param(f"ln{k}.bias", np.zeros(sizes[k + 1]))
        self._param("out.W", _uniform(rng, sizes[-1], (sizes[-1], action_dim), final_init))
        self._param("out.b", _uniform(rng, sizes[-1], (action_dim,), final_init))

    def forward(self, obs, prefs=None) -> Tensor:
        if self.pref_dim and prefs is None:
            raise CaseMismatchError("this actor is preference-conditioned and needs the global preference")
        if not self.pref_dim and prefs is not None:
            raise CaseMismatchError("this actor acts on its observation only; got a global preference")
        x = _as_input(obs)
        if prefs is not None:
            w = _as_input(prefs)
            if w.ndim == x.ndim + 1:
                w = ad.reshape(w, w.shape[:-2] + (w.shape[-2] * w.shape[-1],))
            x = ad.concat([x, w], axis=-1)
        if x.shape[-1] != self.obs_dim + self.pref_dim:
            raise DimensionError(f"actor expects {self.obs_dim + self.pref_dim} inputs, got {x.shape[-1]}")
        p = self.params
        for k in range(len(self.hidden)):
            x = ad.linear(x, p[f"l{k}.W"], p[f"l{k}.b"])
            x = ad.relu(ad.layer_norm(x, p[f"ln{k}.gain"], p[f"ln{k}.bias"]))
        return ad.tanh(ad.linear(x, p["out.W"], p["out.b"]))

    __call__ = forward

    def act(self, obs, prefs=None) -> np.ndarray:
        """Greedy action as a plain array (no tape)."""
        return self.forward(obs, prefs).data


def actor_forward(params: Actor, obs, prefs=None) -> Tensor:
    return params.forward(obs, prefs)


class MLPCritic(Module):
    """ReLU MLP ``in_dim -> 256 -> 256 -> out_dim``."""

    def __init__(
        self,
        in_dim: int,
        out_dim: int,
        rng: np.random.Generator,
        hidden: Sequence[int] = (256, 256),
    ) -> None:
        super().__init__()
        self.in_dim, self.out_dim, self.hidden = in_dim, out_dim, tuple(hidden)
        sizes = [in_dim, *self.hidden, out_dim]
        for k in range(len(sizes) - 1):
            self._param(f"l{k}.W", _uniform(rng, sizes[k], (sizes[k], sizes[k + 1])))
            self._param(f"l{k}.b", _uniform(rng, sizes[k], (sizes[k + 1],)))
        self.n_layers = len(sizes) - 1

    def forward(self, *inputs) -> Tensor:
        parts = [_as_input(x) for x in inputs]
        x = parts[0] if len(parts) == 1 else ad.concat(parts, axis=-1)
        if x.shape[-1] != self.in_dim:
            raise DimensionError(f"critic expects {self.in_dim} inputs, got {x.shape[-1]}")
        p = self.params
        for k in range(self.n_layers):
            x = ad.linear(x, p[f"l{k}.W"], p[f"l{k}.b"])
            if k < self.n_layers - 1:
                x = ad.relu(x)
        return x

    __call__ = forward


def _flatten_agents(x: Tensor) -> Tensor:
    """(B, N, k) -> (B, N*k)."""
    return ad.reshape(x, x.shape[:-2] + (x.shape[-2] * x.shape[-1],))


def gp_critic_forward(critic: MLPCritic, state, actions, prefs) -> Tensor:
    """Vector Q of one agent from the global state, joint action (B, N, a) and global preference (B, N, M)."""
    return critic.forward(state, _flatten_agents(_as_input(actions)), _flatten_agents(_as_input(prefs)))


class AttentionCritic(Module):
    """Centralised agent-attention critic with per-agent embeddings and output heads."""

    def __init__(
        self,
        obs_dims: Sequence[int],
        action_dims: Sequence[int],
        n_objectives: int,
        rng: np.random.Generator,
        d_model: int = 128,
        n_heads: int = 8,
        ffn_hidden: int = 256,
        head_hidden: Sequence[int] = (512, 256),
        embed_relu: bool = True,
    ) -> None:
        super().__init__()
        if d_model % n_heads:
            raise DimensionError(f"d_model {d_model} is not divisible by {n_heads} heads")
        if len(obs_dims) != len(action_dims):
            raise DimensionError("obs_dims and action_dims must list the same agents")
        self.n_agents = len(obs_dims)
        self.obs_dims, self.action_dims = tuple(obs_dims), tuple(action_dims)
        self.n_objectives = n_objectives
        self.d_model, self.n_heads, self.d_head = d_model, n_heads, d_model // n_heads
        self.embed_relu = embed_relu
        self.head_hidden = tuple(head_hidden)
        d = d_model
        for i in range(self.n_agents):
            fan = obs_dims[i] + action_dims[i] + n_objectives
            self._param(f"emb{i}.W", _uniform(rng, fan, (fan, d)))
            self._param(f"emb{i}.b", _uniform(rng, fan, (d,)))
        for name in ("WQ", "WK", "WV", "WO"):
            self._param(f"att.{name}", _uniform(rng, d, (d, d)))
        self._param("ffn.W1", _uniform(rng, d, (d, ffn_hidden)))
        self._param("ffn.b1", _uniform(rng, d, (ffn_hidden,)))
        self._param("ffn.W2", _uniform(rng, ffn_hidden, (ffn_hidden, d)))
        self._param("ffn.b2", _uniform(rng, ffn_hidden, (d,)))
        self._param("ln.gain", np.ones(d))
        self._param("ln.bias", np.zeros(d))
        sizes = [d, *self.head_hidden, n_objectives]
        for i in range(self.n_agents):
            for k in range(len(sizes) - 1):
                self._param(f"out{i}.W{k}", _uniform(rng, sizes[k], (sizes[k], sizes[k + 1])))
                self._param(f"out{i}.b{k}", _uniform(rng, sizes[k], (sizes[k + 1],)))

    # parameter groups
    def agent_params(self, i: int) -> dict[str, Tensor]:
        return {k: p for k, p in self.params.items() if k.startswith((f"emb{i}.", f"out{i}."))}

    def shared_params(self) -> dict[str, Tensor]:
        return {k: p for k, p in self.params.items() if k.startswith(("att.", "ffn.", "ln."))}

    def embed(self, i: int, obs, action, pref) -> Tensor:
        x = ad.concat([_as_input(obs), _as_input(action), _as_input(pref)], axis=-1)
        expected = self.obs_dims[i] + self.action_dims[i] + self.n_objectives
        if x.shape[-1] != expected:
            raise DimensionError(f"agent {i} embedding expects {expected} inputs, got {x.shape[-1]}")
        x = ad.linear(x, self.params[f"emb{i}.W"], self.params[f"emb{i}.b"])
        return ad.relu(x) if self.embed_relu else x

    def attention(self, x) -> tuple[Tensor, np.ndarray]:
        """Shared multi-head attention over agents.

        ``x`` has shape (N, d) or (B, N, d). Returns the projected output of the
        same shape and the attention weights, shape (B, heads, N, N).
        """
        x = _as_input(x)
        squeeze = x.ndim == 2
        if squeeze:
            x = ad.reshape(x, (1,) + x.shape)
        b, n, d = x.shape
        if d != self.d_model:
            raise DimensionError(f"attention expects width {self.d_model}, got {d}")
        h, dh = self.n_heads, self.d_head
        p = self.params

        def split(t: Tensor) -> Tensor:
            return ad.transpose(ad.reshape(t, (b, n, h, dh)), (0, 2, 1, 3))

        q = split(ad.matmul(x, p["att.WQ"]))
        k = split(ad.matmul(x, p["att.WK"]))
        v = split(ad.matmul(x, p["att.WV"]))
        scores = ad.scale(ad.matmul(q, ad.transpose(k, (0, 1, 3, 2))), 1.0 / np.sqrt(dh))
        alpha = ad.softmax(scores, axis=-1)
        z = ad.reshape(ad.transpose(ad.matmul(alpha, v), (0, 2, 1, 3)), (b, n, d))
        out = ad.matmul(z, p["att.WO"])
        if squeeze:
            out = ad.reshape(out, (n, d))
        return out, alpha.data

    def ffn_norm(self, h_hat) -> Tensor:
        h_hat = _as_input(h_hat)
        p = self.params
        f = ad.relu(ad.linear(h_hat, p["ffn.W1"], p["ffn.b1"]))
        f = ad.linear(f, p["ffn.W2"], p["ffn.b2"])
        return ad.layer_norm(ad.add(h_hat, f), p["ln.gain"], p["ln.bias"])

    def q_head(self, i: int, h_i) -> Tensor:
        x = _as_input(h_i)
        n_layers = len(self.head_hidden) + 1
        for k in range(n_layers):
            x = ad.linear(x, self.params[f"out{i}.W{k}"], self.params[f"out{i}.b{k}"])
            if k < n_layers - 1:
                x = ad.relu(x)
        return x

    def trunk(self, obs: Sequence, actions: Sequence, prefs: Sequence) -> Tensor:
        """Per-agent features after attention and FFN/LayerNorm, shape (B, N, d)."""
        if not (len(obs) == len(actions) == len(prefs) == self.n_agents):
            raise DimensionError(f"attention critic expects inputs for {self.n_agents} agents")
        xs = [self.embed(i, obs[i], actions[i], prefs[i]) for i in range(self.n_agents)]
        x = ad.stack(xs, axis=-2)
        h_hat, _ = self.attention(x)
        return self.ffn_norm(h_hat)

    def forward(self, obs: Sequence, actions: Sequence, prefs: Sequence, agents=None) -> list[Tensor]:
        """Vector Q for each requested agent (all by default), each (B, m)."""
        h = self.trunk(obs, actions, prefs)
        agents = range(self.n_agents) if agents is None else agents
        return [self.q_head(i, ad.getitem(h, (Ellipsis, i, slice(None)))) for i in agents]

    __call__ = forward


def split_agents(x, n_agents: int) -> list:
    """Turn a (B, N, k) array/Tensor into a per-agent list of (B, k)."""
    if isinstance(x, Tensor):
        return [ad.getitem(x, (slice(None), i, slice(None))) for i in range(n_agents)]
    x = np.asarray(x)
    return [x[:, i, :] for i in range(n_agents)]
