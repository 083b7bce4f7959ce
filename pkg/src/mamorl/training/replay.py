"""Fixed-capacity FIFO replay buffer."""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from ..errors import BufferNotReady, DimensionError


@dataclass
class Transition:
    """One joint step. Arrays are per agent along the leading axis where applicable.

    state, next_state: (S,); obs, next_obs: (N, obs_dim); actions: (N, a);
    rewards: (N, m); prefs, next_prefs: (N, M).
    """

    state: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_state: np.ndarray
    prefs: np.ndarray
    obs: np.ndarray
    next_obs: np.ndarray
    next_prefs: np.ndarray


@dataclass
class Batch(Transition):
    """Same fields as :class:`Transition` stacked along a new leading batch axis."""

    @property
    def size(self) -> int:
        return self.state.shape[0]


_FIELDS = [f.name for f in fields(Transition)]


class ReplayBuffer:
    """Ring buffer storing each transition field in a preallocated array."""

    def __init__(self, capacity: int) -> None:
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = int(capacity)
        self.cursor = 0
        self.count = 0
        self._store: dict[str, np.ndarray] | None = None

    def __len__(self) -> int:
        return self.count

    def _allocate(self, t: Transition) -> None:
        self._store = {
            name: np.zeros((self.capacity,) + np.shape(getattr(t, name))) for name in _FIELDS
        }

    def push(self, t: Transition) -> None:
        if self._store is None:
            self._allocate(t)
        for name in _FIELDS:
            value = np.asarray(getattr(t, name), dtype=np.float64)
            slot = self._store[name]
            if value.shape != slot.shape[1:]:
                raise DimensionError(f"{name}: expected shape {slot.shape[1:]}, got {value.shape}")
            slot[self.cursor] = value
        self.cursor = (self.cursor + 1) % self.capacity
        self.count = min(self.count + 1, self.capacity)

    def ready(self, n: int) -> bool:
        return self.count >= n

    def sample_indices(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if not self.ready(n) or n < 1:
            raise BufferNotReady(f"buffer holds {self.count} transitions, {n} requested")
        return rng.integers(0, self.count, size=n)

    def gather(self, idx: np.ndarray) -> Batch:
        return Batch(**{name: self._store[name][idx] for name in _FIELDS})

    def sample(self, rng: np.random.Generator, n: int) -> Batch:
        """Uniform draw with replacement over stored entries."""
        return self.gather(self.sample_indices(rng, n))

    def __getitem__(self, k: int) -> Transition:
        """The k-th oldest stored transition."""
        if not 0 <= k < self.count:
            raise IndexError(k)
        start = self.cursor if self.count == self.capacity else 0
        j = (start + k) % self.capacity
        return Transition(**{name: self._store[name][j].copy() for name in _FIELDS})
