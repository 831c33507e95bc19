"""Experience tuples, the replay buffer, and the episode loop."""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import Callable, Iterator, Optional, Protocol

import numpy as np

from .errors import ContractViolation


@dataclass(frozen=True)
class Experience:
    state: np.ndarray
    action: int
    reward: float
    next_state: np.ndarray
    terminal: bool = False
    advisor_state: Optional[np.ndarray] = None
    advisor_next_state: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.action < 0:
            raise ContractViolation(f"negative action index {self.action}")
        if not math.isfinite(self.reward):
            raise ContractViolation(f"reward must be finite, got {self.reward}")


@dataclass
class Batch:
    """Struct-of-arrays view of sampled experiences."""

    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_states: np.ndarray
    terminals: np.ndarray
    advisor_states: np.ndarray
    advisor_next_states: np.ndarray

    def __len__(self) -> int:
        return len(self.actions)

    def __getitem__(self, i: int) -> Experience:
        return Experience(
            self.states[i], int(self.actions[i]), float(self.rewards[i]),
            self.next_states[i], bool(self.terminals[i]),
            self.advisor_states[i], self.advisor_next_states[i],
        )

    def __iter__(self) -> Iterator[Experience]:
        return (self[i] for i in range(len(self)))

    @classmethod
    def from_experiences(cls, experiences) -> "Batch":
        experiences = list(experiences)
        if not experiences:
            raise ContractViolation("cannot batch zero experiences")

        def adv(e, field):
            v = getattr(e, field)
            return e.state if v is None else v

        return cls(
            np.array([e.state for e in experiences], dtype=np.float64),
            np.array([e.action for e in experiences], dtype=np.int64),
            np.array([e.reward for e in experiences], dtype=np.float64),
            np.array([e.next_state for e in experiences], dtype=np.float64),
            np.array([e.terminal for e in experiences], dtype=bool),
            np.array([adv(e, "advisor_state") for e in experiences], dtype=np.float64),
            np.array([adv(e, "advisor_next_state") for e in experiences], dtype=np.float64),
        )


class ReplayBuffer:
    """Bounded FIFO of experiences with uniform, with-replacement sampling.

    Storage is a set of preallocated ring arrays, created on the first push
    from the widths of that experience. Push and sample each hold an internal
    lock, so one writer and several readers may share a buffer.
    """

    def __init__(self, capacity: int, rng: np.random.Generator | int | None = None,
                 n_actions: Optional[int] = None):
        if capacity < 1:
            raise ContractViolation(f"capacity must be positive, got {capacity}")
        self.capacity = capacity
        self.n_actions = n_actions
        self.rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        self._lock = threading.Lock()
        self._arrays: Optional[dict[str, np.ndarray]] = None
        self._next = 0  # slot the next push writes to
        self._size = 0

    def __len__(self) -> int:
        return self._size

    def _allocate(self, e: Experience) -> None:
        n = self.capacity
        s, a = np.asarray(e.state), np.asarray(e.advisor_state if e.advisor_state is not None else e.state)
        self._arrays = {
            "states": np.zeros((n, s.size)),
            "actions": np.zeros(n, dtype=np.int64),
            "rewards": np.zeros(n),
            "next_states": np.zeros((n, s.size)),
            "terminals": np.zeros(n, dtype=bool),
            "advisor_states": np.zeros((n, a.size)),
            "advisor_next_states": np.zeros((n, a.size)),
        }

    def push(self, e: Experience) -> None:
        if self.n_actions is not None and e.action >= self.n_actions:
            raise ContractViolation(f"action {e.action} out of range for {self.n_actions} actions")
        adv = e.state if e.advisor_state is None else e.advisor_state
        adv_next = e.next_state if e.advisor_next_state is None else e.advisor_next_state
        with self._lock:
            if self._arrays is None:
                self._allocate(e)
            arr = self._arrays
            if np.size(e.state) != arr["states"].shape[1] or np.size(e.next_state) != arr["states"].shape[1]:
                raise ContractViolation("state width differs from earlier experiences")
            if np.size(adv) != arr["advisor_states"].shape[1] or np.size(adv_next) != arr["advisor_states"].shape[1]:
                raise ContractViolation("advisor state width differs from earlier experiences")
            i = self._next
            arr["states"][i] = e.state
            arr["actions"][i] = e.action
            arr["rewards"][i] = e.reward
            arr["next_states"][i] = e.next_state
            arr["terminals"][i] = e.terminal
            arr["advisor_states"][i] = adv
            arr["advisor_next_states"][i] = adv_next
            self._next = (i + 1) % self.capacity
            self._size = min(self._size + 1, self.capacity)

    def _oldest_first(self) -> np.ndarray:
        start = (self._next - self._size) % self.capacity
        return (start + np.arange(self._size)) % self.capacity

    def _gather(self, idx: np.ndarray) -> Batch:
        arr = self._arrays
        return Batch(**{k: v[idx] for k, v in arr.items()})

    def sample(self, n: int) -> Batch:
        """Draw ``n`` experiences uniformly with replacement."""
        with self._lock:
            if self._size == 0:
                raise ContractViolation("cannot sample from an empty buffer")
            slots = self._oldest_first()[self.rng.integers(0, self._size, size=n)]
            return self._gather(slots)

    def contents(self) -> Batch:
        """Everything currently stored, oldest first."""
        with self._lock:
            if self._size == 0:
                raise ContractViolation("buffer is empty")
            return self._gather(self._oldest_first())

    def __iter__(self) -> Iterator[Experience]:
        if self._size == 0:
            return iter(())
        return iter(self.contents())


class Environment(Protocol):
    """Minimal environment contract used by :func:`run_episode`.

    Observations are ``(primary, advisor)`` pairs of vectors. ``step`` before
    ``reset`` and ``step`` after a done step are errors.
    """

    n_actions: int
    primary_width: int
    advisor_width: int

    def reset(self, seed=None) -> tuple[np.ndarray, np.ndarray]: ...

    def step(self, action: int) -> tuple[tuple[np.ndarray, np.ndarray], float, bool]: ...


def run_episode(
    env: Environment,
    act: Callable[[np.ndarray, np.ndarray], int],
    max_steps: int,
    buffer: Optional[ReplayBuffer] = None,
    seed=None,
    on_step: Optional[Callable[[int], None]] = None,
) -> tuple[float, int]:
    """Reset ``env`` and run one episode. Returns (undiscounted return, steps).

    ``act`` receives the primary and advisor observations. Every transition
    goes into ``buffer`` when given, and ``on_step`` is called after each push
    with the 1-based step index (the harness trains the agent there).
    An environment whose ``done`` only signals a time limit should set
    ``done_is_terminal = False`` so stored transitions keep bootstrapping.
    """
    if max_steps <= 0:
        return 0.0, 0
    obs, adv = env.reset(seed)
    done_is_terminal = getattr(env, "done_is_terminal", True)
    total, steps, done = 0.0, 0, False
    while steps < max_steps and not done:
        action = int(act(obs, adv))
        (next_obs, next_adv), reward, done = env.step(action)
        steps += 1
        total += reward
        if buffer is not None:
            buffer.push(Experience(obs, action, float(reward), next_obs,
                                   bool(done and done_is_terminal), adv, next_adv))
        if on_step is not None:
            on_step(steps)
        obs, adv = next_obs, next_adv
    return total, steps
