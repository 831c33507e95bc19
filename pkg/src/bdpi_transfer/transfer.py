"""Policy shaping with a frozen advisor policy.

``mix`` is the normalized elementwise product used to pick actions when the
advisor steers exploration. ``transfer_actor_target`` folds the same product
into the actor's update target, weighted by the transfer parameter ``tl``.
All functions accept a single distribution or a batch of row distributions.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import approximator
from .errors import ConfigurationError, ContractViolation

GREEDY_WEIGHT = 0.05
DISJOINT_SUPPORT = 1e-12


def as_distribution(p, name: str = "distribution") -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    if p.ndim not in (1, 2) or p.shape[-1] == 0:
        raise ContractViolation(f"{name} must be a non-empty vector or a batch of rows")
    if not np.isfinite(p).all() or (p < -1e-12).any() or (p > 1 + 1e-12).any():
        raise ContractViolation(f"{name} has entries outside [0, 1]")
    if np.abs(p.sum(axis=-1) - 1.0).max() > 1e-9:
        raise ContractViolation(f"{name} does not sum to 1")
    return p


def mix(pi, source) -> np.ndarray:
    """Normalized product ``pi * source / (pi . source)``.

    When the two supports are (numerically) disjoint the product carries no
    information, and ``pi`` is returned unchanged instead of 0/0.
    """
    pi = as_distribution(pi, "pi")
    source = as_distribution(source, "source")
    if pi.shape != source.shape:
        raise ContractViolation(f"pi has shape {pi.shape} but source has {source.shape}")
    prod = pi * source
    dot = prod.sum(axis=-1, keepdims=True)
    disjoint = dot < DISJOINT_SUPPORT
    return np.where(disjoint, pi, prod / np.where(disjoint, 1.0, dot))


@dataclass(frozen=True)
class TransferCoefficients:
    a: float  # weight kept on the current policy
    b: float  # weight on the shaped mixture
    c: float  # weight on the critic's greedy policy


def coefficients(tl: float) -> TransferCoefficients:
    if not 0.0 <= tl <= 1.0:
        raise ContractViolation(f"tl must lie in [0, 1], got {tl}")
    c = GREEDY_WEIGHT
    b = (1.0 - c) * tl
    return TransferCoefficients(1.0 - b - c, b, c)


def transfer_actor_target(pi, source, greedy, tl: float) -> np.ndarray:
    pi = as_distribution(pi, "pi")
    greedy = as_distribution(greedy, "greedy")
    co = coefficients(tl)
    if co.b == 0.0:
        return co.a * pi + co.c * greedy
    return co.a * pi + co.b * mix(pi, source) + co.c * greedy


class Advisor:
    """A frozen source policy evaluated on the advisor-side observation."""

    def __init__(self, network: approximator.Network):
        if network.layers[-1].activation != "softmax":
            raise ConfigurationError("an advisor network needs a softmax head")
        self.network = network.copy()
        for p in self.network.parameters():
            p.setflags(write=False)

    @property
    def observation_width(self) -> int:
        return self.network.input_width

    @classmethod
    def load(cls, path) -> "Advisor":
        if not Path(path).is_file():
            raise ConfigurationError(f"advisor checkpoint {path} does not exist")
        return cls(approximator.load(path))

    def __call__(self, obs) -> np.ndarray:
        return self.network(obs)


def sample_index(dist: np.ndarray, rng: np.random.Generator) -> int:
    cdf = np.cumsum(dist)
    i = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    return min(i, len(dist) - 1)


def acting_distribution(agent, primary_obs, advisor_obs) -> np.ndarray:
    pi = agent.actor(primary_obs)
    if not agent.config.acting_transfer:
        return pi
    if agent.advisor is None:
        raise ConfigurationError("acting_transfer is set but the agent has no advisor")
    return mix(pi, agent.advisor(advisor_obs))


def act(agent, primary_obs, advisor_obs) -> int:
    """Sample an action from the actor, shaped by the advisor when enabled."""
    return sample_index(acting_distribution(agent, primary_obs, advisor_obs), agent.rng)
