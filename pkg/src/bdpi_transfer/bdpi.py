"""Bootstrapped Dual Policy Iteration.

One softmax actor and ``n_critics`` critics. Each critic holds two
Q-networks; every training iteration it swaps them and regresses the new
``qa`` toward a clipped double-Q target. The actor is then pulled, critic by
critic, toward each critic's greedy policy on that critic's batch.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Optional

import numpy as np

from . import approximator
from .approximator import Network, TrainSpec
from .errors import ConfigurationError, ContractViolation
from .mdp import Batch, Experience, ReplayBuffer
from .transfer import Advisor, act, transfer_actor_target


@dataclass
class AgentConfig:
    gamma: float = 0.9
    alpha: float = 0.2
    lam: float = 0.05
    n_critics: int = 16
    n_train_iters: int = 1
    batch_size: int = 256
    buffer_capacity: int = 50000
    critic_epochs: int = 20
    actor_epochs: int = 20
    actor_lr: float = 1e-4
    critic_lr: float = 0.05
    tl: float = 0.0
    acting_transfer: bool = False
    hidden: int = 100
    critic_hidden: int = 100  # 0 gives a single linear layer
    critic_bias: bool = True

    def __post_init__(self):
        checks = [
            (0.0 <= self.gamma < 1.0, "gamma must lie in [0, 1)"),
            (0.0 < self.alpha <= 1.0, "alpha must lie in (0, 1]"),
            (0.0 < self.lam <= 1.0, "lam must lie in (0, 1]"),
            (self.n_critics >= 1, "n_critics must be >= 1"),
            (self.n_train_iters >= 1, "n_train_iters must be >= 1"),
            (self.batch_size >= 1, "batch_size must be >= 1"),
            (self.buffer_capacity >= 1, "buffer_capacity must be >= 1"),
            (self.critic_epochs >= 1 and self.actor_epochs >= 1, "epoch counts must be >= 1"),
            (self.actor_lr > 0 and self.critic_lr > 0, "learning rates must be positive"),
            (0.0 <= self.tl <= 1.0, "tl must lie in [0, 1]"),
            (self.hidden >= 1 and self.critic_hidden >= 0, "bad hidden width"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigurationError(message)

    @classmethod
    def field_types(cls) -> dict[str, type]:
        return {f.name: type(f.default) for f in fields(cls)}


class CriticPair:
    """Two Q-networks whose roles are exchanged by flipping a flag."""

    def __init__(self, net_a: Network, net_b: Network):
        if net_a.shapes != net_b.shapes:
            raise ContractViolation("Q^A and Q^B must have identical shapes")
        self.nets = (net_a, net_b)
        self.swapped = False

    @property
    def qa(self) -> Network:
        return self.nets[1] if self.swapped else self.nets[0]

    @property
    def qb(self) -> Network:
        return self.nets[0] if self.swapped else self.nets[1]

    def swap(self) -> None:
        self.swapped = not self.swapped


def greedy_distribution(q) -> np.ndarray:
    """All probability mass split evenly over the maximizing entries."""
    q = np.asarray(q, dtype=np.float64)
    if q.size == 0 or q.shape[-1] == 0:
        raise ContractViolation("q must be non-empty")
    if not np.isfinite(q).all():
        raise ContractViolation("q has non-finite entries")
    best = (q == q.max(axis=-1, keepdims=True)).astype(np.float64)
    return best / best.sum(axis=-1, keepdims=True)


def actor_target(pi, greedy, lam: float) -> np.ndarray:
    return (1.0 - lam) * np.asarray(pi, dtype=np.float64) + lam * np.asarray(greedy, dtype=np.float64)


def critic_targets(critic: CriticPair, batch: Batch, gamma: float, alpha: float) -> np.ndarray:
    """Target rows for ``critic.qa`` on every state of ``batch``.

    Only the taken action's entry moves, by ``alpha`` toward
    ``r + gamma * min(qa, qb)(s', argmax qa(s'))``; the bootstrap term is
    dropped on terminal transitions and ties in argmax go to the lowest index.
    """
    rows = np.arange(len(batch))
    q_next_a = critic.qa(batch.next_states)
    q_next_b = critic.qb(batch.next_states)
    best = np.argmax(q_next_a, axis=1)
    v = np.minimum(q_next_a[rows, best], q_next_b[rows, best])
    v = np.where(batch.terminals, 0.0, v)
    target = critic.qa(batch.states)
    taken = target[rows, batch.actions]
    target[rows, batch.actions] = taken + alpha * (batch.rewards + gamma * v - taken)
    return target


def critic_target(critic: CriticPair, e: Experience, gamma: float, alpha: float) -> np.ndarray:
    return critic_targets(critic, Batch.from_experiences([e]), gamma, alpha)[0]


def train_critic(critic: CriticPair, batch: Batch, config: AgentConfig) -> float:
    """Swap Q^A/Q^B, then fit the new Q^A to its targets. Returns the MSE."""
    if len(batch) == 0:
        raise ContractViolation("empty batch")
    critic.swap()
    targets = critic_targets(critic, batch, config.gamma, config.alpha)
    spec = TrainSpec(config.critic_lr, config.critic_epochs, "mse")
    return approximator.train(critic.qa, batch.states, targets, spec)


class Agent:
    def __init__(
        self,
        config: AgentConfig,
        observation_width: int,
        n_actions: int,
        seed=None,
        advisor: Optional[Advisor] = None,
    ):
        self.config = config
        self.n_actions = n_actions
        self.advisor = advisor
        if (config.acting_transfer or config.tl > 0) and advisor is None:
            raise ConfigurationError("transfer is enabled but no advisor was given")
        init_seq, buffer_seq, act_seq = np.random.SeedSequence(seed).spawn(3)
        init_rng = np.random.default_rng(init_seq)
        self.rng = np.random.default_rng(act_seq)
        self.buffer = ReplayBuffer(config.buffer_capacity, np.random.default_rng(buffer_seq), n_actions)
        self.actor = Network.build((observation_width, config.hidden, n_actions), init_rng,
                                   output_activation="softmax")
        widths = (observation_width, config.critic_hidden, n_actions) if config.critic_hidden \
            else (observation_width, n_actions)
        self.critics = [
            CriticPair(*(Network.build(widths, init_rng, bias=config.critic_bias) for _ in range(2)))
            for _ in range(config.n_critics)
        ]

    def act(self, primary_obs, advisor_obs=None) -> int:
        return act(self, primary_obs, advisor_obs)

    def policy(self, primary_obs) -> np.ndarray:
        return self.actor(primary_obs)

    def save(self, directory) -> None:
        """Write the actor, every critic network and a JSON manifest."""
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        approximator.save(self.actor, d / "actor.net")
        for i, critic in enumerate(self.critics):
            approximator.save(critic.nets[0], d / f"critic{i}_0.net")
            approximator.save(critic.nets[1], d / f"critic{i}_1.net")
        manifest = {
            "format": approximator.MAGIC,
            "config": asdict(self.config),
            "observation_width": self.actor.input_width,
            "n_actions": self.n_actions,
            "swapped": [c.swapped for c in self.critics],
        }
        (d / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, directory, seed=None, advisor: Optional[Advisor] = None) -> "Agent":
        d = Path(directory)
        manifest = json.loads((d / "manifest.json").read_text())
        agent = cls(AgentConfig(**manifest["config"]), manifest["observation_width"],
                    manifest["n_actions"], seed=seed, advisor=advisor)
        agent.actor = approximator.load(d / "actor.net")
        for i, swapped in enumerate(manifest["swapped"]):
            pair = CriticPair(approximator.load(d / f"critic{i}_0.net"),
                              approximator.load(d / f"critic{i}_1.net"))
            pair.swapped = swapped
            agent.critics[i] = pair
        return agent


def _entropy(p: np.ndarray) -> float:
    logs = np.log(np.where(p > 0, p, 1.0))
    return float(-np.sum(p * logs) / p.shape[0])


def train_epoch(agent: Agent) -> dict:
    """One BDPI training epoch: every critic, then the actor once per critic."""
    cfg = agent.config
    if len(agent.buffer) == 0:
        raise ContractViolation("cannot train on an empty buffer")
    batches = [agent.buffer.sample(cfg.batch_size) for _ in agent.critics]
    critic_losses = []
    for critic, batch in zip(agent.critics, batches):
        for _ in range(cfg.n_train_iters):
            critic_losses.append(train_critic(critic, batch, cfg))

    actor_spec = TrainSpec(cfg.actor_lr, cfg.actor_epochs, "cross_entropy")
    divergences = []
    for critic, batch in zip(agent.critics, batches):
        pi = agent.actor(batch.states)
        greedy = greedy_distribution(critic.qa(batch.states))
        if cfg.tl > 0:
            if agent.advisor is None:
                raise ConfigurationError("tl > 0 needs an advisor")
            target = transfer_actor_target(pi, agent.advisor(batch.advisor_states), greedy, cfg.tl)
        else:
            target = actor_target(pi, greedy, cfg.lam)
        loss = approximator.train(agent.actor, batch.states, target, actor_spec)
        divergences.append(loss - _entropy(target))
    return {
        "critic_loss": float(np.mean(critic_losses)),
        "actor_divergence": float(np.mean(divergences)),
        "critic_updates": len(critic_losses),
        "actor_passes": len(divergences),
    }
