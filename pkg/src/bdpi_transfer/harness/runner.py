"""Run one experimental setting over several seeds and log per-episode returns."""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .. import approximator
from ..bdpi import Agent, train_epoch
from ..errors import ConfigurationError
from ..mdp import run_episode
from ..navsim import N_ACTIONS, NavTask, scripted_expert
from ..transfer import Advisor
from .config import ExperimentConfig

CSV_HEADER = ("setting", "seed", "episode", "return", "env_steps", "seconds")


@dataclass(frozen=True)
class RunRecord:
    setting: str
    seed: int
    episode: int
    episode_return: float
    env_steps: int
    seconds: float

    def row(self) -> list[str]:
        return [self.setting, str(self.seed), str(self.episode), repr(float(self.episode_return)),
                str(self.env_steps), f"{self.seconds:.3f}"]


def episode_seed(seed: int, episode: int) -> list[int]:
    """Spawn seed shared by every setting, so settings face the same start poses."""
    return [seed, episode]


def final_score(returns, fraction: float = 0.1) -> float:
    returns = np.asarray(returns, dtype=float)
    if returns.size == 0:
        return float("nan")
    k = max(1, int(np.ceil(fraction * returns.size)))
    return float(returns[-k:].mean())


class _CsvSink:
    def __init__(self, path: Optional[Path]):
        self.handle = None
        if path is not None:
            path.parent.mkdir(parents=True, exist_ok=True)
            self.handle = open(path, "w", newline="")
            self.writer = csv.writer(self.handle)
            self.writer.writerow(CSV_HEADER)
            self.handle.flush()

    def write(self, record: RunRecord) -> None:
        if self.handle is not None:
            self.writer.writerow(record.row())
            self.handle.flush()

    def close(self) -> None:
        if self.handle is not None:
            self.handle.close()


def csv_path(cfg: ExperimentConfig) -> Optional[Path]:
    return None if cfg.out_dir is None else Path(cfg.out_dir) / f"{cfg.setting}.csv"


def run_setting(cfg: ExperimentConfig, progress: Optional[Callable[[RunRecord], None]] = None) -> list[RunRecord]:
    """Train one agent per seed; returns every episode's record in run order.

    The advisor and configuration are checked before any simulation so a bad
    invocation fails fast. With ``save_advisor`` set, the final actor of the
    seed with the best final score is checkpointed.
    """
    cfg.validate()
    agent_cfg = cfg.agent_config()
    geometry = cfg.geometry()
    advisor = Advisor.load(cfg.advisor_path) if cfg.advisor_path is not None else None
    if advisor is not None and advisor.observation_width != 8:
        raise ConfigurationError(f"advisor expects {advisor.observation_width} inputs, sensors give 8")

    sink = _CsvSink(csv_path(cfg))
    records: list[RunRecord] = []
    best = None
    try:
        for seed in cfg.seeds:
            env = NavTask(cfg.preset.observation, geometry, episode_cap=cfg.episode_cap)
            agent = Agent(agent_cfg, env.primary_width, N_ACTIONS, seed=seed, advisor=advisor)
            steps_seen = 0
            env_steps = 0
            start = time.perf_counter()

            def on_step(_k):
                nonlocal steps_seen
                steps_seen += 1
                if steps_seen % cfg.train_every == 0:
                    train_epoch(agent)

            returns = []
            for episode in range(cfg.episodes):
                total, steps = run_episode(env, agent.act, cfg.episode_cap, agent.buffer,
                                           seed=episode_seed(seed, episode), on_step=on_step)
                env_steps += steps
                if cfg.clock == "wall":
                    seconds = time.perf_counter() - start
                else:
                    seconds = env_steps * geometry.dt
                rec = RunRecord(cfg.setting, seed, episode, total, env_steps, seconds)
                records.append(rec)
                returns.append(total)
                sink.write(rec)
                if progress is not None:
                    progress(rec)
            score = final_score(returns)
            if best is None or score > best[0]:
                best = (score, agent)
    finally:
        sink.close()

    if cfg.save_advisor is not None and best is not None:
        path = Path(cfg.save_advisor)
        path.parent.mkdir(parents=True, exist_ok=True)
        approximator.save(best[1].actor, path)
    return records


def expert_returns(episode_cap: int = 200, episodes: int = 100, seeds=(1, 2, 3), geometry=None) -> list[float]:
    """Returns of the scripted controller on the same start poses the runner uses."""
    env = NavTask("sensors", geometry, episode_cap=episode_cap)

    def act(sensors, _advisor):
        w = env.sim.world
        return scripted_expert(sensors, (w.v_left, w.v_right), env.sim.geometry)

    out = []
    for seed in seeds:
        for episode in range(episodes):
            out.append(run_episode(env, act, episode_cap, seed=episode_seed(seed, episode))[0])
    return out
