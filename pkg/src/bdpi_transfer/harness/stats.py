"""Aggregate per-episode CSVs into per-setting learning curves."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import ConfigurationError
from .runner import CSV_HEADER, RunRecord, final_score

STATS_HEADER = ("setting", "episode", "mean", "std", "n_seeds")


@dataclass
class SettingStats:
    setting: str
    episodes: np.ndarray
    mean: np.ndarray
    std: np.ndarray  # population std across seeds
    n_seeds: np.ndarray

    @property
    def score(self) -> float:
        return final_score(self.mean)


def read_records(path) -> list[RunRecord]:
    """Read one run CSV, or every run CSV in a directory (sorted by name)."""
    path = Path(path)
    files = sorted(path.glob("*.csv")) if path.is_dir() else [path]
    records = []
    for f in files:
        with open(f, newline="") as handle:
            reader = csv.reader(handle)
            header = next(reader, None)
            if header is None or tuple(header) != CSV_HEADER:
                continue
            for row in reader:
                records.append(RunRecord(row[0], int(row[1]), int(row[2]), float(row[3]), int(row[4]),
                                         float(row[5])))
    return records


def summarize(records) -> dict[str, SettingStats]:
    """Mean and population std of the return per (setting, episode) across seeds."""
    grouped: dict[str, dict[int, list[float]]] = {}
    for r in records:
        grouped.setdefault(r.setting, {}).setdefault(r.episode, []).append(r.episode_return)
    out = {}
    for setting in sorted(grouped):
        by_ep = grouped[setting]
        eps = np.array(sorted(by_ep), dtype=int)
        vals = [np.asarray(by_ep[e], dtype=float) for e in eps]
        out[setting] = SettingStats(setting, eps, np.array([v.mean() for v in vals]),
                                    np.array([v.std() for v in vals]), np.array([v.size for v in vals]))
    return out


def ranking(stats: dict[str, SettingStats]) -> list[tuple[str, float]]:
    """Settings ordered by final score, best first (ties by name)."""
    return sorted(((s.setting, s.score) for s in stats.values()), key=lambda p: (-p[1], p[0]))


def write_stats(stats: dict[str, SettingStats], path) -> None:
    with open(path, "w", newline="") as handle:
        w = csv.writer(handle)
        w.writerow(STATS_HEADER)
        for s in stats.values():
            for e, m, sd, n in zip(s.episodes, s.mean, s.std, s.n_seeds):
                w.writerow([s.setting, int(e), repr(float(m)), repr(float(sd)), int(n)])


def read_stats(path) -> dict[str, SettingStats]:
    rows: dict[str, list] = {}
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        if tuple(next(reader, ())) != STATS_HEADER:
            raise ConfigurationError(f"{path} is not a stats file")
        for row in reader:
            rows.setdefault(row[0], []).append((int(row[1]), float(row[2]), float(row[3]), int(row[4])))
    out = {}
    for setting, items in rows.items():
        items.sort()
        cols = list(zip(*items))
        out[setting] = SettingStats(setting, np.array(cols[0]), np.array(cols[1]), np.array(cols[2]),
                                    np.array(cols[3]))
    return out
