"""Experiment settings and the key/value config file format.

A config file holds one ``key = value`` per line; ``#`` starts a comment.
Keys are AgentConfig fields, SceneGeometry fields, or one of the run-level
keys below. Anything else is rejected.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

from ..bdpi import AgentConfig
from ..errors import ConfigurationError, ContractViolation
from ..navsim import SceneGeometry


@dataclass(frozen=True)
class Setting:
    observation: str
    actor_lr: float
    epochs: int
    acting_transfer: bool
    tl: float

    @property
    def needs_advisor(self) -> bool:
        return self.acting_transfer or self.tl > 0


SETTINGS = {
    "sensors-no-transfer": Setting("sensors", 1e-4, 20, False, 0.0),
    "camera-no-transfer": Setting("camera", 1e-6, 1, False, 0.0),
    "camera-act": Setting("camera", 1e-6, 1, True, 0.0),
    "camera-learn": Setting("camera", 1e-6, 1, False, 0.03),
    "camera-act-learn": Setting("camera", 1e-6, 1, True, 0.01),
}

RUN_KEYS = {"episodes": int, "episode_cap": int, "seeds": str, "train_every": int, "advisor": str,
            "clock": str}
AGENT_KEYS = AgentConfig.field_types()
SCENE_KEYS = {k: t for k, t in SceneGeometry.field_types().items() if k != "episode_cap"}


def _convert(key: str, raw: str, kind: type):
    try:
        if kind is bool:
            lowered = raw.lower()
            if lowered not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return lowered in ("true", "1", "yes")
        return kind(raw)
    except ValueError as exc:
        raise ConfigurationError(f"bad value for {key}: {raw!r}") from exc


def parse_seeds(text) -> tuple[int, ...]:
    if isinstance(text, (list, tuple)):
        return tuple(int(s) for s in text)
    try:
        seeds = tuple(int(s) for s in str(text).split(",") if s.strip())
    except ValueError as exc:
        raise ConfigurationError(f"bad seed list {text!r}") from exc
    return seeds


def parse_config(text: str) -> dict[str, dict]:
    """Split a config file into ``{"run": ..., "agent": ..., "scene": ...}`` overrides."""
    out: dict[str, dict] = {"run": {}, "agent": {}, "scene": {}}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {n}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        for section, table in (("run", RUN_KEYS), ("agent", AGENT_KEYS), ("scene", SCENE_KEYS)):
            if key in table:
                if key in out[section]:
                    raise ConfigurationError(f"line {n}: {key} given twice")
                out[section][key] = _convert(key, raw, table[key])
                break
        else:
            raise ConfigurationError(f"line {n}: unknown key {key!r}")
    return out


def load_config(path) -> dict[str, dict]:
    return parse_config(Path(path).read_text())


@dataclass
class ExperimentConfig:
    setting: str
    episodes: int = 100
    episode_cap: int = 500
    seeds: tuple[int, ...] = (1, 2, 3)
    agent_overrides: dict = field(default_factory=dict)
    scene_overrides: dict = field(default_factory=dict)
    advisor_path: Optional[Path] = None
    out_dir: Optional[Path] = None
    save_advisor: Optional[Path] = None
    train_every: int = 1
    clock: str = "sim"  # "sim" logs simulated seconds, keeping CSVs reproducible

    def validate(self) -> None:
        if self.setting not in SETTINGS:
            raise ConfigurationError(f"unknown setting {self.setting!r}; choose from {sorted(SETTINGS)}")
        if not self.seeds:
            raise ConfigurationError("at least one seed is required")
        if self.episodes < 0 or self.episode_cap < 0 or self.train_every < 1:
            raise ConfigurationError("episodes and episode_cap must be >= 0, train_every >= 1")
        if self.clock not in ("sim", "wall"):
            raise ConfigurationError(f"clock must be 'sim' or 'wall', got {self.clock!r}")
        if SETTINGS[self.setting].needs_advisor and self.advisor_path is None:
            raise ConfigurationError(f"setting {self.setting} needs an advisor checkpoint")
        unknown = set(self.agent_overrides) - set(AGENT_KEYS)
        unknown |= set(self.scene_overrides) - set(SCENE_KEYS)
        if unknown:
            raise ConfigurationError(f"unknown override keys: {sorted(unknown)}")
        self.agent_config()
        self.geometry()

    @property
    def preset(self) -> Setting:
        return SETTINGS[self.setting]

    def agent_config(self) -> AgentConfig:
        """Setting defaults first, then explicit overrides."""
        s = self.preset
        base = dict(actor_lr=s.actor_lr, critic_epochs=s.epochs, actor_epochs=s.epochs,
                    acting_transfer=s.acting_transfer, tl=s.tl)
        base.update(self.agent_overrides)
        return AgentConfig(**base)

    def geometry(self) -> SceneGeometry:
        try:
            return replace(SceneGeometry(), episode_cap=self.episode_cap, **self.scene_overrides)
        except ContractViolation as exc:
            raise ConfigurationError(f"bad scene: {exc}") from exc

    @classmethod
    def from_file(cls, setting: str, path=None, **kwargs) -> "ExperimentConfig":
        """Build from an optional config file; keyword arguments win over the file."""
        parsed = load_config(path) if path else {"run": {}, "agent": {}, "scene": {}}
        run = dict(parsed["run"])
        if "seeds" in run:
            run["seeds"] = parse_seeds(run["seeds"])
        if "advisor" in run:
            run["advisor_path"] = Path(run.pop("advisor"))
        run.update({k: v for k, v in kwargs.items() if v is not None})
        cfg = cls(setting, agent_overrides=parsed["agent"], scene_overrides=parsed["scene"], **run)
        cfg.validate()
        return cfg


def setting_names() -> list[str]:
    return list(SETTINGS)


def describe(cfg: ExperimentConfig) -> dict:
    agent = cfg.agent_config()
    return {"setting": cfg.setting, "observation": cfg.preset.observation,
            **{f.name: getattr(agent, f.name) for f in fields(agent)}}
