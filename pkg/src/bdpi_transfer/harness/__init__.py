"""Experiment presets, runner, aggregation and plotting."""

from .config import SETTINGS, ExperimentConfig, Setting, parse_config
from .plot import emit_plot, render_svg
from .runner import CSV_HEADER, RunRecord, expert_returns, final_score, run_setting
from .stats import SettingStats, ranking, read_records, read_stats, summarize, write_stats

__all__ = [
    "SETTINGS", "ExperimentConfig", "Setting", "parse_config", "emit_plot", "render_svg", "CSV_HEADER",
    "RunRecord", "expert_returns", "final_score", "run_setting", "SettingStats", "ranking",
    "read_records", "read_stats", "summarize", "write_stats",
]
