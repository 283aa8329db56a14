"""Experiment harness: configuration, experiments, reports and the CLI."""

from .config import DEFAULTS, EXPERIMENTS, ConfigError, load_config
from .experiments import Report, recompute_verdicts, run_experiment

__all__ = ["DEFAULTS", "EXPERIMENTS", "ConfigError", "load_config", "Report",
           "recompute_verdicts", "run_experiment"]
