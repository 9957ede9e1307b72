"""Experiment harness: configuration, sweeps, reports and the command line."""

from .config import ConfigError, PreconditionError, SweepConfig, load_config, parse_config
from .report import Report

__all__ = ["ConfigError", "PreconditionError", "Report", "SweepConfig", "load_config", "parse_config"]
