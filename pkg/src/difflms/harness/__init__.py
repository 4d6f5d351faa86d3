"""Experiment configuration, Monte-Carlo runs, reports and the CLI."""

from .config import ConfigError, ExperimentConfig, PoissonSettings, load_preset, preset_names
from .poisson import PoissonResult, poisson_demo
from .runner import CompareReport, MetricsSeries, RunResult, compare, predict, run, simulate_ensemble
from .scenario import Scenario, build_scenario

__all__ = [
    "ConfigError", "ExperimentConfig", "PoissonSettings", "load_preset", "preset_names",
    "PoissonResult", "poisson_demo", "CompareReport", "MetricsSeries", "RunResult", "compare",
    "predict", "run", "simulate_ensemble", "Scenario", "build_scenario",
]
