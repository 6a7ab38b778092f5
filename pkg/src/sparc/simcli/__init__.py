"""Batch Monte-Carlo harness and command-line surface."""
from .config import ExperimentConfig, load_config, parse_config_text, parse_rate
from .posteriors import OuterCodeResult, bit_posteriors, bit_posteriors_all, outer_code_hook
from .runner import run_experiment, to_csv

__all__ = ["ExperimentConfig", "load_config", "parse_config_text", "parse_rate", "bit_posteriors",
           "bit_posteriors_all", "outer_code_hook", "OuterCodeResult", "run_experiment", "to_csv"]
