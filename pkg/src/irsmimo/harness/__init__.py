"""Experiment harness: configuration, scenario builders, runners and output."""

from .config import ScenarioConfig, load_config, config_from_dict, dbm_to_watts, config_hash
from .experiments import (run_sumrate_vs_elements, run_rank_analysis, run_aasr_vs_rho,
                          run_ao_trace, EXPERIMENTS)
from .output import ExperimentResult, write_result, to_csv

__all__ = [
    "ScenarioConfig", "load_config", "config_from_dict", "dbm_to_watts", "config_hash",
    "run_sumrate_vs_elements", "run_rank_analysis", "run_aasr_vs_rho", "run_ao_trace",
    "EXPERIMENTS", "ExperimentResult", "write_result", "to_csv",
]
