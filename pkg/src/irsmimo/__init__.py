"""Simulation and optimisation toolkit for IRS-assisted MIMO downlinks.

Modules
-------
channel        array geometry, steering vectors, path loss, fading processes
reflection     reflection patterns, array gain, quantisation, effective channels
slot_opt       per-slot weighted sum-rate maximisation by alternating optimisation
ucmo           gradient ascent on the product of unit circles
two_timescale  frame-level IRS design (rsPSO) with slot-level SVD-ZF beamforming
harness        experiment configuration, runners and the command-line interface
"""

from .errors import (InputDomainError, ConfigError, ConvergenceError,
                     DegenerateStepError, RankDeficiencyError)

__version__ = "0.1.0"

__all__ = ["InputDomainError", "ConfigError", "ConvergenceError",
           "DegenerateStepError", "RankDeficiencyError", "__version__"]
