"""Experiment configuration, study drivers and the command-line interface."""
from .config import ExperimentConfig
from .profiles import PROFILES, make_profile
from .records import ResultRecord, atomic_write
from .studies import (
    coarse_graphon,
    lln_trend_ok,
    run_convergence_study,
    run_lln_study,
    run_single_particles,
    run_single_rd,
    sup_distance,
    wilson_interval,
)

__all__ = [
    "ExperimentConfig",
    "PROFILES",
    "ResultRecord",
    "atomic_write",
    "coarse_graphon",
    "lln_trend_ok",
    "make_profile",
    "run_convergence_study",
    "run_lln_study",
    "run_single_particles",
    "run_single_rd",
    "sup_distance",
    "wilson_interval",
]
