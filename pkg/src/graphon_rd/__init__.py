"""Reaction-diffusion on graphs and graphons, and the particle systems behind them.

Subpackages: :mod:`graphon_rd.particles` (stochastic particle simulation and
martingale diagnostics) and :mod:`graphon_rd.harness` (experiment drivers
and the ``graphon-rd`` command line).
"""
from ._accel import backend
from .bounds import BoundReport, linfty_convergence_bound, rd_convergence_bound
from .cutnorm import CutNormResult, bilinear_value, cut_norm_exact, cut_norm_heuristic
from .dynamics import (
    RdSolution,
    apply_L,
    check_contraction,
    check_mass_conservation,
    check_max_principle,
    integrate_rd,
    mild_residual,
    semigroup_apply,
)
from .gridfn import GridFunction, axpy, coarsen, lp_norm, map_pointwise, mean, refine
from .kernel import (
    AnalyticGraphon,
    StepGraphon,
    degree,
    lp_kernel_distance,
    quotient_step,
    sample_w_random,
    step_from_adjacency,
)
from .reactions import RateFamily, ReactionTerm

__version__ = "0.1.0"

__all__ = [
    "AnalyticGraphon",
    "BoundReport",
    "CutNormResult",
    "GridFunction",
    "RateFamily",
    "RdSolution",
    "ReactionTerm",
    "StepGraphon",
    "apply_L",
    "axpy",
    "backend",
    "bilinear_value",
    "check_contraction",
    "check_mass_conservation",
    "check_max_principle",
    "coarsen",
    "cut_norm_exact",
    "cut_norm_heuristic",
    "degree",
    "integrate_rd",
    "linfty_convergence_bound",
    "lp_kernel_distance",
    "lp_norm",
    "map_pointwise",
    "mean",
    "mild_residual",
    "quotient_step",
    "rd_convergence_bound",
    "refine",
    "sample_w_random",
    "semigroup_apply",
    "step_from_adjacency",
]
