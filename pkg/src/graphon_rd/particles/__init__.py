"""Particle random walks with birth and death on a weighted graph."""
from .diagnostics import (
    generator_apply,
    martingale_residual_Z,
    quadratic_variation,
    quadratic_variation_check,
    stochastic_convolution_Y,
)
from .process import (
    ParticleState,
    ParticleTrajectory,
    density,
    density_on_grid,
    initial_counts,
    read_events_csv,
    replica_seed,
    simulate,
    simulate_replicas,
)

__all__ = [
    "ParticleState",
    "ParticleTrajectory",
    "density",
    "density_on_grid",
    "generator_apply",
    "initial_counts",
    "martingale_residual_Z",
    "quadratic_variation",
    "quadratic_variation_check",
    "read_events_csv",
    "replica_seed",
    "simulate",
    "simulate_replicas",
    "stochastic_convolution_Y",
]
