"""Martingale diagnostics for simulated particle paths.

The density ``X(t) = m(t) / ell`` is piecewise constant in time, so every
time integral below is an exact finite sum over inter-event intervals.
"""
from __future__ import annotations

import numpy as np

from ..dynamics import SEMIGROUP_CAP, build_L_matrix
from ..errors import DimensionMismatchError, FamilyMismatchError, SemigroupCapExceededError, TimeOutOfRangeError
from ..gridfn import GridFunction
from ..kernel import StepGraphon
from ..reactions import RateFamily, ReactionTerm
from . import gillespie as gk
from .process import ParticleTrajectory

_PROBE = np.array([0.0, 0.1, 0.5, 1.0, 1.7, 3.0, 10.0])


def _check_time(traj: ParticleTrajectory, t):
    t = traj.horizon if t is None else float(t)
    if not 0.0 <= t <= traj.horizon:
        raise TimeOutOfRangeError(f"t={t} outside [0, {traj.horizon}]")
    return t


def _check_reaction(traj: ParticleTrajectory, reaction: ReactionTerm | None):
    if reaction is None:
        return
    want = traj.reaction(_PROBE)
    if not np.allclose(reaction(_PROBE), want, rtol=1e-12, atol=1e-12):
        raise FamilyMismatchError(
            f"reaction {reaction.family} does not equal the simulated b - d")


def _check_graphon(traj: ParticleTrajectory, g: StepGraphon | None) -> StepGraphon:
    if g is None:
        return traj.graphon
    if g.n != traj.n:
        raise DimensionMismatchError(f"graphon has {g.n} cells, trajectory has {traj.n}")
    return g


def _integrals(traj: ParticleTrajectory, t: float):
    b, d = traj.birth, traj.death
    return gk.path_integrals(traj.initial.m.copy(), traj.times, traj.kinds, traj.ks, traj.dests,
                             t, traj.ell, b.code, float(b.rate), d.code, float(d.rate))


def martingale_residual_Z(traj: ParticleTrajectory, g: StepGraphon | None = None,
                          reaction: ReactionTerm | None = None, t=None) -> GridFunction:
    """``X(t) - X(0) - int_0^t L X ds - int_0^t Phi(X) ds``, integrals exact."""
    g = _check_graphon(traj, g)
    _check_reaction(traj, reaction)
    t = _check_time(traj, t)
    m_t, int_m, int_b, int_d, _ = _integrals(traj, t)
    ell = traj.ell
    drift = build_L_matrix(g) @ (int_m / ell) + (int_b - int_d) / ell
    return GridFunction((m_t - traj.initial.m) / ell - drift)


def quadratic_variation(traj: ParticleTrajectory, t=None):
    """Per-node ``(observed, compensator)`` arrays on ``[0, t]``.

    ``observed[k]`` is the number of jumps of ``m_k`` (each of size one, so
    this is the sum of squared jumps); ``compensator[k]`` is the integrated
    total rate at which ``m_k`` changes.
    """
    t = _check_time(traj, t)
    _, int_m, int_b, int_d, jumps = _integrals(traj, t)
    off = traj.graphon.values.copy()
    np.fill_diagonal(off, 0.0)
    n = traj.n
    flow = (off @ int_m + off.sum(axis=1) * int_m) / n
    return jumps.astype(np.float64), flow + int_b + int_d


def quadratic_variation_check(traj: ParticleTrajectory, k: int, t=None) -> tuple[float, float]:
    """``(observed, compensator)`` for node ``k``."""
    if not 0 <= k < traj.n:
        raise IndexError(f"node {k} out of range for n={traj.n}")
    obs, comp = quadratic_variation(traj, t)
    return float(obs[k]), float(comp[k])


def stochastic_convolution_Y(traj: ParticleTrajectory, g: StepGraphon | None = None,
                             reaction: ReactionTerm | None = None, t=None) -> GridFunction:
    """``X(t) - e^{tL} X(0) - int_0^t e^{(t-s)L} Phi(X(s)) ds``.

    ``L`` is symmetric, so with ``L = V diag(lam) V^T`` the integral over an
    interval ``[a, c]`` on which ``X`` is constant is
    ``V diag((e^{lam (t-a)} - e^{lam (t-c)}) / lam) V^T Phi(X)``, evaluated
    exactly for every interval at once.
    """
    g = _check_graphon(traj, g)
    _check_reaction(traj, reaction)
    t = _check_time(traj, t)
    if g.n > SEMIGROUP_CAP:
        raise SemigroupCapExceededError(f"n={g.n} exceeds the semigroup cap {SEMIGROUP_CAP}")
    lam, vec = np.linalg.eigh(build_L_matrix(g))
    j = int(np.searchsorted(traj.times, t, side="right"))
    states = traj.all_counts()[: j + 1] / traj.ell
    starts = np.concatenate([[0.0], traj.times[:j]])
    ends = np.concatenate([traj.times[:j], [t]])
    phi = traj.reaction(states)
    coeff = phi @ vec  # (intervals, n) in the eigenbasis
    # weight = e^{lam (t - c)} * (e^{lam (c - a)} - 1) / lam, with the lam -> 0 limit c - a
    lag = (t - ends)[:, None] * lam[None, :]
    width = (ends - starts)[:, None]
    x = width * lam[None, :]
    small = np.abs(x) < 1e-300
    safe = np.where(small, 1.0, lam[None, :])
    phi1 = np.where(small, width, np.expm1(x) / safe)
    forced = vec @ np.sum(np.exp(lag) * phi1 * coeff, axis=0)
    free = vec @ (np.exp(lam * t) * (vec.T @ states[0]))
    return GridFunction(states[-1] - free - forced)


def generator_apply(g: StepGraphon, b: RateFamily, d: RateFamily, m, ell: float) -> np.ndarray:
    """Drift of the count process: coordinate ``j`` is
    ``(1/n) sum_i W_ij (m_i - m_j) + ell (b(m_j/ell) - d(m_j/ell))``.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.shape != (g.n,):
        raise DimensionMismatchError(f"counts have shape {m.shape}, graphon has {g.n} cells")
    w = g.values
    x = m / ell
    return (w.T @ m - w.sum(axis=0) * m) / g.n + ell * (b(x) - d(x))


__all__ = [
    "martingale_residual_Z",
    "stochastic_convolution_Y",
    "quadratic_variation",
    "quadratic_variation_check",
    "generator_apply",
]
