import numpy as np
import pytest

from graphon_rd import GridFunction, StepGraphon
from graphon_rd.dynamics import apply_L, semigroup_apply
from graphon_rd.errors import DimensionMismatchError, FamilyMismatchError
from graphon_rd.particles import (
    ParticleState,
    ParticleTrajectory,
    generator_apply,
    martingale_residual_Z,
    quadratic_variation,
    quadratic_variation_check,
    simulate,
    simulate_replicas,
    stochastic_convolution_Y,
)
from graphon_rd.particles import gillespie as gk
from graphon_rd.reactions import RateFamily, ReactionTerm

from conftest import random_step_graphon

ZERO = RateFamily("zero")
LIN = RateFamily("linear", 1.0)
QUAD = RateFamily("quadratic", 1.0)


def one_birth(m0=5, ell=10.0, s=0.3, T=1.0):
    g = StepGraphon(np.zeros((1, 1)))
    return ParticleTrajectory(ParticleState([m0], ell, 0.0), np.array([s]), np.array([gk.BIRTH]),
                              np.array([0]), np.array([-1]), 1000, False, g, LIN, ZERO, T, T)


def test_Z_vanishes_without_events():
    g = random_step_graphon(np.random.default_rng(0), 4)
    tr = simulate(g, LIN, QUAD, np.zeros(4, int), 10.0, 1.0, 100, 0)
    assert np.array_equal(martingale_residual_Z(tr).values, np.zeros(4))


def test_Z_hand_replay_single_birth():
    tr = one_birth()
    # X = 0.5 on [0, 0.3), 0.6 on [0.3, 1]; Z = 1/ell - int b(X)
    z = martingale_residual_Z(tr, reaction=ReactionTerm.birth_death(LIN, ZERO), t=1.0)
    assert z.values[0] == pytest.approx(0.1 - (0.3 * 0.5 + 0.7 * 0.6), abs=1e-15)
    before = martingale_residual_Z(tr, t=0.2)
    assert before.values[0] == pytest.approx(-0.2 * 0.5, abs=1e-15)


def test_Z_rejects_wrong_reaction():
    with pytest.raises(FamilyMismatchError):
        martingale_residual_Z(one_birth(), reaction=ReactionTerm.logistic())
    with pytest.raises(DimensionMismatchError):
        martingale_residual_Z(one_birth(), g=StepGraphon(np.zeros((2, 2))))


def test_Z_replica_mean_is_zero():
    g = random_step_graphon(np.random.default_rng(1), 4)
    reps = simulate_replicas(g, LIN, QUAD, np.full(4, 50), 50.0, 1.0, 10**5, seed=3, replicas=300)
    z = np.array([martingale_residual_Z(r).values for r in reps])
    se = z.std(axis=0, ddof=1) / np.sqrt(len(reps))
    assert np.linalg.norm(z.mean(axis=0)) <= 4 * np.linalg.norm(se)


def test_Y_without_events_matches_semigroup():
    g = random_step_graphon(np.random.default_rng(2), 5)
    m0 = np.array([3, 0, 7, 1, 2])
    tr = ParticleTrajectory(ParticleState(m0, 10.0, 0.0), np.array([]), np.array([], np.int8),
                            np.array([], np.int64), np.array([], np.int64), 100, False, g, ZERO, ZERO, 1.0, 1.0)
    x0 = GridFunction(m0 / 10.0)
    y = stochastic_convolution_Y(tr, t=0.8)
    assert np.allclose(y.values, x0.values - semigroup_apply(g, 0.8, x0).values, atol=1e-12)
    flat = ParticleTrajectory(ParticleState(np.full(5, 4), 10.0, 0.0), np.array([]), np.array([], np.int8),
                              np.array([], np.int64), np.array([], np.int64), 100, False, g, ZERO, ZERO, 1.0, 1.0)
    assert np.allclose(stochastic_convolution_Y(flat).values, 0.0, atol=1e-10)


def test_Y_single_node_birth_closed_form():
    # L = 0 for one node, so Y reduces to Z
    tr = one_birth()
    assert stochastic_convolution_Y(tr).values[0] == pytest.approx(martingale_residual_Z(tr).values[0], abs=1e-15)


def test_Y_matches_brute_force_integral():
    g = random_step_graphon(np.random.default_rng(3), 4)
    tr = simulate(g, LIN, QUAD, [6, 2, 0, 4], 5.0, 0.7, 1000, 9)
    t = 0.7
    phi = ReactionTerm.birth_death(LIN, QUAD)
    # midpoint rule on a fine grid, splitting at event times
    edges = np.concatenate([[0.0], tr.times[tr.times < t], [t]])
    integral = np.zeros(4)
    for a, c in zip(edges[:-1], edges[1:]):
        s = np.linspace(a, c, 201)
        mid = 0.5 * (s[1:] + s[:-1])
        x = tr.counts_at(a) / tr.ell
        for si in mid:
            integral += semigroup_apply(g, t - si, GridFunction(phi(x))).values * (s[1] - s[0])
    x0 = GridFunction(tr.initial.m / tr.ell)
    want = tr.counts_at(t) / tr.ell - semigroup_apply(g, t, x0).values - integral
    assert np.allclose(stochastic_convolution_Y(tr, t=t).values, want, atol=1e-6)


def test_Y_shrinks_with_ell():
    g = random_step_graphon(np.random.default_rng(4), 4)

    def median_norm(ell):
        reps = simulate_replicas(g, LIN, QUAD, np.full(4, int(ell / 2)), ell, 0.5, 10**6, seed=1, replicas=200)
        return np.median([np.linalg.norm(stochastic_convolution_Y(r).values) for r in reps])

    assert median_norm(100.0) > median_norm(400.0)


def test_quadratic_variation_examples():
    tr = one_birth()
    obs, comp = quadratic_variation_check(tr, 0)
    assert obs == 1.0
    assert comp == pytest.approx(10 * (0.3 * 0.5 + 0.7 * 0.6), abs=1e-12)
    g = random_step_graphon(np.random.default_rng(5), 3)
    empty = simulate(g, LIN, QUAD, [0, 0, 0], 10.0, 1.0, 10, 0)
    assert quadratic_variation_check(empty, 2) == (0.0, 0.0)
    with pytest.raises(IndexError):
        quadratic_variation_check(empty, 3)


def test_quadratic_variation_replica_mean():
    g = random_step_graphon(np.random.default_rng(6), 4)
    reps = simulate_replicas(g, LIN, QUAD, np.full(4, 20), 20.0, 0.5, 10**5, seed=2, replicas=1000)
    diff = np.array([np.subtract(*quadratic_variation(r)) for r in reps])
    se = diff.std(axis=0, ddof=1) / np.sqrt(len(reps))
    assert np.all(np.abs(diff.mean(axis=0)) <= 4 * se)


def test_generator_examples():
    g = StepGraphon(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert np.array_equal(generator_apply(g, ZERO, ZERO, [2, 0], 1.0), [-1.0, 1.0])
    assert np.array_equal(generator_apply(g, LIN, QUAD, [0, 0], 3.0), [0.0, 0.0])
    with pytest.raises(DimensionMismatchError):
        generator_apply(g, LIN, QUAD, [1, 2, 3], 1.0)


def test_generator_matches_operator_plus_reaction():
    rng = np.random.default_rng(7)
    phi = ReactionTerm.birth_death(LIN, QUAD)
    for _ in range(20):
        n = int(rng.integers(1, 12))
        g = random_step_graphon(rng, n)
        m = rng.integers(0, 50, n)
        ell = float(rng.uniform(1, 40))
        x = GridFunction(m / ell)
        want = apply_L(g, x).values + phi(x.values)
        assert np.allclose(generator_apply(g, LIN, QUAD, m, ell) / ell, want, atol=1e-12)
