import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from graphon_rd.errors import (
    InvalidExponentError,
    NonFiniteResultError,
    NotADivisorError,
    NotAMultipleError,
)
from graphon_rd.gridfn import (
    GridFunction,
    axpy,
    coarsen,
    lp_norm,
    map_pointwise,
    mean,
    refine,
)

finite = st.floats(-1e3, 1e3, allow_nan=False)
vectors = st.lists(finite, min_size=1, max_size=24).map(lambda v: GridFunction(np.array(v)))
exponents = st.sampled_from([1, 1.5, 2, 3, math.inf])


def test_constant_norm_is_abs_value():
    for p in (1, 2, 3.5, math.inf):
        assert lp_norm(GridFunction.constant(-2.5, 7), p) == pytest.approx(2.5, abs=1e-14)


def test_two_cell_norms():
    u = GridFunction(np.array([1.0, 0.0]))
    assert lp_norm(u, 2) == pytest.approx(0.7071067812, abs=1e-10)
    assert lp_norm(u, math.inf) == 1.0
    assert lp_norm(u, "inf") == 1.0


def test_exponent_below_one_rejected():
    with pytest.raises(InvalidExponentError):
        lp_norm(GridFunction(np.ones(3)), 0.5)


def test_refine_examples():
    assert refine(GridFunction(np.array([3.0])), 4) == GridFunction(np.full(4, 3.0))
    assert refine(GridFunction(np.array([1.0, 0.0])), 4) == GridFunction(np.array([1.0, 1.0, 0.0, 0.0]))
    with pytest.raises(NotAMultipleError):
        refine(GridFunction(np.ones(2)), 3)


def test_coarsen_examples():
    assert coarsen(GridFunction(np.array([1.0, 1.0, 0.0, 0.0])), 2) == GridFunction(np.array([1.0, 0.0]))
    assert coarsen(GridFunction.constant(0.3, 6), 3) == GridFunction.constant(0.3, 3)
    c = coarsen(GridFunction(np.array([1.0, 0.0, 0.0, 0.0])), 2)
    assert np.array_equal(c.values, [0.5, 0.0])
    assert lp_norm(c, 1) == 0.25
    with pytest.raises(NotADivisorError):
        coarsen(GridFunction(np.ones(4)), 3)


def test_pointwise_and_mean():
    u = GridFunction(np.array([0.5, -0.5]))
    assert map_pointwise(u, "identity") == u
    assert np.allclose(map_pointwise(u, "allen_cahn").values, [0.375, -0.375], atol=1e-15)
    assert mean(GridFunction(np.array([1.0, 0.0]))) == 0.5
    with pytest.raises(NonFiniteResultError):
        map_pointwise(GridFunction(np.array([1000.0])), "exp")


def test_axpy_and_arithmetic():
    x = GridFunction(np.array([1.0, 2.0]))
    y = GridFunction(np.array([0.5, -1.0]))
    assert axpy(2.0, x, y) == GridFunction(np.array([2.5, 3.0]))
    assert (x - y) + y == x
    assert -x == x * -1.0


def test_invariants_enforced():
    with pytest.raises(ValueError):
        GridFunction(np.array([]))
    with pytest.raises(ValueError):
        GridFunction(np.array([1.0, np.nan]))
    u = GridFunction(np.array([1.0, 2.0]))
    with pytest.raises(ValueError):
        u.values[0] = 5.0


def test_serialisation_round_trip():
    u = GridFunction(np.array([0.1, -2.0, 1e-17]))
    assert GridFunction.from_json(u.to_json()) == u
    assert json.loads(u.to_json())["n"] == 3
    text = u.to_csv()
    assert text.splitlines()[0] == "value"
    assert GridFunction.from_csv(text) == u


@given(vectors, st.integers(1, 5))
def test_coarsen_inverts_refine(u, m):
    assert coarsen(refine(u, u.n * m), u.n) == u


@given(vectors, st.integers(1, 4), exponents)
def test_refine_preserves_norms(u, m, p):
    assert lp_norm(refine(u, u.n * m), p) == pytest.approx(lp_norm(u, p), rel=1e-12, abs=1e-12)


@given(st.integers(1, 6), st.integers(1, 4), st.integers(0, 2**31), exponents)
def test_coarsen_contracts(n, m, seed, p):
    u = GridFunction(np.random.default_rng(seed).normal(size=n * m))
    assert lp_norm(coarsen(u, n), p) <= lp_norm(u, p) + 1e-12


@given(st.integers(1, 20), st.integers(0, 2**31), exponents, finite)
def test_norm_homogeneous_and_triangle(n, seed, p, a):
    rng = np.random.default_rng(seed)
    u, v = (GridFunction(rng.normal(size=n)) for _ in range(2))
    assert lp_norm(u * a, p) == pytest.approx(abs(a) * lp_norm(u, p), rel=1e-12, abs=1e-12)
    assert lp_norm(u + v, p) <= lp_norm(u, p) + lp_norm(v, p) + 1e-12


@given(vectors)
def test_norm_monotone_in_p(u):
    n1, n2, ninf = (lp_norm(u, p) for p in (1, 2, math.inf))
    assert n1 <= n2 * (1 + 1e-12) + 1e-300
    assert n2 <= ninf * (1 + 1e-12) + 1e-300
