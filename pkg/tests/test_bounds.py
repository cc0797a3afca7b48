import math

import numpy as np
import pytest

from graphon_rd import GridFunction, StepGraphon
from graphon_rd.bounds import linfty_convergence_bound, rd_convergence_bound
from graphon_rd.errors import CutNormUnavailableError, DimensionMismatchError, NotLipschitzError
from graphon_rd.harness.profiles import Sine
from graphon_rd.kernel import AnalyticGraphon, quotient_step
from graphon_rd.reactions import ReactionTerm

COS = AnalyticGraphon("smooth_cosine", {"c": 0.5})


def test_self_comparison_is_exact():
    u0 = Sine(0.3, 0.5).cell_averages(16)
    for p in (1, 2, math.inf):
        r = rd_convergence_bound(COS, quotient_step(COS, 16), ReactionTerm.logistic(), u0, 1.0, p)
        assert r.lhs <= 1e-6 and r.passed
        assert r.cut_norm_value in (None, 0.0)


@pytest.mark.parametrize("n", [4, 8])
def test_diffusion_cut_bound(n):
    u0 = Sine(0.3, 0.5).cell_averages(16 * n)
    r = rd_convergence_bound(COS, quotient_step(COS, n), ReactionTerm.zero(), u0, 1.0, 2)
    assert r.bound == "diffusion_cut" and r.K == 0.0
    assert np.all(r.lhs_t <= r.rhs_t + 1e-6)
    # the heuristic row is advisory; the rigorous l1 upper form must hold as well
    assert r.advisory and np.all(r.lhs_t <= r.rhs_upper_t + 1e-6)
    assert r.rhs_upper >= r.rhs


def test_exact_cut_norm_on_small_reference():
    u0 = Sine(0.3, 0.5).cell_averages(8)
    r = rd_convergence_bound(COS, quotient_step(COS, 2), ReactionTerm.zero(), u0, 1.0, 1)
    assert r.cut_norm_mode == "exact" and not r.advisory and r.passed
    # with K = 0 the rhs is the initial error plus 4 M t times the cut norm
    assert np.allclose(r.rhs_t, r.lhs_t[0] + 4 * r.M * r.times * r.cut_norm_value, rtol=1e-14, atol=0)


def test_constant_graphon_against_alternating_perturbation():
    n = 4
    sign = (-1.0) ** np.add.outer(np.arange(n), np.arange(n))
    wn = StepGraphon(0.5 + 0.1 * sign)
    w = AnalyticGraphon("constant", {"c": 0.5})
    # u0 is constant on the coarse cells, so both runs start from the same state
    u0 = GridFunction(np.repeat(Sine(0.5, 0.0).cell_averages(n).values, 16))
    r = linfty_convergence_bound(w, wn, ReactionTerm.zero(), u0, 1.0)
    assert r.bound == "diffusion_linf"
    assert r.kernel_distance == pytest.approx(0.1, abs=1e-15)
    assert r.lhs <= 2 * 1.0 * np.abs(u0.values).max() * 0.1 + 1e-6
    assert r.rhs == pytest.approx(r.rhs_t[0] + 2 * np.abs(u0.values).max() * 0.1, abs=1e-15)


def test_allen_cahn_sup_norm_bound():
    rng = np.random.default_rng(1)
    u0 = GridFunction(np.repeat(rng.uniform(-1, 1, 16), 4))
    for n in (4, 8, 16):
        r = linfty_convergence_bound(COS, quotient_step(COS, n), ReactionTerm.allen_cahn(), u0, 1.0)
        assert r.bound == "rd_linf" and r.K == 2.0
        assert np.all(r.lhs_t <= r.rhs_t + 1e-6)


def test_allen_cahn_outside_interval_is_rejected():
    u0 = GridFunction(np.full(16, 1.5))
    with pytest.raises(NotLipschitzError):
        linfty_convergence_bound(COS, quotient_step(COS, 4), ReactionTerm.allen_cahn(), u0, 1.0)


def test_strict_mode_and_shape_errors():
    u0 = Sine(0.3, 0.5).cell_averages(64)
    with pytest.raises(CutNormUnavailableError):
        rd_convergence_bound(COS, quotient_step(COS, 4), ReactionTerm.zero(), u0, 1.0, 2, strict=True)
    with pytest.raises(DimensionMismatchError):
        rd_convergence_bound(COS, quotient_step(COS, 5), ReactionTerm.zero(), u0, 1.0, 2)


def test_report_serialises():
    import json
    u0 = Sine(0.3, 0.5).cell_averages(16)
    r = rd_convergence_bound(COS, quotient_step(COS, 4), ReactionTerm.logistic(), u0, 1.0, math.inf)
    d = json.loads(r.to_json())
    assert d["p"] == "inf" and d["passed"] is True and len(d["lhs_t"]) == 21
