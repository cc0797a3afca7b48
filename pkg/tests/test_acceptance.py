"""End-to-end acceptance criteria.

Each test prints one ``[PASS]``/``[FAIL]`` line with its measured statistic
and runtime, then asserts the criterion at its stated tolerance.
"""
import configparser
import itertools
import math
import time

import numpy as np
import pytest

from graphon_rd import GridFunction
from graphon_rd.cutnorm import cut_norm_heuristic
from graphon_rd.dynamics import (
    apply_L,
    check_contraction,
    check_mass_conservation,
    check_max_principle,
    integrate_rd,
    mild_residual,
    semigroup_apply,
)
from graphon_rd.gridfn import coarsen, lp_norm
from graphon_rd.harness.config import ExperimentConfig
from graphon_rd.harness.studies import run_convergence_study, run_lln_study
from graphon_rd.kernel import AnalyticGraphon, StepGraphon, quotient_step
from graphon_rd.particles import (
    density_on_grid,
    initial_counts,
    martingale_residual_Z,
    quadratic_variation,
    simulate_replicas,
)
from graphon_rd.harness.profiles import Sine
from graphon_rd.reactions import RateFamily, ReactionTerm

from conftest import random_step_graphon

LIN = RateFamily("linear", 1.0)
QUAD = RateFamily("quadratic", 1.0)
_ARTIFACTS = {}


def report(capsys, number, title, ok, detail, seconds):
    with capsys.disabled():
        print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title} | {detail} | {seconds:.2f}s")


def _cfg(text):
    cp = configparser.ConfigParser()
    cp.optionxform = str
    cp.read_string(text)
    return ExperimentConfig.from_sections({s: dict(cp[s]) for s in cp.sections()})


def test_criterion_01_operator_bound(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    violations = 0
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(2, 65))
        g = random_step_graphon(rng, n, density=float(rng.uniform(0.2, 1.0)))
        u = GridFunction(rng.normal(size=n) * rng.uniform(0.1, 10))
        for p in (1, 2, math.inf):
            ratio = lp_norm(apply_L(g, u), p) / lp_norm(u, p)
            worst = max(worst, ratio)
            violations += ratio > 2.0
    dt = time.perf_counter() - t0
    ok = violations == 0 and dt < 5
    report(capsys, 1, "operator bound ||Lu||_p <= 2||u||_p", ok,
           f"violations={violations}, worst ratio={worst:.4f}", dt)
    assert ok


def test_criterion_02_contraction_and_mass(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(102)
    worst_inc = worst_drift = 0.0
    for _ in range(50):
        n = int(rng.integers(2, 65))
        g = random_step_graphon(rng, n)
        u0 = GridFunction(rng.normal(size=n))
        sol = integrate_rd(g, ReactionTerm.zero(), u0, 2.0, 0.01, np.linspace(0, 2, 21))
        for p in (1, 2, math.inf):
            worst_inc = max(worst_inc, check_contraction(sol, p).value)
        worst_drift = max(worst_drift, check_mass_conservation(sol).value)
    dt = time.perf_counter() - t0
    ok = worst_inc <= 1e-9 and worst_drift <= 1e-10 and dt < 30
    report(capsys, 2, "contraction and mass conservation", ok,
           f"max norm increase={worst_inc:.2e}, max mass drift={worst_drift:.2e}", dt)
    assert ok


def test_criterion_03_semigroup_oracle(capsys):
    t0 = time.perf_counter()
    g = StepGraphon(np.array([[0.0, 1.0], [1.0, 0.0]]))
    e0 = GridFunction([1.0, 0.0])
    closed = max(np.abs(semigroup_apply(g, t, e0).values
                        - [0.5 + 0.5 * math.exp(-t), 0.5 - 0.5 * math.exp(-t)]).max()
                 for t in np.linspace(0.25, 5.0, 10))
    rng = np.random.default_rng(103)
    comp = 0.0
    for _ in range(20):
        n = int(rng.integers(2, 33))
        g = random_step_graphon(rng, n)
        u = GridFunction(rng.normal(size=n))
        s, t = rng.uniform(0, 3, 2)
        a = semigroup_apply(g, s + t, u).values
        b = semigroup_apply(g, s, semigroup_apply(g, t, u)).values
        comp = max(comp, float(np.abs(a - b).max()))
    dt = time.perf_counter() - t0
    ok = closed <= 1e-10 and comp <= 1e-10
    report(capsys, 3, "semigroup closed form and composition", ok,
           f"closed-form error={closed:.2e}, composition error={comp:.2e}", dt)
    assert ok


def test_criterion_04_max_principle(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(104)
    worst = 0.0
    for phi, (m1, m2) in ((ReactionTerm.allen_cahn(), (-1.0, 1.0)), (ReactionTerm.logistic(1.0), (0.0, 1.0))):
        for _ in range(50):
            n = int(rng.integers(2, 33))
            g = random_step_graphon(rng, n)
            u0 = GridFunction(rng.uniform(m1, m2, n))
            sol = integrate_rd(g, phi, u0, 5.0, 0.01, np.linspace(0, 5, 51))
            worst = max(worst, check_max_principle(sol, m1, m2).value)
    dt = time.perf_counter() - t0
    ok = worst <= 1e-8 and dt < 60
    report(capsys, 4, "maximum bound principle (Allen-Cahn, logistic)", ok,
           f"max excursion={worst:.2e}", dt)
    assert ok


def test_criterion_05_mild_residual_order(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(105)
    g = random_step_graphon(rng, 8)
    u0 = GridFunction(rng.uniform(0, 1, 8))
    res = []
    for k in (10, 20):
        sol = integrate_rd(g, ReactionTerm.logistic(1.0), u0, 1.0, 0.1 / k, np.linspace(0, 1, k + 1))
        res.append(mild_residual(sol, 2))
    ratio = res[0] / res[1]
    dt = time.perf_counter() - t0
    ok = ratio >= 3.5
    report(capsys, 5, "mild-formulation residual order", ok,
           f"residuals={res[0]:.3e}->{res[1]:.3e}, ratio={ratio:.3f}", dt)
    assert ok


def _all_pairs_optimum(d):
    """Literal exhaustive maximum of phi^T D psi over all 2^n x 2^n sign pairs."""
    n = d.shape[0]
    s = np.array(list(itertools.product((-1.0, 1.0), repeat=n)))
    return float((s @ d @ s.T).max()) / n**2


def test_criterion_06_cut_norm_oracle(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(106)
    above = 0
    for i in range(100):
        n = int(rng.integers(1, 11))
        d = rng.uniform(-1, 1, (n, n))
        d = d + d.T
        h = cut_norm_heuristic(d, restarts=16, seed=i).value
        above += h > _all_pairs_optimum(d) + 1e-12
    rank1_miss = 0
    for i in range(50):
        n = int(rng.integers(1, 11))
        s, t = (np.where(rng.random(n) < 0.5, -1.0, 1.0) for _ in range(2))
        d = np.outer(s, t)
        h = cut_norm_heuristic(d, restarts=1, seed=i).value
        rank1_miss += not (h == 1.0 == _all_pairs_optimum(d))
    dt = time.perf_counter() - t0
    ok = above == 0 and rank1_miss == 0 and dt < 120
    report(capsys, 6, "heuristic cut norm vs exhaustive sign-pair oracle", ok,
           f"heuristic above oracle={above}/100, rank-1 mismatches={rank1_miss}/50", dt)
    assert ok


CONVERGENCE = """\
[experiment]
kind = {kind}
T = 1.0
dt = 0.01
p = {p}

[kernel]
family = {family}
c = 0.5

[reaction]
family = {reaction}

[initial]
profile = sine
c = {amp}
offset = {offset}

[sweep]
n = 4, 8, 16
"""

CONVERGENCE_MATRIX = [
    (family, reaction, p)
    for family in ("smooth_cosine", "constant")
    for reaction, p in (("zero", "1, 2, inf"), ("logistic", "1, 2, inf"), ("allen_cahn", "inf"))
]


def test_criterion_07_convergence_bounds(capsys):
    t0 = time.perf_counter()
    failures = []
    rows = 0
    csvs = []
    for family, reaction, p in CONVERGENCE_MATRIX:
        kind = "diffusion_convergence" if reaction == "zero" else "rd_convergence"
        amp, offset = (0.8, 0.0) if reaction == "allen_cahn" else (0.3, 0.5)
        cfg = _cfg(CONVERGENCE.format(kind=kind, p=p, family=family, reaction=reaction, amp=amp, offset=offset))
        rec = run_convergence_study(cfg)
        csvs.append(rec.to_csv())
        rows += len(rec.rows)
        for r in rec.rows:
            if not (r["lhs"] is not None and r["lhs"] <= r["rhs"] + 1e-6):
                failures.append(f"{family}/{reaction}/n={r['n']}/p={r['p']}")
        if not rec.summary["monotone_ok"]:
            failures.append(f"{family}/{reaction} lhs not monotone: {rec.summary['lhs_monotone']}")
    _ARTIFACTS["convergence"] = csvs
    dt = time.perf_counter() - t0
    ok = not failures and dt < 600
    report(capsys, 7, "convergence-bound matrix", ok,
           f"rows={rows}, failures={failures or 0}", dt)
    assert ok


def _martingale_setup():
    g = quotient_step(AnalyticGraphon("smooth_cosine", {"c": 1.0}), 8)
    m0 = initial_counts(Sine(0.3, 0.5).cell_averages(8), 100.0)
    return g, m0


def test_criterion_08_martingale_diagnostics(capsys):
    t0 = time.perf_counter()
    g, m0 = _martingale_setup()
    reps = simulate_replicas(g, LIN, QUAD, m0, 100.0, 1.0, 10**6, seed=11, replicas=500)
    z = np.array([martingale_residual_Z(r).values for r in reps])
    z_se = z.std(axis=0, ddof=1) / math.sqrt(len(reps))
    z_stat, z_tol = float(np.linalg.norm(z.mean(axis=0))), float(4 * np.linalg.norm(z_se))
    qv = np.array([np.subtract(*quadratic_variation(r)) for r in reps])
    qv_se = qv.std(axis=0, ddof=1) / math.sqrt(len(reps))
    qv_ratio = float(np.max(np.abs(qv.mean(axis=0)) / qv_se))
    dt = time.perf_counter() - t0
    ok = z_stat <= z_tol and qv_ratio <= 4 and dt < 300
    report(capsys, 8, "martingale Z and quadratic-variation compensator", ok,
           f"||mean Z||={z_stat:.4f} vs 4se={z_tol:.4f}, max |QV mean|/se={qv_ratio:.2f}", dt)
    assert ok


def test_criterion_09_mean_field(capsys):
    t0 = time.perf_counter()
    n, ell = 32, 500.0
    g = quotient_step(AnalyticGraphon("smooth_cosine", {"c": 1.0}), n)
    m0 = initial_counts(Sine(0.3, 0.5).cell_averages(n), ell)
    grid = np.linspace(0.0, 1.0, 21)
    reps = simulate_replicas(g, LIN, QUAD, m0, ell, 1.0, 10**6, seed=9, replicas=200)
    mean_density = np.mean([density_on_grid(r, grid) for r in reps], axis=0)
    phi = ReactionTerm.birth_death(LIN, QUAD)
    sol = integrate_rd(g, phi, GridFunction(m0 / ell), 1.0, 0.005, grid)
    err = np.sqrt(np.mean((mean_density - sol.values) ** 2, axis=1))
    sup = float(err.max())
    _ARTIFACTS["mean_field"] = "\n".join(",".join(repr(float(x)) for x in row) for row in mean_density)
    dt = time.perf_counter() - t0
    ok = sup <= 0.05 and not any(r.capped_flag for r in reps) and dt < 600
    report(capsys, 9, "mean-field consistency", ok, f"sup_t L2 distance={sup:.4f} (tol 0.05)", dt)
    assert ok


LLN = """\
[experiment]
kind = lln
T = 1.0
dt = 0.01
seed = 7

[kernel]
family = smooth_cosine
c = 1.0

[reaction]
family = birth_death
birth = linear:1
death = quadratic:1

[initial]
profile = sine
c = 0.3
offset = 0.5

[lln]
schedule = 8:50, 16:200, 32:800
epsilon = 0.15
replicas = 200
"""


def test_criterion_10_lln_trend(capsys):
    t0 = time.perf_counter()
    rec, reps = run_lln_study(_cfg(LLN))
    _ARTIFACTS["lln"] = (rec.to_csv(), reps.to_csv())
    s = rec.summary
    dt = time.perf_counter() - t0
    ok = s["trend_ok"] is True and not s["any_unreliable"] and dt < 1200
    ci = [f"[{lo:.3f},{hi:.3f}]" for lo, hi in zip(rec.column("ci_low"), rec.column("ci_high"))]
    report(capsys, 10, "LLN exceedance trend", ok,
           f"p_hat={rec.column('p_hat')}, Wilson={ci}", dt)
    assert ok


def test_criterion_11_determinism(capsys):
    t0 = time.perf_counter()
    if not {"convergence", "mean_field", "lln"} <= set(_ARTIFACTS):
        pytest.skip("needs the data from criteria 7, 9 and 10 in the same session")
    same = {}
    csvs = []
    for family, reaction, p in CONVERGENCE_MATRIX:
        kind = "diffusion_convergence" if reaction == "zero" else "rd_convergence"
        amp, offset = (0.8, 0.0) if reaction == "allen_cahn" else (0.3, 0.5)
        cfg = _cfg(CONVERGENCE.format(kind=kind, p=p, family=family, reaction=reaction, amp=amp, offset=offset))
        csvs.append(run_convergence_study(cfg).to_csv())
    same["convergence"] = csvs == _ARTIFACTS["convergence"]

    n, ell = 32, 500.0
    g = quotient_step(AnalyticGraphon("smooth_cosine", {"c": 1.0}), n)
    m0 = initial_counts(Sine(0.3, 0.5).cell_averages(n), ell)
    grid = np.linspace(0.0, 1.0, 21)
    reps = simulate_replicas(g, LIN, QUAD, m0, ell, 1.0, 10**6, seed=9, replicas=200)
    mean_density = np.mean([density_on_grid(r, grid) for r in reps], axis=0)
    same["mean_field"] = "\n".join(",".join(repr(float(x)) for x in row) for row in mean_density) == _ARTIFACTS["mean_field"]

    rec, per = run_lln_study(_cfg(LLN))
    same["lln"] = (rec.to_csv(), per.to_csv()) == _ARTIFACTS["lln"]
    dt = time.perf_counter() - t0
    ok = all(same.values())
    report(capsys, 11, "byte-identical reruns", ok, f"identical={same}", dt)
    assert ok
