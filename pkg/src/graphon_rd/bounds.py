"""Graph-to-graphon error bounds, evaluated on concrete runs.

The graphon solution ``u`` is represented by the solution on a fine quotient
partition with ``N`` cells (``N`` a multiple of the graph size ``n``). Both
sides of the bound are tracked at every output time:

finite ``p`` (cut-norm form)::

    ||u_n(t) - u(t)||_p <= e^{Kt} ||u_n(0) - u(0)||_p + 4 M g_K(t) ||W_n - W||_cut^{1/p}

``p = inf``::

    ||u_n(t) - u(t)||_inf <= e^{Kt} ||u_n(0) - u(0)||_inf + 2 M g_K(t) ||W_n - W||_inf

with ``M = ||u(0)||_inf``, ``g_K(t) = (e^{Kt} - 1)/K`` and ``g_0(t) = t``. The
cut norm used is the bilinear one, computed exactly when ``N`` is small enough
for enumeration and otherwise bounded from below by the alternating heuristic
(then the row is marked advisory).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .cutnorm import DEFAULT_LIMITS, cut_norm_exact, cut_norm_heuristic
from .dynamics import RdSolution, integrate_rd
from .errors import CutNormUnavailableError, DimensionMismatchError, NotLipschitzError
from .gridfn import INF, GridFunction, _check_exponent, coarsen, lp_norm_values
from .kernel import AnalyticGraphon, StepGraphon, lp_matrix_norm, quotient_step
from .reactions import ReactionTerm

BOUND_SLACK = 1e-6


@dataclass(frozen=True, eq=False)
class BoundReport:
    bound: str
    p: float
    n: int
    N: int
    times: np.ndarray
    lhs_t: np.ndarray
    rhs_t: np.ndarray
    K: float
    M: float
    cut_norm_value: float | None
    cut_norm_mode: str | None
    kernel_distance: float
    slack: float
    # right-hand side with the cut norm replaced by its upper bound ||W_n - W||_1
    rhs_upper_t: np.ndarray | None = None

    @property
    def lhs(self) -> float:
        return float(self.lhs_t.max())

    @property
    def rhs(self) -> float:
        return float(self.rhs_t[-1])

    @property
    def margin(self) -> float:
        """Smallest ``rhs - lhs`` over output times after 0 (both sides agree at 0)."""
        gap = (self.rhs_t - self.lhs_t)[1:]
        return float(gap.min()) if gap.size else 0.0

    @property
    def passed(self) -> bool:
        return bool(np.all(self.lhs_t <= self.rhs_t + self.slack))

    @property
    def rhs_upper(self) -> float | None:
        return None if self.rhs_upper_t is None else float(self.rhs_upper_t[-1])

    @property
    def advisory(self) -> bool:
        return self.cut_norm_mode == "heuristic"

    def to_dict(self) -> dict:
        return {
            "bound": self.bound,
            "p": "inf" if self.p == INF else self.p,
            "n": self.n,
            "N": self.N,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "margin": self.margin,
            "cut_norm_value": self.cut_norm_value,
            "cut_norm_mode": self.cut_norm_mode,
            "rhs_upper": self.rhs_upper,
            "kernel_distance": self.kernel_distance,
            "K": self.K,
            "M": self.M,
            "passed": self.passed,
            "advisory": self.advisory,
        }

    def to_json(self) -> str:
        d = self.to_dict()
        d["times"] = self.times.tolist()
        d["lhs_t"] = self.lhs_t.tolist()
        d["rhs_t"] = self.rhs_t.tolist()
        return json.dumps(d)


def _lipschitz_constant(reaction: ReactionTerm, p: float, u0_fine: GridFunction, un0: GridFunction):
    if reaction.is_zero:
        return 0.0
    interval = reaction.invariant_interval
    if interval is not None:
        m1, m2 = interval
        inside = all(np.all((v.values >= m1) & (v.values <= m2)) for v in (u0_fine, un0))
        if inside:
            return reaction.lipschitz_on(m1, m2)
    k = reaction.uniform_lipschitz
    if k is not None:
        return k
    raise NotLipschitzError(
        f"{reaction.family} has no global Lipschitz constant and the initial data "
        "are not inside its invariant interval")


def _growth(K, t):
    return t if K == 0 else np.expm1(K * t) / K


def fine_reference(w, reaction, u0_fine: GridFunction, T: float, dt: float, times) -> RdSolution:
    """Solve on the quotient of ``w`` at the resolution of ``u0_fine``."""
    big_n = u0_fine.n
    wn = quotient_step(w, big_n) if isinstance(w, AnalyticGraphon) else StepGraphon(w.refine(big_n))
    return integrate_rd(wn, reaction, u0_fine, T, dt, times)


def rd_convergence_bound(w, wn: StepGraphon, reaction: ReactionTerm, u0_fine: GridFunction,
                         T: float, p=2, *, dt: float = 0.01, n_outputs: int = 21,
                         reference: RdSolution | None = None, cut_mode: str = "auto",
                         exact_limit: int | None = None, restarts: int = 64, seed=0,
                         strict: bool = False, slack: float = BOUND_SLACK) -> BoundReport:
    """Both sides of the graph-vs-graphon error bound for one ``(W, W_n)`` pair.

    ``w`` is the limit kernel (analytic, or a step graphon whose size divides
    ``N = u0_fine.n``); ``wn`` is the graph. ``u_n(0)`` is the cell average of
    ``u0_fine`` on the coarse partition. ``cut_mode`` is ``"auto"``,
    ``"exact"`` or ``"heuristic"``; with ``strict=True`` a cut norm that can
    only be estimated raises :class:`CutNormUnavailableError`.
    """
    p = _check_exponent(p)
    big_n, n = u0_fine.n, wn.n
    if big_n % n:
        raise DimensionMismatchError(f"reference size {big_n} is not a multiple of n={n}")
    times = np.linspace(0.0, T, n_outputs)
    if reference is None:
        reference = fine_reference(w, reaction, u0_fine, T, dt, times)
    elif reference.n != big_n or not np.allclose(reference.times, times):
        raise DimensionMismatchError("reference solution does not match the requested grid")
    un0 = coarsen(u0_fine, n)
    coarse = integrate_rd(wn, reaction, un0, T, dt, times)
    err = np.repeat(coarse.values, big_n // n, axis=1) - reference.values
    lhs_t = lp_norm_values(err, p)
    e0 = float(lhs_t[0])
    M = float(np.max(np.abs(u0_fine.values)))
    K = _lipschitz_constant(reaction, p, u0_fine, un0)
    growth = _growth(K, times)
    d = wn.refine(big_n) - reference.graphon.values

    if p == INF:
        dist = lp_matrix_norm(d, INF)
        rhs_t = np.exp(K * times) * e0 + 2.0 * M * growth * dist
        cut_value, cut_kind, rhs_upper_t = None, None, None
        bound = "diffusion_linf" if reaction.is_zero else "rd_linf"
    else:
        dist = lp_matrix_norm(d, p)
        limit = DEFAULT_LIMITS["bilinear"] if exact_limit is None else exact_limit
        use_exact = cut_mode == "exact" or (cut_mode == "auto" and big_n <= limit)
        if use_exact:
            cut_value = cut_norm_exact(d, "bilinear", limit=max(limit, big_n) if cut_mode == "exact" else limit).value
            cut_kind = "exact"
        elif strict:
            raise CutNormUnavailableError(
                f"exact cut norm infeasible at N={big_n} (limit {limit}) and strict mode is on")
        else:
            cut_value = cut_norm_heuristic(d, restarts=restarts, seed=seed).value
            cut_kind = "heuristic"
        rhs_t = np.exp(K * times) * e0 + 4.0 * M * growth * cut_value ** (1.0 / p)
        l1 = lp_matrix_norm(d, 1)
        rhs_upper_t = np.exp(K * times) * e0 + 4.0 * M * growth * l1 ** (1.0 / p)
        bound = "diffusion_cut" if reaction.is_zero else "rd_cut"

    return BoundReport(bound, p, n, big_n, times, lhs_t, rhs_t, float(K), M,
                       cut_value, cut_kind, float(dist), slack, rhs_upper_t)


def linfty_convergence_bound(w, wn: StepGraphon, reaction: ReactionTerm, u0_fine: GridFunction,
                             T: float, **kwargs) -> BoundReport:
    """The ``p = inf`` bound with ``||W_n - W||_inf`` on the right-hand side."""
    kwargs.pop("p", None)
    return rd_convergence_bound(w, wn, reaction, u0_fine, T, p=math.inf, **kwargs)
