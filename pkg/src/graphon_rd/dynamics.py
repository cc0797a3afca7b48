"""Graph diffusion operator, its semigroup and reaction-diffusion time stepping.

On a step graphon with cell values ``A`` the diffusion operator acts as

    (L u)_k = (1/n) sum_j A_kj (u_j - u_k),

i.e. ``L = A/n - diag(d)`` with ``d`` the degree vector. The graph
reaction-diffusion equation ``du/dt = L u + Phi(u)`` is integrated with
fixed-step classical RK4.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .errors import (
    ContractionViolatedError,
    DimensionMismatchError,
    FamilyMismatchError,
    InsufficientSamplesError,
    MassDriftError,
    MaxPrincipleViolatedError,
    NegativeTimeError,
    NonFiniteStateError,
    SemigroupCapExceededError,
)
from .gridfn import GridFunction, lp_norm_values
from .kernel import StepGraphon
from .reactions import ReactionTerm

SEMIGROUP_CAP = 2048
CONTRACTION_SLACK = 1e-9
MASS_TOL = 1e-10
MAX_PRINCIPLE_TOL = 1e-8


def _check_dims(g: StepGraphon, u: GridFunction):
    if u.n != g.n:
        raise DimensionMismatchError(f"function has {u.n} cells, graphon has {g.n}")


def apply_L(g: StepGraphon, u: GridFunction) -> GridFunction:
    _check_dims(g, u)
    a = g.values
    return GridFunction(a @ u.values / g.n - g.degrees * u.values)


def build_L_matrix(g: StepGraphon) -> np.ndarray:
    m = g.values / g.n
    m[np.diag_indices(g.n)] -= g.degrees
    return m


def _propagator(m: np.ndarray, t: float) -> np.ndarray:
    if m.shape[0] > SEMIGROUP_CAP:
        raise SemigroupCapExceededError(
            f"dense matrix exponential limited to n <= {SEMIGROUP_CAP}, got {m.shape[0]}")
    return expm(t * m)


def semigroup_apply(g: StepGraphon, t: float, u0: GridFunction) -> GridFunction:
    """``exp(t L) u0`` via scaling-and-squaring Pade (``scipy.linalg.expm``)."""
    if t < 0:
        raise NegativeTimeError(f"t={t} < 0")
    _check_dims(g, u0)
    if t == 0:
        return u0
    return GridFunction(_propagator(build_L_matrix(g), t) @ u0.values)


@dataclass(frozen=True, eq=False)
class RdSolution:
    times: np.ndarray
    values: np.ndarray  # shape (len(times), n)
    graphon: StepGraphon
    reaction: ReactionTerm
    dt: float
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=np.float64)
        v = np.asarray(self.values, dtype=np.float64)
        if t.ndim != 1 or t.size < 1 or t[0] != 0.0 or np.any(np.diff(t) <= 0):
            raise ValueError("output times must start at 0 and increase strictly")
        if v.shape != (t.size, self.graphon.n):
            raise DimensionMismatchError(f"states have shape {v.shape}, expected {(t.size, self.graphon.n)}")
        t.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.graphon.n

    @property
    def states(self) -> list[GridFunction]:
        return [GridFunction(row) for row in self.values]

    def state(self, i: int) -> GridFunction:
        return GridFunction(self.values[i])

    def norms(self, p) -> np.ndarray:
        return lp_norm_values(self.values, p)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t"] + [f"cell_{k}" for k in range(self.n)])
        for t, row in zip(self.times, self.values):
            w.writerow([repr(float(t))] + [repr(float(x)) for x in row])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({
            "config": {
                "graphon": self.graphon.to_dict(),
                "reaction": self.reaction.to_dict(),
                "dt": self.dt,
                **self.meta,
            },
            "times": self.times.tolist(),
            "states": self.values.tolist(),
        })


def _rk4_segment(m, phi, u, t0, t1, dt):
    """Advance ``u`` from ``t0`` to exactly ``t1``; the last step is shortened."""
    t = t0
    nsteps = int(np.floor((t1 - t0) / dt + 1e-9))
    h = dt
    for s in range(nsteps + 1):
        if s == nsteps:
            h = t1 - t
            if h <= 1e-14 * max(1.0, abs(t1)):
                break
        k1 = m @ u + phi(u)
        k2 = m @ (y := u + 0.5 * h * k1) + phi(y)
        k3 = m @ (y := u + 0.5 * h * k2) + phi(y)
        k4 = m @ (y := u + h * k3) + phi(y)
        u = u + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t = t0 + (s + 1) * dt if s < nsteps else t1
        if not np.all(np.isfinite(u)):
            raise NonFiniteStateError(f"solution blew up near t={t:.6g}", time=t)
    return u


def integrate_rd(g: StepGraphon, reaction: ReactionTerm, u0: GridFunction, T: float,
                 dt: float, output_times=None) -> RdSolution:
    """Fixed-step RK4 for ``du/dt = L u + Phi(u)``.

    ``output_times`` defaults to ``[0, T]``; the integrator lands exactly on
    each requested time.
    """
    _check_dims(g, u0)
    if dt <= 0:
        raise ValueError("dt must be positive")
    if T < 0:
        raise NegativeTimeError(f"T={T} < 0")
    if output_times is None:
        times = np.array([0.0, T]) if T > 0 else np.array([0.0])
    else:
        times = np.asarray(output_times, dtype=np.float64)
        if times[0] != 0.0:
            times = np.concatenate([[0.0], times])
        if times[-1] > T + 1e-12:
            raise ValueError("output times must not exceed T")
    m = build_L_matrix(g)
    phi = reaction if not reaction.is_zero else (lambda x: 0.0)
    out = np.empty((times.size, g.n))
    u = u0.values.copy()
    out[0] = u
    # overflow is expected on blow-up and is reported as NonFiniteStateError
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(1, times.size):
            u = _rk4_segment(m, phi, u, times[i - 1], times[i], dt)
            out[i] = u
    return RdSolution(times, out, g, reaction, dt, {"T": float(T)})


def mild_residual(sol: RdSolution, p=2) -> float:
    """Largest defect of the variation-of-constants identity over the outputs.

    At each output time ``t_j`` this evaluates
    ``u(t_j) - e^{t_j L} u(0) - int_0^{t_j} e^{(t_j - s) L} Phi(u(s)) ds``
    with the time integral replaced by the trapezoidal rule on the stored
    states. Output times must be uniformly spaced.
    """
    t = sol.times
    if t.size < 3:
        raise InsufficientSamplesError("need at least three output times")
    h = t[1] - t[0]
    if np.max(np.abs(np.diff(t) - h)) > 1e-9 * max(1.0, t[-1]):
        raise InsufficientSamplesError("output times must be uniformly spaced")
    e = _propagator(build_L_matrix(sol.graphon), h)
    f = sol.reaction(sol.values)
    # acc_j = sum_{k<=j} e^{(t_j - t_k)L} f_k, free_j = e^{t_j L} u0, head_j = e^{t_j L} f_0
    acc = f[0].copy()
    free = sol.values[0].copy()
    head = f[0].copy()
    worst = 0.0
    for j in range(1, t.size):
        acc = e @ acc + f[j]
        free = e @ free
        head = e @ head
        integral = h * (acc - 0.5 * (head + f[j]))
        r = sol.values[j] - free - integral
        worst = max(worst, float(lp_norm_values(r, p)))
    return worst


# --- executable checks ------------------------------------------------------

@dataclass(frozen=True)
class CheckReport:
    name: str
    value: float
    tolerance: float
    passed: bool

    def to_dict(self):
        return {"check": self.name, "value": self.value, "tolerance": self.tolerance, "passed": self.passed}


def _require_diffusion(sol):
    if not sol.reaction.is_zero:
        raise FamilyMismatchError("check applies to pure diffusion runs (Phi = 0) only")


def check_contraction(sol: RdSolution, p=2, slack: float = CONTRACTION_SLACK) -> CheckReport:
    """``||u(t)||_p`` must not increase along a diffusion run."""
    _require_diffusion(sol)
    norms = sol.norms(p)
    inc = float(np.max(np.diff(norms), initial=0.0))
    inc = max(inc, 0.0)
    if inc > slack:
        raise ContractionViolatedError(f"L^{p} norm grew by {inc:.3e}")
    return CheckReport(f"contraction_p{p}", inc, slack, True)


def check_mass_conservation(sol: RdSolution, tol: float = MASS_TOL) -> CheckReport:
    _require_diffusion(sol)
    means = sol.values.mean(axis=1)
    drift = float(np.max(np.abs(means - means[0])))
    if drift > tol:
        raise MassDriftError(f"mass drifted by {drift:.3e}")
    return CheckReport("mass", drift, tol, True)


def check_max_principle(sol: RdSolution, m1: float, m2: float,
                        tol: float = MAX_PRINCIPLE_TOL) -> CheckReport:
    """All states stay in ``[m1, m2]`` up to ``tol``; returns the largest excursion."""
    if not m1 < m2:
        raise ValueError("need M1 < M2")
    phi = sol.reaction
    if float(phi(m2)) > 0 or float(phi(m1)) < 0:
        raise ValueError("need Phi(M2) <= 0 <= Phi(M1)")
    u0 = sol.values[0]
    if np.any(u0 < m1) or np.any(u0 > m2):
        raise ValueError("initial data outside [M1, M2]")
    exc = float(max(np.max(sol.values - m2), np.max(m1 - sol.values), 0.0))
    if exc > tol:
        raise MaxPrincipleViolatedError(f"state left [{m1}, {m2}] by {exc:.3e}")
    return CheckReport("max_principle", exc, tol, True)
