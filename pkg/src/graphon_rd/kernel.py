"""Graphons as kernels on (0, 1)^2.

Two representations are supported:

* :class:`StepGraphon` -- a symmetric nonnegative ``n x n`` matrix read as a
  kernel that is constant on each product cell ``I_i x I_j``.
* :class:`AnalyticGraphon` -- a named closed-form family evaluated pointwise.

Either one is accepted wherever a "graphon handle" is expected.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy import integrate

from .errors import (
    AsymmetricInputError,
    DegreeBoundViolatedError,
    IncompatibleRepresentationsError,
    KernelOutOfUnitRangeError,
    NegativeEntryError,
    NonFiniteKernelError,
    PointOutOfDomainError,
    QuadratureFailureError,
    UnknownFamilyError,
)
from .gridfn import INF, _check_exponent

SYMMETRY_TOL = 1e-12
DEGREE_TOL = 1e-12
MAX_REFINEMENT = 4096
QUADRATURE_ORDER = 10


def _validate_matrix(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NonFiniteKernelError("kernel values must be finite")
    if np.max(np.abs(a - a.T)) > SYMMETRY_TOL:
        raise AsymmetricInputError("kernel matrix is not symmetric")
    if np.any(a < 0):
        raise NegativeEntryError("kernel matrix has negative entries")
    n = a.shape[0]
    deg = a.sum(axis=1) / n
    if np.any(deg > 1.0 + DEGREE_TOL):
        k = int(np.argmax(deg))
        raise DegreeBoundViolatedError(f"degree of cell {k} is {deg[k]:.6g} > 1")
    return a


@dataclass(frozen=True, eq=False)
class StepGraphon:
    """Piecewise-constant graphon on the uniform ``n``-cell partition."""

    values: np.ndarray

    def __post_init__(self):
        a = _validate_matrix(self.values)
        a.setflags(write=False)
        object.__setattr__(self, "values", a)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def degrees(self) -> np.ndarray:
        return self.values.sum(axis=1) / self.n

    def __call__(self, x, y):
        i = _cell_index(np.asarray(x, dtype=np.float64), self.n)
        j = _cell_index(np.asarray(y, dtype=np.float64), self.n)
        return self.values[i, j]

    def refine(self, m: int) -> np.ndarray:
        """Cell values on the ``m``-cell partition (``m`` a multiple of ``n``)."""
        if m % self.n:
            raise IncompatibleRepresentationsError(f"{m} is not a multiple of n={self.n}")
        r = m // self.n
        return np.repeat(np.repeat(self.values, r, axis=0), r, axis=1)

    def to_dict(self) -> dict:
        return {"kind": "step", "n": self.n, "values": self.values.tolist()}

    def __repr__(self):
        return f"StepGraphon(n={self.n})"


def _cell_index(x: np.ndarray, n: int) -> np.ndarray:
    # I_k = ((k-1)/n, k/n], last cell open at 1; returns 0-based k-1
    return np.clip(np.ceil(x * n).astype(np.int64) - 1, 0, n - 1)


# --- analytic families -----------------------------------------------------

SEPARABLE_FUNCTIONS = {
    "identity": lambda x: x,
    "sqrt": np.sqrt,
    "square": lambda x: x * x,
    "one_minus": lambda x: 1.0 - x,
}


def _constant(x, y, params):
    return np.full(np.broadcast(x, y).shape, float(params["c"]))


def _separable(x, y, params):
    f = SEPARABLE_FUNCTIONS[params.get("f", "identity")]
    scale = float(params.get("c", 1.0))
    return scale * f(x) * f(y)


def _min_kernel(x, y, params):
    return float(params.get("c", 1.0)) * np.minimum(x, y)


def _smooth_cosine(x, y, params):
    return float(params.get("c", 1.0)) * 0.5 * (1.0 + np.cos(2.0 * np.pi * (x - y)))


FAMILIES = {
    "constant": (_constant, ("c",)),
    "separable": (_separable, ("c", "f")),
    "min": (_min_kernel, ("c",)),
    "smooth_cosine": (_smooth_cosine, ("c",)),
}

# families smooth away from the diagonal but with a kink on it
_DIAGONAL_KINK = {"min"}

_VALIDATION_SAMPLES = 129


@dataclass(frozen=True, eq=False)
class AnalyticGraphon:
    """Closed-form kernel ``W(x, y)`` from a registered family.

    Families: ``constant(c)``, ``separable(f, c)`` with ``W = c f(x) f(y)``,
    ``min(c)`` with ``W = c min(x, y)`` and ``smooth_cosine(c)`` with
    ``W = c (1 + cos 2 pi (x - y)) / 2``.
    """

    family: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise UnknownFamilyError(f"unknown graphon family {self.family!r}")
        params = dict(self.params)
        if self.family == "separable" and params.get("f", "identity") not in SEPARABLE_FUNCTIONS:
            raise UnknownFamilyError(f"unknown separable factor {params.get('f')!r}")
        if self.family == "constant" and "c" not in params:
            raise ValueError("constant graphon needs parameter c")
        object.__setattr__(self, "params", params)
        self._validate()

    def __call__(self, x, y):
        fn, _ = FAMILIES[self.family]
        return fn(np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64), self.params)

    def _validate(self):
        s = (np.arange(_VALIDATION_SAMPLES) + 0.5) / _VALIDATION_SAMPLES
        w = self(s[:, None], s[None, :])
        if not np.all(np.isfinite(w)):
            raise NonFiniteKernelError(f"{self!r} is not finite on (0,1)^2")
        if np.any(w < 0):
            raise NegativeEntryError(f"{self!r} takes negative values")
        # composite Gauss-Legendre estimate of the degree at sample points
        nodes, weights = _gauss_legendre(QUADRATURE_ORDER)
        cells = 16
        ys = ((np.arange(cells)[:, None] + nodes[None, :]) / cells).ravel()
        wy = np.tile(weights, cells) / cells
        deg = self(s[:, None], ys[None, :]) @ wy
        if np.any(deg > 1.0 + 1e-9):
            raise DegreeBoundViolatedError(f"{self!r} has degree {deg.max():.6g} > 1")

    def to_dict(self) -> dict:
        return {"kind": "analytic", "family": self.family, "params": dict(self.params)}

    def __repr__(self):
        return f"AnalyticGraphon({self.family!r}, {self.params!r})"


GraphonHandle = Union[StepGraphon, AnalyticGraphon]


# --- construction ----------------------------------------------------------

def step_from_adjacency(a, n: int | None = None) -> StepGraphon:
    """Interpret an adjacency matrix as a step graphon (values copied as-is)."""
    a = np.asarray(a, dtype=np.float64)
    if n is not None and a.shape != (n, n):
        raise ValueError(f"adjacency has shape {a.shape}, expected ({n}, {n})")
    return StepGraphon(a)


def _gauss_legendre(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (x + 1.0), 0.5 * w


def quotient_step(w: AnalyticGraphon, n: int, order: int = QUADRATURE_ORDER) -> StepGraphon:
    """Cell averages of ``w`` over the ``n x n`` uniform grid.

    Each cell uses a tensor Gauss-Legendre rule of the given order. Diagonal
    cells are split along ``x = y`` into two triangles, integrated with a
    collapsed product rule, so kernels with a kink on the diagonal (such as
    ``min``) are still integrated to full accuracy.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if order < 8:
        raise ValueError("quadrature order must be at least 8")
    t, wt = _gauss_legendre(order)
    h = 1.0 / n
    # off-diagonal cells: one tensor rule per cell
    pts = ((np.arange(n)[:, None] + t[None, :]) * h).ravel()
    vals = w(pts[:, None], pts[None, :])
    if not np.all(np.isfinite(vals)):
        raise QuadratureFailureError("non-finite kernel value during quadrature")
    vals = vals.reshape(n, order, n, order)
    out = np.einsum("iajb,a,b->ij", vals, wt, wt)
    out[np.diag_indices(n)] = _diagonal_cells(w, n, t, wt)
    out = 0.5 * (out + out.T)
    out[out < 0] = 0.0  # rounding on kernels that touch zero
    return StepGraphon(out)


def _diagonal_cells(w, n, t, wt):
    # lower triangle {a < y < x < b}: x = a + h s, y = a + h s r, Jacobian h^2 s
    h = 1.0 / n
    s = t[:, None]
    r = t[None, :]
    res = np.empty(n)
    for k in range(n):
        a = k * h
        x = a + h * s
        y = a + h * s * r
        lo = np.sum(w(x, y) * s * wt[:, None] * wt[None, :])
        hi = np.sum(w(y, x) * s * wt[:, None] * wt[None, :])
        if not (np.isfinite(lo) and np.isfinite(hi)):
            raise QuadratureFailureError("non-finite kernel value during quadrature")
        res[k] = lo + hi  # cell average = integral / h^2, Jacobian carries h^2
    return res


def sample_w_random(w: GraphonHandle, n: int, seed=None) -> StepGraphon:
    """Simple random graph with edge probabilities ``W`` at cell midpoints."""
    if n < 1:
        raise ValueError("n must be positive")
    mid = (np.arange(n) + 0.5) / n
    prob = np.asarray(w(mid[:, None], mid[None, :]), dtype=np.float64)
    if np.any(prob < 0) or np.any(prob > 1):
        raise KernelOutOfUnitRangeError("kernel values must lie in [0, 1] for W-random sampling")
    rng = np.random.default_rng(seed)
    iu = np.triu_indices(n, k=1)
    a = np.zeros((n, n))
    a[iu] = (rng.random(iu[0].size) < prob[iu]).astype(np.float64)
    a = a + a.T
    return StepGraphon(a)


# --- functionals -----------------------------------------------------------

def degree(g: GraphonHandle, x: float) -> float:
    """``int_0^1 W(x, y) dy``."""
    if not 0.0 < x < 1.0:
        raise PointOutOfDomainError(f"x={x} is outside (0, 1)")
    if isinstance(g, StepGraphon):
        k = int(_cell_index(np.asarray(x), g.n))
        return float(g.values[k].sum() / g.n)
    points = [x] if g.family in _DIAGONAL_KINK else None
    val, _ = integrate.quad(lambda y: float(g(x, y)), 0.0, 1.0, points=points,
                            epsabs=1e-12, epsrel=1e-12, limit=200)
    return float(val)


def _common_values(g1: GraphonHandle, g2: GraphonHandle):
    if isinstance(g1, StepGraphon) and isinstance(g2, StepGraphon):
        m = math.lcm(g1.n, g2.n)
        if m > MAX_REFINEMENT:
            raise IncompatibleRepresentationsError(
                f"common refinement {m} of n={g1.n}, {g2.n} exceeds {MAX_REFINEMENT}")
        return g1.refine(m), g2.refine(m)
    if isinstance(g1, AnalyticGraphon) and isinstance(g2, AnalyticGraphon):
        raise IncompatibleRepresentationsError("two analytic kernels have no step partition to compare on")
    step, analytic = (g1, g2) if isinstance(g1, StepGraphon) else (g2, g1)
    q = quotient_step(analytic, step.n).values
    return (step.values, q) if step is g1 else (q, step.values)


def difference_matrix(g1: GraphonHandle, g2: GraphonHandle) -> np.ndarray:
    """Signed cell values of ``g1 - g2`` on their common partition."""
    a, b = _common_values(g1, g2)
    return a - b


def lp_kernel_distance(g1: GraphonHandle, g2: GraphonHandle, p) -> float:
    """``||g1 - g2||_p`` over (0,1)^2 with exact cell arithmetic."""
    p = _check_exponent(p)
    d = np.abs(difference_matrix(g1, g2))
    if p == INF:
        return float(d.max())
    if p == 1.0:
        return float(d.mean())
    return float(np.mean(d**p) ** (1.0 / p))


def lp_matrix_norm(d: np.ndarray, p) -> float:
    """L^p norm of a step kernel given by its cell values."""
    p = _check_exponent(p)
    d = np.abs(np.asarray(d, dtype=np.float64))
    if p == INF:
        return float(d.max())
    return float(np.mean(d**p) ** (1.0 / p))


# --- serialisation ---------------------------------------------------------

def to_json(g: GraphonHandle) -> str:
    return json.dumps(g.to_dict())


def from_dict(data: dict) -> GraphonHandle:
    kind = data.get("kind")
    if kind == "step":
        g = StepGraphon(np.asarray(data["values"], dtype=np.float64))
        if "n" in data and int(data["n"]) != g.n:
            raise ValueError(f"declared n={data['n']} but matrix is {g.n}x{g.n}")
        return g
    if kind == "analytic":
        return AnalyticGraphon(data["family"], dict(data.get("params", {})))
    raise ValueError(f"unknown kernel kind {kind!r}")


def from_json(text: str) -> GraphonHandle:
    return from_dict(json.loads(text))


def load_adjacency(path) -> np.ndarray:
    """Read a whitespace-delimited square matrix (one row per line)."""
    a = np.loadtxt(path, dtype=np.float64, ndmin=2)
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"{path}: matrix is {a.shape[0]}x{a.shape[1]}, not square")
    return a


def load_kernel(path) -> GraphonHandle:
    """Load a kernel from ``.json`` (schema above) or a plain-text adjacency."""
    path = str(path)
    if path.endswith(".json"):
        with open(path) as fh:
            return from_json(fh.read())
    return StepGraphon(load_adjacency(path))
