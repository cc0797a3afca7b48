"""Piecewise-constant functions on (0, 1) over the uniform n-cell partition.

Cell ``k`` (0-based) is the interval ``(k/n, (k+1)/n]``. All norms are taken
with respect to Lebesgue measure on (0, 1), so each cell carries weight 1/n
and a constant function has every L^p norm equal to its absolute value.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatchError,
    InvalidExponentError,
    NonFiniteResultError,
    NotADivisorError,
    NotAMultipleError,
    UnknownFamilyError,
)

INF = math.inf

SCALAR_FUNCTIONS = {
    "identity": lambda x: x,
    "square": lambda x: x * x,
    "abs": np.abs,
    "exp": np.exp,
    "allen_cahn": lambda x: x - x**3,
    "logistic": lambda x: x * (1.0 - x),
}


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Values of a step function on the uniform partition of (0, 1)."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64, copy=True).reshape(-1)
        if v.size < 1:
            raise ValueError("a GridFunction needs at least one cell")
        if not np.all(np.isfinite(v)):
            raise NonFiniteResultError("GridFunction values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @classmethod
    def constant(cls, c: float, n: int) -> "GridFunction":
        return cls(np.full(n, float(c)))

    def __len__(self):
        return self.n

    def __repr__(self):
        return f"GridFunction(n={self.n}, values={np.array2string(self.values, threshold=8)})"

    def __eq__(self, other):
        if not isinstance(other, GridFunction):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.values, other.values)

    def _check_same(self, other):
        if other.n != self.n:
            raise DimensionMismatchError(f"partition sizes differ: {self.n} vs {other.n}")

    def __add__(self, other):
        self._check_same(other)
        return GridFunction(self.values + other.values)

    def __sub__(self, other):
        self._check_same(other)
        return GridFunction(self.values - other.values)

    def __neg__(self):
        return GridFunction(-self.values)

    def __mul__(self, scalar):
        return GridFunction(float(scalar) * self.values)

    __rmul__ = __mul__

    def to_json(self) -> str:
        return json.dumps({"n": self.n, "values": [float(x) for x in self.values]})

    @classmethod
    def from_json(cls, text: str) -> "GridFunction":
        data = json.loads(text)
        gf = cls(np.asarray(data["values"], dtype=np.float64))
        if gf.n != int(data["n"]):
            raise DimensionMismatchError(f"declared n={data['n']} but {gf.n} values given")
        return gf

    def to_csv(self, header: str = "value") -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([header])
        for x in self.values:
            w.writerow([repr(float(x))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "GridFunction":
        rows = list(csv.reader(io.StringIO(text)))
        return cls(np.array([float(r[0]) for r in rows[1:] if r], dtype=np.float64))


def _check_exponent(p):
    if p == INF or p == "inf":
        return INF
    p = float(p)
    if math.isinf(p):
        return INF
    if not p >= 1.0:
        raise InvalidExponentError(f"L^p norms need p >= 1, got {p}")
    return p


def lp_norm_values(values: np.ndarray, p) -> float:
    """L^p norm of cell values under the uniform probability weights.

    Works along the last axis, so a stack of states gives one norm per row.
    """
    p = _check_exponent(p)
    a = np.abs(np.asarray(values, dtype=np.float64))
    if p == INF:
        return a.max(axis=-1)
    if p == 1.0:
        return a.mean(axis=-1)
    # rescale by the max so tiny or huge values neither underflow nor overflow
    scale = a.max(axis=-1, keepdims=True)
    safe = np.where(scale > 0, scale, 1.0)
    r = np.mean((a / safe) ** p, axis=-1) ** (1.0 / p)
    return r * np.squeeze(safe, axis=-1) * (np.squeeze(scale, axis=-1) > 0)


def lp_norm(u: GridFunction, p) -> float:
    return float(lp_norm_values(u.values, p))


def refine(u: GridFunction, m: int) -> GridFunction:
    """Replicate each cell value ``m // n`` times."""
    if m < 1 or m % u.n:
        raise NotAMultipleError(f"{m} is not a multiple of n={u.n}")
    return GridFunction(np.repeat(u.values, m // u.n))


def coarsen(u: GridFunction, m: int) -> GridFunction:
    """Average blocks of ``n // m`` consecutive cells."""
    if m < 1 or u.n % m:
        raise NotADivisorError(f"{m} does not divide n={u.n}")
    blocks = u.values.reshape(m, u.n // m)
    # offset by the first entry so constant blocks come back bit-exact
    first = blocks[:, :1]
    return GridFunction(first[:, 0] + (blocks - first).mean(axis=1))


def map_pointwise(u: GridFunction, f) -> GridFunction:
    """Apply a registered scalar function (by name) or any vectorised callable."""
    if isinstance(f, str):
        try:
            f = SCALAR_FUNCTIONS[f]
        except KeyError:
            raise UnknownFamilyError(f"no scalar function named {f!r}") from None
    with np.errstate(all="ignore"):
        out = np.asarray(f(u.values), dtype=np.float64)
    if out.shape != u.values.shape or not np.all(np.isfinite(out)):
        raise NonFiniteResultError("pointwise map produced non-finite values")
    return GridFunction(out)


def axpy(a: float, x: GridFunction, y: GridFunction) -> GridFunction:
    """Return ``a*x + y``."""
    x._check_same(y)
    return GridFunction(a * x.values + y.values)


def mean(u: GridFunction) -> float:
    """Integral of ``u`` over (0, 1)."""
    return float(u.values.mean())
