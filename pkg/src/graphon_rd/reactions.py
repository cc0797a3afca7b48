"""Reaction terms ``Phi`` and the scalar birth/death rate families behind them."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._accel import kernel
from .errors import UnknownFamilyError

# --- scalar rate families (usable inside compiled kernels) ------------------

RATE_CODES = {"zero": 0, "linear": 1, "quadratic": 2, "saturating": 3}


@kernel
def rate_eval(code, r, x):
    if code == 0:
        return 0.0
    if code == 1:
        return r * x
    if code == 2:
        return r * x * x
    return r * x / (1.0 + abs(x))


@dataclass(frozen=True)
class RateFamily:
    """Scalar rate ``x -> f(x)`` with ``f(0) = 0`` and ``f >= 0`` on [0, inf).

    ``linear`` is ``r x``, ``quadratic`` is ``r x^2`` and ``saturating`` is
    ``r x / (1 + |x|)``.
    """

    name: str = "zero"
    rate: float = 0.0

    def __post_init__(self):
        if self.name not in RATE_CODES:
            raise UnknownFamilyError(f"unknown rate family {self.name!r}")
        if self.rate < 0:
            raise ValueError("rate families must be nonnegative on [0, inf)")

    @property
    def code(self) -> int:
        return RATE_CODES[self.name]

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        if self.name == "zero":
            return np.zeros_like(x)
        if self.name == "linear":
            return self.rate * x
        if self.name == "quadratic":
            return self.rate * x * x
        return self.rate * x / (1.0 + np.abs(x))

    def lipschitz_on(self, a: float, b: float) -> float:
        if self.name == "zero":
            return 0.0
        if self.name == "linear":
            return self.rate
        if self.name == "quadratic":
            return 2.0 * self.rate * max(abs(a), abs(b))
        # |f'| = r / (1 + |x|)^2 peaks at the point of [a, b] nearest zero
        nearest = min(abs(a), abs(b)) if a * b > 0 else 0.0
        return self.rate / (1.0 + nearest) ** 2

    @property
    def uniform_lipschitz(self) -> float | None:
        return None if self.name == "quadratic" and self.rate > 0 else self.lipschitz_on(0.0, 0.0)

    def to_dict(self):
        return {"name": self.name, "rate": self.rate}


ZERO_RATE = RateFamily("zero", 0.0)

# --- reaction terms ----------------------------------------------------------

REACTION_FAMILIES = ("zero", "linear", "logistic", "allen_cahn", "birth_death")


@dataclass(frozen=True)
class ReactionTerm:
    """Named reaction ``Phi`` with ``Phi(0) = 0``.

    ``linear(r)``: ``r x``; ``logistic(r)``: ``r x (1 - x)``;
    ``allen_cahn``: ``x - x^3``; ``birth_death(b, d)``: ``b(x) - d(x)``.
    """

    family: str = "zero"
    rate: float = 1.0
    birth: RateFamily = field(default=ZERO_RATE)
    death: RateFamily = field(default=ZERO_RATE)

    def __post_init__(self):
        if self.family not in REACTION_FAMILIES:
            raise UnknownFamilyError(f"unknown reaction family {self.family!r}")
        if float(self(np.array(0.0))) != 0.0:
            raise ValueError("reaction must vanish at zero")

    @classmethod
    def zero(cls):
        return cls("zero")

    @classmethod
    def linear(cls, r):
        return cls("linear", float(r))

    @classmethod
    def logistic(cls, r=1.0):
        return cls("logistic", float(r))

    @classmethod
    def allen_cahn(cls):
        return cls("allen_cahn")

    @classmethod
    def birth_death(cls, birth: RateFamily, death: RateFamily):
        return cls("birth_death", 1.0, birth, death)

    @property
    def is_zero(self) -> bool:
        if self.family == "zero":
            return True
        if self.family == "birth_death":
            return self.birth.name == "zero" and self.death.name == "zero"
        return self.family == "linear" and self.rate == 0.0

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        f = self.family
        if f == "zero":
            return np.zeros_like(x)
        if f == "linear":
            return self.rate * x
        if f == "logistic":
            return self.rate * x * (1.0 - x)
        if f == "allen_cahn":
            return x - x**3
        return self.birth(x) - self.death(x)

    def lipschitz_on(self, a: float, b: float) -> float:
        """A Lipschitz constant of ``Phi`` on ``[a, b]``."""
        a, b = min(a, b), max(a, b)
        f = self.family
        if f == "zero":
            return 0.0
        if f == "linear":
            return abs(self.rate)
        if f == "logistic":
            # |Phi'| = |r| |1 - 2x| is convex, so the max sits at an endpoint
            return abs(self.rate) * max(abs(1 - 2 * a), abs(1 - 2 * b))
        if f == "allen_cahn":
            cands = [abs(1 - 3 * a * a), abs(1 - 3 * b * b)]
            if a <= 0.0 <= b:
                cands.append(1.0)
            return max(cands)
        return self.birth.lipschitz_on(a, b) + self.death.lipschitz_on(a, b)

    @property
    def uniform_lipschitz(self) -> float | None:
        """Global Lipschitz constant, or ``None`` if there is none."""
        f = self.family
        if f in ("zero", "linear"):
            return self.lipschitz_on(0.0, 0.0)
        if f == "logistic":
            return 0.0 if self.rate == 0 else None
        if f == "allen_cahn":
            return None
        lb, ld = self.birth.uniform_lipschitz, self.death.uniform_lipschitz
        return None if lb is None or ld is None else lb + ld

    @property
    def invariant_interval(self) -> tuple[float, float] | None:
        """``(M1, M2)`` with ``M1 < M2`` and ``Phi(M2) <= 0 <= Phi(M1)``, if one is known."""
        f = self.family
        if f == "allen_cahn":
            return (-1.0, 1.0)
        if f == "logistic" and self.rate > 0:
            return (0.0, 1.0)
        if f == "birth_death" and self.birth.name == "linear" and self.death.name == "quadratic":
            if self.birth.rate > 0 and self.death.rate > 0:
                return (0.0, self.birth.rate / self.death.rate)
        return None

    def to_dict(self):
        d = {"family": self.family}
        if self.family in ("linear", "logistic"):
            d["rate"] = self.rate
        if self.family == "birth_death":
            d["birth"] = self.birth.to_dict()
            d["death"] = self.death.to_dict()
        return d

    @classmethod
    def from_dict(cls, data):
        fam = data.get("family", "zero")
        if fam == "birth_death":
            return cls.birth_death(RateFamily(**data["birth"]), RateFamily(**data["death"]))
        if fam in ("linear", "logistic"):
            return cls(fam, float(data.get("rate", 1.0)))
        return cls(fam)


def sampled_lipschitz(fn, a: float, b: float, samples: int = 20001) -> float:
    """Largest difference quotient of ``fn`` on a dense grid of ``[a, b]``."""
    x = np.linspace(a, b, samples)
    y = np.asarray(fn(x), dtype=np.float64)
    q = np.abs(np.diff(y) / np.diff(x))
    return float(q.max()) if q.size else 0.0
