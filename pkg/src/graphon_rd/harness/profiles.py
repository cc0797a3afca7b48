"""Named initial profiles with exact cell averages on any uniform partition."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..gridfn import GridFunction


@dataclass(frozen=True)
class Constant:
    c: float = 0.5

    def cell_averages(self, n: int) -> GridFunction:
        return GridFunction.constant(float(self.c), n)


@dataclass(frozen=True)
class Step:
    """``a`` on ``(0, split)``, ``b`` on ``(split, 1)``."""

    a: float = 0.0
    b: float = 1.0
    split: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.split <= 1.0:
            raise ValueError(f"split must lie in [0, 1], got {self.split}")

    def cell_averages(self, n: int) -> GridFunction:
        lo = np.arange(n) / n
        hi = (np.arange(n) + 1) / n
        left = np.clip(self.split - lo, 0.0, hi - lo) * n  # fraction of the cell left of split
        return GridFunction(self.a * left + self.b * (1.0 - left))


@dataclass(frozen=True)
class Sine:
    """``offset + c sin(2 pi x)``."""

    c: float = 0.5
    offset: float = 0.0

    def cell_averages(self, n: int) -> GridFunction:
        edges = np.arange(n + 1) / n
        cos = np.cos(2.0 * math.pi * edges)
        avg = (cos[:-1] - cos[1:]) * n / (2.0 * math.pi)
        return GridFunction(self.offset + self.c * avg)


PROFILES = {"constant": Constant, "step": Step, "sine": Sine}


def make_profile(name: str, **params):
    return PROFILES[name](**params)
