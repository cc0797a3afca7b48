import os
import subprocess
import sys

import numpy as np

from graphon_rd import _accel
from graphon_rd.cutnorm import cut_norm_exact

SCRIPT = """
import numpy as np
from graphon_rd import _accel
from graphon_rd.cutnorm import cut_norm_exact
from graphon_rd.particles import simulate
from graphon_rd.kernel import StepGraphon
from graphon_rd.reactions import RateFamily
g = StepGraphon(np.full((3, 3), 0.5))
tr = simulate(g, RateFamily("linear", 1.0), RateFamily("quadratic", 1.0), [5, 0, 2], 5.0, 1.0, 1000, 4)
d = np.random.default_rng(0).normal(size=(8, 8))
print(_accel.backend())
print(repr(cut_norm_exact(d + d.T, "bilinear").value))
print(tr.events_csv(), end="")
"""


def _run(disable):
    env = dict(os.environ)
    env.pop("GRAPHON_RD_DISABLE_NUMBA", None)
    if disable:
        env["GRAPHON_RD_DISABLE_NUMBA"] = "1"
    out = subprocess.run([sys.executable, "-c", SCRIPT], env=env, capture_output=True, text=True, check=True)
    return out.stdout.split("\n", 1)


def test_env_flag_selects_fallback_with_identical_results():
    fast_backend, fast = _run(False)
    slow_backend, slow = _run(True)
    assert fast_backend == "numba" and slow_backend == "python"
    assert fast == slow


def test_backends_agree_in_process():
    d = np.random.default_rng(1).normal(size=(10, 10))
    d = d + d.T
    for variant in ("st", "s_complement", "bilinear"):
        a = cut_norm_exact(d, variant, backend="numba").value
        b = cut_norm_exact(d, variant, backend="numpy").value
        assert abs(a - b) <= 1e-12 * max(1.0, abs(a))
    assert _accel.backend() in ("numba", "python")
