"""Compiled vs fallback timings for the two hot loops.

Run with ``python3 benchmarks/bench_kernels.py``. Each row times the numba
kernel (after a warm-up call) against the path used when
``GRAPHON_RD_DISABLE_NUMBA=1``: plain Python for the event loop, block
vectorised numpy for the cut-norm enumeration. Outputs are compared too, so
a mismatch shows up here as well as in the test suite.
"""
import argparse
import time

import numpy as np

from graphon_rd import AnalyticGraphon, RateFamily, quotient_step
from graphon_rd.cutnorm import cut_norm_exact
from graphon_rd.particles import gillespie, initial_counts, simulate
from graphon_rd.harness import make_profile


def best_of(fn, repeats):
    times = []
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def bench_gillespie(n, ell, repeats):
    g = quotient_step(AnalyticGraphon("smooth_cosine", {"c": 1.0}), n)
    b, d = RateFamily("linear", 1.0), RateFamily("quadratic", 1.0)
    m0 = initial_counts(make_profile("sine", c=0.3, offset=0.5).cell_averages(n), ell)

    def run(kernel=None):
        return simulate(g, b, d, m0, ell, 1.0, 10**7, seed=3, kernel=kernel)

    run()  # compile
    fast, a = best_of(run, repeats)
    slow, c = best_of(lambda: run(gillespie.gillespie_run.py_func), 1)
    same = np.array_equal(a.times, c.times) and np.array_equal(a.ks, c.ks)
    return f"gillespie n={n} ell={ell:g} ({a.n_events} events)", fast, slow, same


def bench_cut_norm(n, repeats):
    rng = np.random.default_rng(n)
    d = rng.normal(size=(n, n))
    d = d + d.T
    cut_norm_exact(d[:4, :4], "bilinear", backend="numba")  # compile
    fast, a = best_of(lambda: cut_norm_exact(d, "bilinear", backend="numba"), repeats)
    slow, c = best_of(lambda: cut_norm_exact(d, "bilinear", backend="numpy"), 1)
    return f"bilinear cut norm n={n}", fast, slow, abs(a.value - c.value) < 1e-12


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--quick", action="store_true", help="smaller sizes")
    args = ap.parse_args(argv)
    sizes = [(8, 50), (16, 100)] if args.quick else [(8, 100), (32, 200), (64, 400)]
    cut_sizes = [10, 14] if args.quick else [12, 16, 18]
    rows = [bench_gillespie(n, ell, args.repeats) for n, ell in sizes]
    rows += [bench_cut_norm(n, args.repeats) for n in cut_sizes]
    print(f"{'case':<42}{'numba [s]':>12}{'fallback [s]':>14}{'speedup':>10}  match")
    for name, fast, slow, same in rows:
        print(f"{name:<42}{fast:>12.4f}{slow:>14.4f}{slow / fast:>10.1f}  {same}")


if __name__ == "__main__":
    main()
