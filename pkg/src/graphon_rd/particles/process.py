"""Random-walk + birth-death particle system on a weighted graph.

Each of the ``m_k`` particles at node ``k`` jumps to ``i != k`` at rate
``W[k, i] / n``; node ``k`` gains a particle at rate ``ell * b(m_k / ell)`` and
loses one at rate ``ell * d(m_k / ell)``. The density ``X_k = m_k / ell`` is
the object compared with the reaction-diffusion equation.
"""
from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..errors import (
    CapBelowInitialError,
    DimensionMismatchError,
    GraphonRDError,
    TimeOutOfRangeError,
)
from ..gridfn import GridFunction
from ..kernel import StepGraphon
from ..reactions import RateFamily, ReactionTerm
from . import gillespie as gk

# buffers start small and double up to these sizes
RANDOM_BLOCK = 1 << 16
EVENT_BLOCK = 1 << 16
_FIRST_BLOCK = 1 << 10


def _readonly(a, dtype):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ParticleState:
    m: np.ndarray
    ell: float
    t: float = 0.0

    def __post_init__(self):
        m = np.asarray(self.m)
        if m.ndim != 1 or m.size < 1:
            raise DimensionMismatchError("counts must be a nonempty vector")
        if not np.all(np.isfinite(m)) or np.any(m != np.round(m)):
            raise ValueError("counts must be integers")
        if np.any(m < 0):
            raise ValueError("counts must be nonnegative")
        if not (np.isfinite(self.ell) and self.ell > 0):
            raise ValueError(f"ell must be positive and finite, got {self.ell}")
        object.__setattr__(self, "m", _readonly(m, np.int64))
        object.__setattr__(self, "ell", float(self.ell))
        object.__setattr__(self, "t", float(self.t))

    @property
    def n(self) -> int:
        return self.m.size

    def density(self) -> GridFunction:
        return GridFunction(self.m / self.ell)


@dataclass(frozen=True, eq=False)
class ParticleTrajectory:
    """Immutable event log of one run.

    ``horizon`` is the end of the time window on which the log is complete:
    ``T`` for normal and absorbed runs, the time of the refused event for
    capped runs.
    """

    initial: ParticleState
    times: np.ndarray
    kinds: np.ndarray
    ks: np.ndarray
    dests: np.ndarray  # -1 for births and deaths
    cap: int
    capped_flag: bool
    graphon: StepGraphon
    birth: RateFamily
    death: RateFamily
    T: float
    horizon: float
    absorbed: bool = False
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "times", _readonly(self.times, np.float64))
        object.__setattr__(self, "kinds", _readonly(self.kinds, np.int8))
        object.__setattr__(self, "ks", _readonly(self.ks, np.int64))
        object.__setattr__(self, "dests", _readonly(self.dests, np.int64))
        if self.graphon.n != self.initial.n:
            raise DimensionMismatchError("graphon and counts have different sizes")

    @property
    def n(self) -> int:
        return self.initial.n

    @property
    def ell(self) -> float:
        return self.initial.ell

    @property
    def n_events(self) -> int:
        return self.times.size

    @property
    def reaction(self) -> ReactionTerm:
        return ReactionTerm.birth_death(self.birth, self.death)

    def counts_at(self, t: float) -> np.ndarray:
        """Counts at time ``t`` (right-continuous)."""
        if not 0.0 <= t <= self.horizon:
            raise TimeOutOfRangeError(f"t={t} outside [0, {self.horizon}]")
        j = int(np.searchsorted(self.times, t, side="right"))
        return gk.replay(self.initial.m.copy(), self.kinds, self.ks, self.dests, j)

    def state_at(self, t: float) -> ParticleState:
        return ParticleState(self.counts_at(t), self.ell, t)

    @property
    def final_state(self) -> ParticleState:
        return self.state_at(self.horizon)

    def all_counts(self) -> np.ndarray:
        """Count vectors before the first event and after each event."""
        return gk.replay_all(self.initial.m.copy(), self.kinds, self.ks, self.dests)

    def validate(self) -> None:
        """Replay the log and check times, signs and the cap."""
        if self.n_events:
            gaps = np.diff(np.concatenate([[0.0], self.times]))
            if np.any(gaps <= 0):
                raise GraphonRDError("event times are not strictly increasing")
            if self.times[-1] > self.horizon:
                raise GraphonRDError("event after the horizon")
        states = self.all_counts()
        if np.any(states < 0):
            raise GraphonRDError("replay produced a negative count")
        if not self.capped_flag and np.any(states > self.cap):
            raise GraphonRDError("replay exceeded the cap on an uncapped run")

    # --- serialisation ---------------------------------------------------

    def events_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["time", "kind", "k", "i"])
        for t, kind, k, i in zip(self.times, self.kinds, self.ks, self.dests):
            w.writerow([repr(float(t)), gk.KIND_NAMES[kind], int(k), "" if i < 0 else int(i)])
        return buf.getvalue()

    def metadata(self) -> dict:
        return {
            "n": self.n,
            "ell": self.ell,
            "m0": self.initial.m.tolist(),
            "T": self.T,
            "horizon": self.horizon,
            "cap": self.cap,
            "capped_flag": self.capped_flag,
            "absorbed": self.absorbed,
            "n_events": self.n_events,
            "birth": self.birth.to_dict(),
            "death": self.death.to_dict(),
            "graphon": self.graphon.to_dict(),
            **self.meta,
        }

    def metadata_json(self) -> str:
        return json.dumps(self.metadata())

    def density_csv(self, grid) -> str:
        """Wide CSV of densities on a time grid: ``t, cell_0, ..., cell_{n-1}``."""
        grid = np.asarray(grid, dtype=np.float64)
        dens = density_on_grid(self, grid)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t"] + [f"cell_{k}" for k in range(self.n)])
        for t, row in zip(grid, dens):
            w.writerow([repr(float(t))] + [repr(float(x)) for x in row])
        return buf.getvalue()


def read_events_csv(text: str):
    """Parse :meth:`ParticleTrajectory.events_csv` output into arrays."""
    rows = list(csv.DictReader(io.StringIO(text)))
    times = np.array([float(r["time"]) for r in rows])
    kinds = np.array([gk.KIND_NAMES.index(r["kind"]) for r in rows], dtype=np.int8)
    ks = np.array([int(r["k"]) for r in rows], dtype=np.int64)
    dests = np.array([int(r["i"]) if r["i"] else -1 for r in rows], dtype=np.int64)
    return times, kinds, ks, dests


def density(obj, t: float | None = None) -> GridFunction:
    """Density ``m / ell`` of a state, or of a trajectory at time ``t``."""
    if isinstance(obj, ParticleState):
        return obj.density()
    if t is None:
        raise ValueError("a time is required for trajectories")
    return GridFunction(obj.counts_at(t) / obj.ell)


def density_on_grid(traj: ParticleTrajectory, grid) -> np.ndarray:
    """Densities at each grid time, shape ``(len(grid), n)``."""
    grid = np.asarray(grid, dtype=np.float64)
    if grid.size and (grid.min() < 0 or grid.max() > traj.horizon):
        raise TimeOutOfRangeError(f"grid leaves [0, {traj.horizon}]")
    states = traj.all_counts()
    idx = np.searchsorted(traj.times, grid, side="right")
    return states[idx] / traj.ell


# --- simulation ------------------------------------------------------------

def _as_seedseq(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def replica_seed(seed: int, r: int) -> np.random.SeedSequence:
    """Stream of replica ``r``: depends only on ``(seed, r)``, not on scheduling."""
    return np.random.SeedSequence(seed, spawn_key=(r,))


def _check_birth_death(b: RateFamily, d: RateFamily):
    for fam in (b, d):
        if not isinstance(fam, RateFamily):
            raise TypeError("birth and death must be RateFamily instances")
        if float(fam(0.0)) != 0.0:
            raise ValueError(f"rate family {fam.name} does not vanish at zero")


def simulate(g: StepGraphon, b: RateFamily, d: RateFamily, m0, ell: float, T: float,
             cap: int, seed=0, *, kernel=None) -> ParticleTrajectory:
    """Exact (Gillespie) simulation up to time ``T``.

    The run stops early, with ``capped_flag`` set, when an event would push a
    count above ``cap``; the refused event is not recorded and its time
    becomes the horizon. An absorbed run (total rate zero) keeps horizon
    ``T``. Given the seed the output is bit-reproducible. ``kernel`` overrides
    the event loop (for example with ``gillespie_run.py_func``).
    """
    _check_birth_death(b, d)
    init = ParticleState(m0, ell, 0.0)
    if T < 0:
        raise ValueError("T must be nonnegative")
    if cap < int(init.m.max()):
        raise CapBelowInitialError(f"cap {cap} is below the largest initial count {int(init.m.max())}")
    n = init.n
    if g.n != n:
        raise DimensionMismatchError(f"graphon has {g.n} cells, counts have {n}")
    run = kernel or gk.gillespie_run

    off = g.values.copy()
    np.fill_diagonal(off, 0.0)
    cum = np.ascontiguousarray(np.cumsum(off, axis=1))
    inv_n = 1.0 / n
    size = 1 << max(0, (n - 1).bit_length())
    codes = (b.code, float(b.rate), d.code, float(d.rate))
    m = init.m.copy()
    tree = gk.tree_build(m, cum[:, -1].copy(), inv_n, float(ell), *codes, size)

    ss = _as_seedseq(seed)
    rng = np.random.Generator(np.random.Philox(ss))
    rblock = eblock = _FIRST_BLOCK
    u = rng.random(rblock)
    pos = 0
    t = 0.0
    chunks = []
    while True:
        ev_t = np.empty(eblock)
        ev_kind = np.empty(eblock, dtype=np.int8)
        ev_k = np.empty(eblock, dtype=np.int64)
        ev_i = np.empty(eblock, dtype=np.int64)
        status, t, pos, ne = run(m, t, float(T), tree, size, cum, inv_n, float(ell), *codes,
                                 int(cap), u, pos, ev_t, ev_kind, ev_k, ev_i)
        chunks.append((ev_t[:ne], ev_kind[:ne], ev_k[:ne], ev_i[:ne]))
        if status == gk.NEED_RANDOMS:
            # leftover uniforms are kept so the stream does not depend on block sizes
            rblock = min(2 * rblock, RANDOM_BLOCK)
            u = np.concatenate([u[pos:], rng.random(rblock)])
            pos = 0
        elif status == gk.EVENTS_FULL:
            eblock = min(2 * eblock, EVENT_BLOCK)
        elif status == gk.BAD_PICK:  # pragma: no cover - guarded by construction
            raise GraphonRDError("event selection landed on a zero-rate channel")
        else:
            break

    times, kinds, ks, dests = (np.concatenate(c) for c in zip(*chunks))
    capped = status == gk.CAPPED
    horizon = float(t) if capped else float(T)
    meta = {"seed": _seed_repr(ss)}
    return ParticleTrajectory(init, times, kinds, ks, dests, int(cap), capped, g, b, d,
                              float(T), horizon, status == gk.ABSORBED, meta)


def _seed_repr(ss: np.random.SeedSequence):
    return {"entropy": ss.entropy, "spawn_key": list(ss.spawn_key)}


def simulate_replicas(g, b, d, m0, ell, T, cap, seed: int, replicas: int, *,
                      workers: int = 1, kernel=None) -> list[ParticleTrajectory]:
    """``replicas`` independent runs; replica ``r`` uses :func:`replica_seed` ``(seed, r)``."""
    def one(r):
        return simulate(g, b, d, m0, ell, T, cap, replica_seed(seed, r), kernel=kernel)

    if workers <= 1:
        return [one(r) for r in range(replicas)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, range(replicas)))


def initial_counts(u0: GridFunction, ell: float) -> np.ndarray:
    """``round(ell * u0)`` per cell; ``u0`` must be nonnegative."""
    if np.any(u0.values < 0):
        raise ValueError("densities must be nonnegative")
    return np.rint(ell * u0.values).astype(np.int64)
