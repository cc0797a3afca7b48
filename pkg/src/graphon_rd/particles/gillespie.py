"""Compiled inner loops of the particle simulator.

The event loop keeps one leaf per node in a binary sum tree holding that
node's total rate (out-migration + birth + death). Only the rate of the node
itself depends on its count, so an event touches one leaf (two for a
migration) and ``O(log n)`` parents. Parents are recomputed from their
children rather than adjusted by differences, so the root never drifts.
"""
import math

import numpy as np

from .._accel import kernel
from ..reactions import rate_eval

# event kinds
MIGRATE, BIRTH, DEATH = 0, 1, 2
KIND_NAMES = ("migrate", "birth", "death")

# loop exit codes
DONE, ABSORBED, CAPPED, NEED_RANDOMS, EVENTS_FULL, BAD_PICK = 0, 1, 2, 3, 4, 5


@kernel
def node_rate(mk, rowoff_k, inv_n, ell, bc, br, dc, dr):
    x = mk / ell
    return mk * rowoff_k * inv_n + ell * rate_eval(bc, br, x) + ell * rate_eval(dc, dr, x)


@kernel
def tree_set(tree, size, k, value):
    idx = size + k
    tree[idx] = value
    idx >>= 1
    while idx >= 1:
        tree[idx] = tree[2 * idx] + tree[2 * idx + 1]
        idx >>= 1


@kernel
def tree_build(m, rowoff, inv_n, ell, bc, br, dc, dr, size):
    tree = np.zeros(2 * size)
    for k in range(m.shape[0]):
        tree[size + k] = node_rate(m[k], rowoff[k], inv_n, ell, bc, br, dc, dr)
    for idx in range(size - 1, 0, -1):
        tree[idx] = tree[2 * idx] + tree[2 * idx + 1]
    return tree


@kernel
def _pick_destination(cum_row, k, s):
    # first i with cum_row[i] > s; that entry has positive weight by construction
    n = cum_row.shape[0]
    lo, hi = 0, n
    while lo < hi:
        mid = (lo + hi) >> 1
        if cum_row[mid] > s:
            hi = mid
        else:
            lo = mid + 1
    if lo < n:
        return lo
    # s landed on the row total through rounding: take the last positive entry
    for i in range(n - 1, -1, -1):
        prev = cum_row[i - 1] if i > 0 else 0.0
        if i != k and cum_row[i] > prev:
            return i
    return -1


@kernel
def gillespie_run(m, t, T, tree, size, cum, inv_n, ell, bc, br, dc, dr, cap,
                  u, pos, ev_t, ev_kind, ev_k, ev_i):
    """Advance the chain until ``T``, absorption, the cap, or a buffer runs out.

    ``m`` and ``tree`` are updated in place. Two uniforms are consumed per
    attempted event. Returns ``(status, t, pos, n_events)``; on ``CAPPED``
    ``t`` is the time of the refused event.
    """
    n = m.shape[0]
    ne = 0
    nmax = ev_t.shape[0]
    while True:
        if ne == nmax:
            return EVENTS_FULL, t, pos, ne
        total = tree[1]
        if total <= 0.0:
            return ABSORBED, t, pos, ne
        if pos + 2 > u.shape[0]:
            return NEED_RANDOMS, t, pos, ne
        u1 = u[pos]
        u2 = u[pos + 1]
        pos += 2
        t_new = t - math.log1p(-u1) / total
        if t_new > T:
            return DONE, T, pos, ne

        target = u2 * total
        idx = 1
        while idx < size:
            left = tree[2 * idx]
            if target < left or tree[2 * idx + 1] <= 0.0:
                idx = 2 * idx
            else:
                target -= left
                idx = 2 * idx + 1
        k = idx - size
        mk = m[k]
        if target < 0.0:
            target = 0.0
        mig = mk * cum[k, n - 1] * inv_n
        birth = ell * rate_eval(bc, br, mk / ell)

        dest = -1
        if target < mig:
            kind = MIGRATE
            dest = _pick_destination(cum[k], k, target / (mk * inv_n))
            if dest < 0:
                return BAD_PICK, t, pos, ne
            if m[dest] + 1 > cap:
                return CAPPED, t_new, pos, ne
            m[k] -= 1
            m[dest] += 1
        elif target < mig + birth:
            kind = BIRTH
            if mk + 1 > cap:
                return CAPPED, t_new, pos, ne
            m[k] += 1
        else:
            kind = DEATH
            if mk == 0:
                return BAD_PICK, t, pos, ne
            m[k] -= 1

        ev_t[ne] = t_new
        ev_kind[ne] = kind
        ev_k[ne] = k
        ev_i[ne] = dest
        ne += 1
        t = t_new
        tree_set(tree, size, k, node_rate(m[k], cum[k, n - 1], inv_n, ell, bc, br, dc, dr))
        if dest >= 0:
            tree_set(tree, size, dest, node_rate(m[dest], cum[dest, n - 1], inv_n, ell, bc, br, dc, dr))


@kernel
def replay(m0, kinds, ks, dests, upto):
    """Counts after the first ``upto`` events."""
    m = m0.copy()
    for e in range(upto):
        k = ks[e]
        kind = kinds[e]
        if kind == MIGRATE:
            m[k] -= 1
            m[dests[e]] += 1
        elif kind == BIRTH:
            m[k] += 1
        else:
            m[k] -= 1
    return m


@kernel
def replay_all(m0, kinds, ks, dests):
    """Count vectors before the first event and after each event, shape (E+1, n)."""
    ne = kinds.shape[0]
    out = np.empty((ne + 1, m0.shape[0]), dtype=np.int64)
    out[0] = m0
    for e in range(ne):
        out[e + 1] = out[e]
        k = ks[e]
        kind = kinds[e]
        if kind == MIGRATE:
            out[e + 1, k] -= 1
            out[e + 1, dests[e]] += 1
        elif kind == BIRTH:
            out[e + 1, k] += 1
        else:
            out[e + 1, k] -= 1
    return out


@kernel
def path_integrals(m0, times, kinds, ks, dests, t_end, ell, bc, br, dc, dr):
    """Exact time integrals of the piecewise-constant count path on ``[0, t_end]``.

    Returns ``(m(t_end), int m, int ell*b(m/ell), int ell*d(m/ell), jumps)``,
    all per node; ``jumps[k]`` counts the events that changed ``m_k``.
    Each node's integrals are closed only when that node changes, so the cost
    is O(1) per event.
    """
    n = m0.shape[0]
    m = m0.copy()
    last = np.zeros(n)
    int_m = np.zeros(n)
    int_b = np.zeros(n)
    int_d = np.zeros(n)
    jumps = np.zeros(n, dtype=np.int64)
    for e in range(times.shape[0]):
        te = times[e]
        if te > t_end:
            break
        for slot in range(2):
            x = ks[e] if slot == 0 else dests[e]
            if x < 0:
                continue
            dt = te - last[x]
            mx = m[x]
            int_m[x] += mx * dt
            int_b[x] += dt * ell * rate_eval(bc, br, mx / ell)
            int_d[x] += dt * ell * rate_eval(dc, dr, mx / ell)
            last[x] = te
            jumps[x] += 1
        k = ks[e]
        kind = kinds[e]
        if kind == MIGRATE:
            m[k] -= 1
            m[dests[e]] += 1
        elif kind == BIRTH:
            m[k] += 1
        else:
            m[k] -= 1
    for x in range(n):
        dt = t_end - last[x]
        mx = m[x]
        int_m[x] += mx * dt
        int_b[x] += dt * ell * rate_eval(bc, br, mx / ell)
        int_d[x] += dt * ell * rate_eval(dc, dr, mx / ell)
    return m, int_m, int_b, int_d, jumps
