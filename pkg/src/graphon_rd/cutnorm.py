"""Cut norms of signed step kernels.

For a step kernel with cell values ``D`` on the ``n``-cell partition, three
quantities are computed:

``st``
    ``max_{S,T} |sum_{i in S, j in T} D_ij| / n^2``
``s_complement``
    ``max_S sum_{i in S, j not in S} D_ij / n^2``
``bilinear``
    ``max_{phi, psi in {-1,1}^n} phi^T D psi / n^2``; for step kernels this is
    the supremum over measurable test functions with values in [-1, 1].

The three are equivalent norms but differ by constants; none is converted
into another here. Exact values come from exhaustive enumeration, which is
exponential in ``n``; :func:`cut_norm_heuristic` gives a certified lower bound
on the bilinear form for any ``n``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _accel
from ._accel import kernel
from .errors import BruteForceLimitExceededError

VARIANTS = ("st", "s_complement", "bilinear")
DEFAULT_LIMITS = {"st": 16, "s_complement": 20, "bilinear": 20}


@dataclass(frozen=True)
class CutNormResult:
    value: float
    variant: str
    exact: bool
    # st: (S, T); s_complement: (S,); bilinear / heuristic: (phi, psi) sign vectors
    certificate: tuple


# --- exhaustive kernels (Gray-code order, O(n) work per subset) -------------

@kernel
def _trailing_zeros(g):
    k = 0
    while (g & 1) == 0:
        g >>= 1
        k += 1
    return k


@kernel
def _st_gray(d):
    n = d.shape[0]
    c = np.zeros(n)
    in_s = np.zeros(n, dtype=np.bool_)
    best = 0.0
    best_mask = 0
    best_positive = True
    mask = 0
    for g in range(1, 1 << n):
        k = _trailing_zeros(g)
        if in_s[k]:
            in_s[k] = False
            for j in range(n):
                c[j] -= d[k, j]
        else:
            in_s[k] = True
            for j in range(n):
                c[j] += d[k, j]
        mask ^= 1 << k
        pos = 0.0
        neg = 0.0
        for j in range(n):
            if c[j] > 0.0:
                pos += c[j]
            else:
                neg -= c[j]
        if pos > best:
            best = pos
            best_mask = mask
            best_positive = True
        if neg > best:
            best = neg
            best_mask = mask
            best_positive = False
    return best, best_mask, best_positive


@kernel
def _s_complement_gray(d):
    n = d.shape[0]
    rowsum = np.zeros(n)
    for i in range(n):
        for j in range(n):
            rowsum[i] += d[i, j]
    col_s = np.zeros(n)  # col_s[j] = sum_{i in S} d[i, j]
    row_s = np.zeros(n)  # row_s[i] = sum_{j in S} d[i, j]
    in_s = np.zeros(n, dtype=np.bool_)
    a = 0.0  # sum of row sums over S
    q = 0.0  # sum over S x S
    best = 0.0
    best_mask = 0
    mask = 0
    for g in range(1, 1 << n):
        k = _trailing_zeros(g)
        if in_s[k]:
            in_s[k] = False
            for j in range(n):
                col_s[j] -= d[k, j]
                row_s[j] -= d[j, k]
            q -= row_s[k] + col_s[k] + d[k, k]
            a -= rowsum[k]
        else:
            q += row_s[k] + col_s[k] + d[k, k]
            for j in range(n):
                col_s[j] += d[k, j]
                row_s[j] += d[j, k]
            in_s[k] = True
            a += rowsum[k]
        mask ^= 1 << k
        val = a - q
        if val > best:
            best = val
            best_mask = mask
    return best, best_mask


@kernel
def _bilinear_gray(d):
    # psi[0] is fixed to +1: (phi, psi) -> (-phi, -psi) leaves the form unchanged
    n = d.shape[0]
    psi = np.ones(n)
    v = np.zeros(n)
    for i in range(n):
        for j in range(n):
            v[i] += d[i, j]
    best = 0.0
    for i in range(n):
        best += abs(v[i])
    best_mask = 0
    mask = 0
    for g in range(1, 1 << (n - 1)):
        k = _trailing_zeros(g) + 1
        s = psi[k]
        for i in range(n):
            v[i] -= 2.0 * s * d[i, k]
        psi[k] = -s
        mask ^= 1 << k
        tot = 0.0
        for i in range(n):
            tot += abs(v[i])
        if tot > best:
            best = tot
            best_mask = mask
    return best, best_mask


# --- numpy fallback (block-vectorised over subsets, plain binary order) -----

_BLOCK = 1 << 14


def _subset_block(lo, hi, n):
    g = np.arange(lo, hi, dtype=np.int64)
    return ((g[:, None] >> np.arange(n)[None, :]) & 1).astype(np.float64), g


def _st_numpy(d):
    n = d.shape[0]
    best, best_mask, best_pos = 0.0, 0, True
    for lo in range(1, 1 << n, _BLOCK):
        b, g = _subset_block(lo, min(lo + _BLOCK, 1 << n), n)
        c = b @ d
        pos = np.clip(c, 0, None).sum(axis=1)
        neg = -np.clip(c, None, 0).sum(axis=1)
        for vals, positive in ((pos, True), (neg, False)):
            i = int(np.argmax(vals))
            if vals[i] > best:
                best, best_mask, best_pos = float(vals[i]), int(g[i]), positive
    return best, best_mask, best_pos


def _s_complement_numpy(d):
    n = d.shape[0]
    best, best_mask = 0.0, 0
    for lo in range(1, 1 << n, _BLOCK):
        b, g = _subset_block(lo, min(lo + _BLOCK, 1 << n), n)
        vals = np.einsum("si,ij,sj->s", b, d, 1.0 - b)
        i = int(np.argmax(vals))
        if vals[i] > best:
            best, best_mask = float(vals[i]), int(g[i])
    return best, best_mask


def _bilinear_numpy(d):
    n = d.shape[0]
    best, best_mask = float(np.abs(d.sum(axis=1)).sum()), 0
    for lo in range(1, 1 << (n - 1), _BLOCK):
        b, g = _subset_block(lo, min(lo + _BLOCK, 1 << (n - 1)), n - 1)
        psi = np.ones((b.shape[0], n))
        psi[:, 1:] = 1.0 - 2.0 * b
        vals = np.abs(psi @ d.T).sum(axis=1)
        i = int(np.argmax(vals))
        if vals[i] > best:
            best, best_mask = float(vals[i]), int(g[i]) << 1
    return best, best_mask


def _mask_to_set(mask, n):
    return tuple(i for i in range(n) if (mask >> i) & 1)


def _signs(x):
    return np.where(x >= 0, 1.0, -1.0)


def cut_norm_exact(d, variant: str = "st", limit: int | None = None,
                   backend: str | None = None) -> CutNormResult:
    """Exact cut norm of the step kernel with cell values ``d``.

    ``backend`` picks ``"numba"`` or ``"numpy"`` explicitly; by default the
    compiled enumeration is used when numba is enabled.
    """
    d = np.ascontiguousarray(d, dtype=np.float64)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {d.shape}")
    if variant not in VARIANTS:
        raise ValueError(f"unknown cut-norm variant {variant!r}; choose from {VARIANTS}")
    n = d.shape[0]
    limit = DEFAULT_LIMITS[variant] if limit is None else limit
    if n > limit:
        raise BruteForceLimitExceededError(
            f"n={n} exceeds the brute-force limit {limit} for variant {variant!r}")
    if n > 62:
        raise BruteForceLimitExceededError("subset masks are limited to 62 cells")
    backend = backend or ("numba" if _accel.USE_NUMBA else "numpy")
    compiled = backend == "numba"
    scale = 1.0 / (n * n)

    if variant == "st":
        best, mask, positive = (_st_gray if compiled else _st_numpy)(d)
        s = _mask_to_set(mask, n)
        c = d[list(s)].sum(axis=0) if s else np.zeros(n)
        t = tuple(int(j) for j in np.flatnonzero(c > 0 if positive else c < 0)) if s else ()
        return CutNormResult(best * scale, variant, True, (s, t))
    if variant == "s_complement":
        best, mask = (_s_complement_gray if compiled else _s_complement_numpy)(d)
        return CutNormResult(best * scale, variant, True, (_mask_to_set(mask, n),))
    best, mask = (_bilinear_gray if compiled else _bilinear_numpy)(d)
    psi = np.array([-1.0 if (mask >> i) & 1 else 1.0 for i in range(n)])
    phi = _signs(d @ psi)
    return CutNormResult(best * scale, variant, True, (phi, psi))


def bilinear_value(d, phi, psi) -> float:
    d = np.asarray(d, dtype=np.float64)
    n = d.shape[0]
    return float(np.asarray(phi) @ d @ np.asarray(psi)) / (n * n)


def cut_norm_heuristic(d, restarts: int = 32, seed=None, max_iter: int = 200) -> CutNormResult:
    """Lower bound on the bilinear cut norm by alternating sign maximisation.

    With ``psi`` fixed the best ``phi`` is ``sign(D psi)`` and vice versa, so
    each half-step cannot decrease ``phi^T D psi``. The first start is the sign
    pattern of the heaviest row; the remaining ``restarts - 1`` are random.
    The returned value is evaluated on the returned certificate, so it is
    always attained and never exceeds the true optimum.
    """
    d = np.asarray(d, dtype=np.float64)
    n = d.shape[0]
    if restarts < 1:
        raise ValueError("restarts must be at least 1")
    rng = np.random.default_rng(seed)
    heavy = int(np.argmax(np.abs(d).sum(axis=1)))
    psi = np.empty((restarts, n))
    psi[0] = _signs(d[heavy])
    if restarts > 1:
        psi[1:] = np.where(rng.random((restarts - 1, n)) < 0.5, -1.0, 1.0)
    phi = _signs(psi @ d.T)
    for _ in range(max_iter):
        new_psi = _signs(phi @ d)
        new_phi = _signs(new_psi @ d.T)
        if np.array_equal(new_psi, psi) and np.array_equal(new_phi, phi):
            break
        psi, phi = new_psi, new_phi
    vals = np.einsum("ri,ij,rj->r", phi, d, psi)
    r = int(np.argmax(vals))
    value = max(float(vals[r]), 0.0) / (n * n)
    if vals[r] <= 0:
        # zero kernel: any pair attains 0
        return CutNormResult(0.0, "bilinear", False, (np.ones(n), np.ones(n)))
    return CutNormResult(value, "bilinear", False, (phi[r].copy(), psi[r].copy()))
