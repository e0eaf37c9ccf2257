"""Hot loops: exponent-grid minimization and outage counting.

Each kernel exists twice.  The ``*_nb`` variants are plain loops compiled
with numba; the ``*_np`` variants are vectorized numpy built on
``channel_model.surrogate_total``.  ``select`` picks one according to the
backend flag.
"""
import numpy as np

from ._backend import njit, numba_enabled
from .channel_model import surrogate_total

# family codes shared by both backends
FAMILIES = {
    ("nsdf", "finite"): 0,
    ("nsdf", "infinite"): 1,
    ("osdf", "finite"): 2,
    ("osdf", "infinite"): 3,
    ("naf", "infinite"): 4,
    ("naf", "finite"): 5,
    ("oaf", "infinite"): 6,
    ("oaf", "finite"): 7,
}
CODES = {v: k for k, v in FAMILIES.items()}
SLACK = 1e-12


@njit
def _pos(x):
    return x if x > 0.0 else 0.0


@njit
def _total_nb(fam, p, q, a0, relay, nrel, amin, bmin):
    """Surrogate total for one point; ``relay[:nrel]`` are DF relay exponents."""
    l = p + q
    if fam <= 3:
        if fam == 0 or fam == 2:
            t = (l if fam == 0 else p) * _pos(1.0 - a0)
            for i in range(nrel):
                t += q * _pos(1.0 - relay[i])
            return t
        mn = np.inf
        for i in range(nrel):
            if relay[i] < mn:
                mn = relay[i]
        if fam == 1:
            if a0 < mn:
                mn = a0
            return p * _pos(1.0 - a0) + q * _pos(1.0 - mn)
        if nrel == 0:
            return p * _pos(1.0 - a0)
        return p * _pos(1.0 - a0) + q * _pos(1.0 - mn)
    if fam == 5 or fam == 7:
        first = p if fam == 5 else p - q
        x = 1.0 - a0
        if 1.0 - bmin > x:
            x = 1.0 - bmin
        return first * _pos(1.0 - a0) + q * _pos(x)
    x = -amin
    if 1.0 - amin - a0 > x:
        x = 1.0 - amin - a0
    if 1.0 - bmin > x:
        x = 1.0 - bmin
    y = 2.0 * (1.0 - a0) if fam == 4 else 1.0 - a0
    if y > x:
        x = y
    return (p - q) * _pos(1.0 - a0) + q * _pos(x)


# --- reduced two-variable grid --------------------------------------------------------------


@njit
def grid_min_2d_nb(fam, p, q, m, w, lr, step, hi):
    """Minimize a0 + s over the grid with s = w * x; x is the common relay exponent (DF) or beta (AF)."""
    n0 = int(np.floor(hi / step + 1e-9)) + 1
    n1 = int(np.floor(hi * w / step + 1e-9)) + 1 if w > 0 else 1
    best = np.inf
    b0 = -1.0
    b1 = -1.0
    relay = np.empty(max(m, 1))
    for i in range(n0):
        a0 = i * step
        if a0 >= best:
            break
        for j in range(n1):
            s = j * step
            if a0 + s >= best:
                break
            x = s / w if w > 0 else 0.0
            for k in range(m):
                relay[k] = x
            if fam <= 3:
                t = _total_nb(fam, p, q, a0, relay, m, 0.0, 0.0)
            else:
                t = _total_nb(fam, p, q, a0, relay, 0, 0.0, x)
            if t <= lr + SLACK:
                best = a0 + s
                b0 = a0
                b1 = s
    return best, b0, b1


def grid_min_2d_np(fam, p, q, m, w, lr, step, hi):
    proto, mode = CODES[fam]
    a0 = np.arange(int(np.floor(hi / step + 1e-9)) + 1) * step
    s = np.arange(int(np.floor(hi * w / step + 1e-9)) + 1) * step if w > 0 else np.zeros(1)
    A0, S = np.meshgrid(a0, s, indexing="ij")
    X = S / w if w > 0 else np.zeros_like(S)
    if fam <= 3:
        rel = np.repeat(X[..., None], m, axis=-1)
        tot = surrogate_total(proto, mode, p, q, A0, relay_alpha=rel)
    else:
        tot = surrogate_total(proto, mode, p, q, A0, alpha_min=np.zeros_like(A0), beta_min=X)
    obj = np.where(tot <= lr + SLACK, A0 + S, np.inf)
    k = np.argmin(obj)  # first minimizer in row-major order, same as the loop
    i, j = np.unravel_index(k, obj.shape)
    if not np.isfinite(obj[i, j]):
        return np.inf, -1.0, -1.0
    return float(obj[i, j]), float(a0[i]), float(s[j])


# --- full-dimensional DF grid ---------------------------------------------------------------


@njit
def grid_min_full_df_nb(fam, p, q, m, lr, step, hi):
    n = int(np.floor(hi / step + 1e-9)) + 1
    k = m + 1
    idx = np.zeros(k, dtype=np.int64)
    relay = np.empty(max(m, 1))
    best = np.inf
    arg = np.full(k, -1.0)
    while True:
        obj = 0.0
        for d in range(k):
            obj += idx[d] * step
        if obj >= best:
            # larger last-axis values only add to the objective
            idx[k - 1] = n - 1
        else:
            for d in range(m):
                relay[d] = idx[d + 1] * step
            t = _total_nb(fam, p, q, idx[0] * step, relay, m, 0.0, 0.0)
            if t <= lr + SLACK:
                best = obj
                for d in range(k):
                    arg[d] = idx[d] * step
        # odometer increment, last axis fastest
        d = k - 1
        while d >= 0:
            idx[d] += 1
            if idx[d] < n:
                break
            idx[d] = 0
            d -= 1
        if d < 0:
            break
    return best, arg


def grid_min_full_df_np(fam, p, q, m, lr, step, hi):
    proto, mode = CODES[fam]
    g = np.arange(int(np.floor(hi / step + 1e-9)) + 1) * step
    best, arg = np.inf, np.full(m + 1, -1.0)
    rel_axes = np.meshgrid(*([g] * m), indexing="ij") if m else []
    rel = np.stack([a.ravel() for a in rel_axes], axis=-1) if m else np.zeros((1, 0))
    rsum = rel.sum(axis=-1)
    for a0 in g:
        tot = surrogate_total(proto, mode, p, q, np.full(len(rel), a0), relay_alpha=rel)
        obj = np.where(tot <= lr + SLACK, a0 + rsum, np.inf)
        k = int(np.argmin(obj))
        if obj[k] < best:
            best = float(obj[k])
            arg = np.concatenate([[a0], rel[k]])
    return best, arg


# --- full three-variable AF grid (alpha kept) ---------------------------------------------


@njit
def grid_min_3d_af_nb(fam, p, q, M, lr, step, hi):
    n0 = int(np.floor(hi / step + 1e-9)) + 1
    n1 = int(np.floor(hi * M / step + 1e-9)) + 1
    best = np.inf
    arg = np.full(3, -1.0)
    dummy = np.empty(1)
    for i in range(n0):
        a0 = i * step
        for j in range(n1):
            sa = j * step
            if a0 + sa >= best:
                break
            for k in range(n1):
                sb = k * step
                if a0 + sa + sb >= best:
                    break
                t = _total_nb(fam, p, q, a0, dummy, 0, sa / M, sb / M)
                if t <= lr + SLACK:
                    best = a0 + sa + sb
                    arg[0] = a0
                    arg[1] = sa
                    arg[2] = sb
    return best, arg


def grid_min_3d_af_np(fam, p, q, M, lr, step, hi):
    proto, mode = CODES[fam]
    a0 = np.arange(int(np.floor(hi / step + 1e-9)) + 1) * step
    s = np.arange(int(np.floor(hi * M / step + 1e-9)) + 1) * step
    SA, SB = np.meshgrid(s, s, indexing="ij")
    best, arg = np.inf, np.full(3, -1.0)
    for x in a0:
        tot = surrogate_total(proto, mode, p, q, np.full(SA.shape, x), alpha_min=SA / M, beta_min=SB / M)
        obj = np.where(tot <= lr + SLACK, x + SA + SB, np.inf)
        k = np.unravel_index(np.argmin(obj), obj.shape)
        if obj[k] < best:
            best = float(obj[k])
            arg = np.array([x, SA[k], SB[k]])
    return best, arg


# --- Monte Carlo outage counting -------------------------------------------------------------


@njit
def count_outage_nb(fam, p, q, lr, a0, ar, br, ok, weight):
    """Hits and weighted first/second moments of the outage indicator.

    ``ar``/``br`` are (n, M) relay exponents, ``ok`` marks decoding relays (DF only).
    """
    n, M = ar.shape
    hits = 0
    s1 = 0.0
    s2 = 0.0
    relay = np.empty(max(M, 1))
    for t in range(n):
        if fam <= 3:
            c = 0
            for k in range(M):
                if ok[t, k]:
                    relay[c] = ar[t, k]
                    c += 1
            tot = _total_nb(fam, p, q, a0[t], relay, c, 0.0, 0.0)
        else:
            amin = np.inf
            bmin = np.inf
            for k in range(M):
                if ar[t, k] < amin:
                    amin = ar[t, k]
                if br[t, k] < bmin:
                    bmin = br[t, k]
            tot = _total_nb(fam, p, q, a0[t], relay, 0, amin, bmin)
        if tot < lr:
            hits += 1
            s1 += weight[t]
            s2 += weight[t] * weight[t]
    return hits, s1, s2


def count_outage_np(fam, p, q, lr, a0, ar, br, ok, weight):
    proto, mode = CODES[fam]
    if fam <= 3:
        rel = np.where(ok, ar, np.inf)
        tot = surrogate_total(proto, mode, p, q, a0, relay_alpha=rel)
    else:
        tot = surrogate_total(proto, mode, p, q, a0, alpha_min=ar.min(axis=1), beta_min=br.min(axis=1))
    hit = tot < lr
    w = weight[hit]
    return int(hit.sum()), float(w.sum()), float(np.dot(w, w))


_TABLE = {
    "grid_min_2d": (grid_min_2d_nb, grid_min_2d_np),
    "grid_min_full_df": (grid_min_full_df_nb, grid_min_full_df_np),
    "grid_min_3d_af": (grid_min_3d_af_nb, grid_min_3d_af_np),
    "count_outage": (count_outage_nb, count_outage_np),
}


def select(name, backend=None):
    nb, npy = _TABLE[name]
    if backend is None:
        backend = "numba" if numba_enabled() else "numpy"
    return nb if backend == "numba" else npy
