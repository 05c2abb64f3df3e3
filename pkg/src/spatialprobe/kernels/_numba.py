"""Loop kernels compiled with numba. Kind codes follow ``CanonicalRelation`` order."""

import math

import numpy as np
from numba import njit

NUMBA_OPTS = {"cache": True, "nogil": True}


@njit(**NUMBA_OPTS)
def _count(m):
    n = 0
    for j in range(m.shape[0]):
        if m[j]:
            n += 1
    return n


@njit(**NUMBA_OPTS)
def _mean(v, m):
    s = 0.0
    n = 0
    for j in range(v.shape[0]):
        if m[j]:
            s += v[j]
            n += 1
    return s / n


@njit(**NUMBA_OPTS)
def _mean_pairwise(x, y, m):
    s = 0.0
    n = 0
    k = x.shape[0]
    for i in range(k):
        if not m[i]:
            continue
        for j in range(i + 1, k):
            if m[j]:
                dx = x[i] - x[j]
                dy = y[i] - y[j]
                s += math.sqrt(dx * dx + dy * dy)
                n += 1
    return s / n


@njit(**NUMBA_OPTS)
def _abs_slope(x, y, m):
    lo = np.inf
    hi = -np.inf
    for j in range(x.shape[0]):
        if m[j]:
            lo = min(lo, x[j])
            hi = max(hi, x[j])
    if lo == hi:
        return np.inf
    mx = _mean(x, m)
    my = _mean(y, m)
    sxx = 0.0
    sxy = 0.0
    for j in range(x.shape[0]):
        if m[j]:
            dx = x[j] - mx
            sxx += dx * dx
            sxy += dx * (y[j] - my)
    if sxx == 0.0:
        return np.inf
    return abs(sxy / sxx)


@njit(**NUMBA_OPTS)
def _extreme(v, m, want_max):
    best = -np.inf if want_max else np.inf
    for j in range(v.shape[0]):
        if m[j]:
            if want_max:
                best = max(best, v[j])
            else:
                best = min(best, v[j])
    return best


@njit(**NUMBA_OPTS)
def eval_one(kind, x, y, color, size, s, o, no_object, slope_low, slope_high,
             center_radius, color_range, size_range):
    """Return (satisfy, valid) for one context of seven entities."""
    k = x.shape[0]
    a = s | o
    ns = _count(s)
    nobj = _count(o)
    na = _count(a)

    if kind <= 3:  # left, right, above, below
        v = x if kind <= 1 else y
        greater = kind == 1 or kind == 2
        if no_object:
            if ns == 0:
                return False, False
            ref = 0.0
        else:
            if ns == 0 or nobj == 0:
                return False, False
            ref = _mean(v, o)
        ms = _mean(v, s)
        return (ms > ref) if greater else (ms < ref), True

    if kind <= 6:  # horizontal, vertical, diagonal
        if na < 2:
            return False, False
        m = _abs_slope(x, y, a)
        if kind == 4:
            return m < slope_low, True
        if kind == 5:
            return m > slope_high, True
        return slope_low <= m and m <= slope_high, True

    if kind <= 9:  # near, far, alone
        every = np.ones(k, dtype=np.bool_)
        if kind == 7:
            if na < 2:
                return False, False
            return _mean_pairwise(x, y, a) < _mean_pairwise(x, y, every), True
        if kind == 8:
            if ns == 0:
                return False, False
            if no_object:
                pool = s
                npool = ns
            elif nobj > 0:
                pool = a
                npool = na
            else:
                return False, False
            if npool < 2:
                return False, False
            return _mean_pairwise(x, y, pool) > _mean_pairwise(x, y, every), True
        if ns == 0:
            return False, False
        nearest = np.inf
        for i in range(k):
            if not s[i]:
                continue
            for j in range(k):
                if s[j]:
                    continue
                dx = x[i] - x[j]
                dy = y[i] - y[j]
                nearest = min(nearest, math.sqrt(dx * dx + dy * dy))
        if ns == k:
            return False, True
        return nearest > _mean_pairwise(x, y, every), True

    if kind <= 11:  # interior, exterior
        interior = kind == 10
        if no_object:
            if ns == 0:
                return False, False
            n_far = 0
            for j in range(k):
                if s[j] and math.sqrt(x[j] * x[j] + y[j] * y[j]) > center_radius:
                    n_far += 1
            return (n_far == 0) if interior else (n_far == ns), True
        if ns == 0 or nobj < 2:
            return False, False
        x0 = _extreme(x, o, False)
        x1 = _extreme(x, o, True)
        y0 = _extreme(y, o, False)
        y1 = _extreme(y, o, True)
        n_both = 0
        n_any = 0
        for j in range(k):
            if s[j]:
                out_x = x[j] < x0 or x1 < x[j]
                out_y = y[j] < y0 or y1 < y[j]
                if out_x and out_y:
                    n_both += 1
                if out_x or out_y:
                    n_any += 1
        return (n_both == 0) if interior else (n_any == ns), True

    # color 12..17, size 18..23: greater, greatest, less, least, same, different
    if kind <= 17:
        v = color
        spread_max = color_range
        op = kind - 12
    else:
        v = size
        spread_max = size_range
        op = kind - 18
    if kind >= 18:
        # size kinds are listed smaller, smallest, larger, largest: swap to match color
        op = (2, 3, 0, 1, 4, 5)[op]
    if op >= 4:
        if na < 2:
            return False, False
        close = _extreme(v, a, True) - _extreme(v, a, False) < spread_max
        return close if op == 4 else not close, True
    if op == 0 or op == 2:
        if ns == 0 or nobj == 0:
            return False, False
        ms = _mean(v, s)
        mo = _mean(v, o)
        return (ms > mo) if op == 0 else (ms < mo), True
    rest = (~s) if no_object else (o & ~s)
    if ns == 0 or _count(rest) == 0:
        return False, False
    if op == 1:
        return _extreme(v, s, False) > _extreme(v, rest, True), True
    return _extreme(v, s, True) < _extreme(v, rest, False), True


@njit(**NUMBA_OPTS)
def evaluate_batch(kind, x, y, color, size, s, o, no_object, slope_low, slope_high,
                   center_radius, color_range, size_range):
    n = x.shape[0]
    satisfy = np.zeros(n, dtype=np.bool_)
    valid = np.zeros(n, dtype=np.bool_)
    for i in range(n):
        sat, val = eval_one(kind, x[i], y[i], color[i], size[i], s[i], o[i], no_object[i],
                            slope_low, slope_high, center_radius, color_range, size_range)
        satisfy[i] = sat
        valid[i] = val
    return satisfy, valid


@njit(**NUMBA_OPTS)
def mean_pairwise_batch(x, y, m):
    n = x.shape[0]
    out = np.full(n, np.nan)
    for i in range(n):
        if _count(m[i]) >= 2:
            out[i] = _mean_pairwise(x[i], y[i], m[i])
    return out
