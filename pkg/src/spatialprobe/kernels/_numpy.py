"""Vectorized numpy versions of the batch kernels (used when numba is disabled)."""

import numpy as np


def _count(m):
    return m.sum(axis=1)


def _mean(v, m):
    n = m.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(m, v, 0.0).sum(axis=1) / n


def _distances(x, y):
    dx = x[:, :, None] - x[:, None, :]
    dy = y[:, :, None] - y[:, None, :]
    return np.sqrt(dx * dx + dy * dy)


def mean_pairwise_batch(x, y, m, dist=None):
    if dist is None:
        dist = _distances(x, y)
    k = x.shape[1]
    triu = np.triu(np.ones((k, k), dtype=bool), k=1)
    pairs = m[:, :, None] & m[:, None, :] & triu
    n = pairs.sum(axis=(1, 2))
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(pairs, dist, 0.0).sum(axis=(1, 2)) / n


def _extreme(v, m, want_max):
    fill = -np.inf if want_max else np.inf
    masked = np.where(m, v, fill)
    return masked.max(axis=1) if want_max else masked.min(axis=1)


def _abs_slope(x, y, m):
    mx = _mean(x, m)[:, None]
    my = _mean(y, m)[:, None]
    dx = np.where(m, x - mx, 0.0)
    dy = np.where(m, y - my, 0.0)
    sxx = (dx * dx).sum(axis=1)
    sxy = (dx * dy).sum(axis=1)
    flat = (_extreme(x, m, True) == _extreme(x, m, False)) | (sxx == 0.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(flat, np.inf, np.abs(sxy / np.where(sxx == 0.0, 1.0, sxx)))


def evaluate_batch(kind, x, y, color, size, s, o, no_object, slope_low, slope_high,
                   center_radius, color_range, size_range):
    """Return (satisfy, valid) boolean arrays for one relation kind over N contexts."""
    a = s | o
    ns, nobj, na = _count(s), _count(o), _count(a)
    nob = no_object

    if kind <= 3:
        v = x if kind <= 1 else y
        greater = kind in (1, 2)
        ms = _mean(v, s)
        ref = np.where(nob, 0.0, _mean(v, o))
        valid = np.where(nob, ns > 0, (ns > 0) & (nobj > 0))
        with np.errstate(invalid="ignore"):
            cond = ms > ref if greater else ms < ref
        return valid & cond, valid

    if kind <= 6:
        valid = na >= 2
        m = _abs_slope(x, y, a)
        if kind == 4:
            cond = m < slope_low
        elif kind == 5:
            cond = m > slope_high
        else:
            cond = (slope_low <= m) & (m <= slope_high)
        return valid & cond, valid

    if kind <= 9:
        dist = _distances(x, y)
        every = np.ones_like(s)
        mean_all = mean_pairwise_batch(x, y, every, dist)
        with np.errstate(invalid="ignore"):
            if kind == 7:
                valid = na >= 2
                cond = mean_pairwise_batch(x, y, a, dist) < mean_all
            elif kind == 8:
                pool = np.where(nob[:, None], s, a)
                npool = _count(pool)
                valid = (ns > 0) & (nob | (nobj > 0)) & (npool >= 2)
                cond = mean_pairwise_batch(x, y, pool, dist) > mean_all
            else:
                valid = ns > 0
                cross = s[:, :, None] & ~s[:, None, :]
                nearest = np.where(cross, dist, np.inf).min(axis=(1, 2))
                cond = (nearest > mean_all) & (ns < s.shape[1])
        return valid & cond, valid

    if kind <= 11:
        interior = kind == 10
        far = np.sqrt(x * x + y * y) > center_radius
        n_far = (far & s).sum(axis=1)
        x0, x1 = _extreme(x, o, False)[:, None], _extreme(x, o, True)[:, None]
        y0, y1 = _extreme(y, o, False)[:, None], _extreme(y, o, True)[:, None]
        out_x = (x < x0) | (x1 < x)
        out_y = (y < y0) | (y1 < y)
        n_both = (out_x & out_y & s).sum(axis=1)
        n_any = ((out_x | out_y) & s).sum(axis=1)
        if interior:
            cond = np.where(nob, n_far == 0, n_both == 0)
        else:
            cond = np.where(nob, n_far == ns, n_any == ns)
        valid = np.where(nob, ns > 0, (ns > 0) & (nobj >= 2))
        return valid & cond, valid

    if kind <= 17:
        v, spread_max, op = color, color_range, kind - 12
    else:
        v, spread_max, op = size, size_range, (2, 3, 0, 1, 4, 5)[kind - 18]
    if op >= 4:
        valid = na >= 2
        close = _extreme(v, a, True) - _extreme(v, a, False) < spread_max
        cond = close if op == 4 else ~close
        return valid & cond, valid
    if op in (0, 2):
        valid = (ns > 0) & (nobj > 0)
        ms, mo = _mean(v, s), _mean(v, o)
        with np.errstate(invalid="ignore"):
            cond = ms > mo if op == 0 else ms < mo
        return valid & cond, valid
    rest = np.where(nob[:, None], ~s, o & ~s)
    valid = (ns > 0) & (_count(rest) > 0)
    if op == 1:
        cond = _extreme(v, s, False) > _extreme(v, rest, True)
    else:
        cond = _extreme(v, s, True) < _extreme(v, rest, False)
    return valid & cond, valid
