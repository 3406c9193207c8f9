"""Reference implementations of the hot kernels (numpy / plain Python).

``_core.pyx`` implements the same functions with identical semantics; the
test-suite runs both against each other.
"""
import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

TIE_TOL = 1e-12
# Period pick: the shortest correlation peak reaching this fraction of the
# maximum. Avoids octave jumps between near-equal multiples of the period.
PERIOD_PICK_RATIO = 0.95


def nccf_track(x, sub_len, hop, min_lag, max_lag):
    """Per-sub-frame normalised cross-correlation pitch track.

    Sub-frame ``j`` covers ``x[j*hop : j*hop + sub_len]`` and is correlated
    against the same-length segment ``tau`` samples later, for every lag in
    ``[min_lag, max_lag]``. Sub-frames whose furthest lag would run past the
    end of ``x`` are not evaluated.

    The period estimate is the shortest lag that is a local correlation
    peak (or the global maximum) and reaches ``PERIOD_PICK_RATIO`` of the
    sub-frame maximum.

    Returns ``(best_lag, r_max, rms, peak)`` arrays, one entry per sub-frame.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    n = x.shape[0]
    span = sub_len + max_lag
    count = 0 if n < span else (n - span) // hop + 1
    best = np.zeros(count, dtype=np.int64)
    rmax = np.zeros(count)
    rms = np.zeros(count)
    peak = np.zeros(count)
    for j in range(count):
        s = j * hop
        ref = x[s:s + sub_len]
        e0 = float(np.dot(ref, ref))
        rms[j] = np.sqrt(e0 / sub_len)
        peak[j] = np.max(np.abs(ref))
        lagged = sliding_window_view(x[s + min_lag:s + span], sub_len)
        c = lagged @ ref
        e = np.einsum("ij,ij->i", lagged, lagged)
        den = e0 * e
        r = np.zeros_like(c)
        ok = den > 0
        r[ok] = c[ok] / np.sqrt(den[ok])
        top = float(np.max(r))
        k = 0
        if top > 0:
            peak_like = r == top
            peak_like[1:-1] |= (r[1:-1] >= r[:-2]) & (r[1:-1] >= r[2:])
            k = int(np.argmax(peak_like & (r >= PERIOD_PICK_RATIO * top)))
        best[j] = min_lag + k
        rmax[j] = top
    return best, rmax, rms, peak


def dwt_step(x, lo, hi):
    """One periodised analysis step: ``out[k] = sum_j f[j] * x[(2k + j) % n]``."""
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    idx = (2 * np.arange(n // 2)[:, None] + np.arange(len(lo))[None, :]) % n
    seg = x[idx]
    return seg @ np.asarray(lo, dtype=np.float64), seg @ np.asarray(hi, dtype=np.float64)


def knapsack_bb(benefit, weight, rank, capacity):
    """Exact 0/1 knapsack by depth-first branch and bound.

    Items must arrive sorted by benefit density, best first. Among optimal
    subsets the one with lower total weight wins, then the one that
    contains the lowest ``rank`` where the two differ.

    Returns a ``uint8`` inclusion mask aligned with the input order.
    """
    b = [float(v) for v in benefit]
    w = [float(v) for v in weight]
    r = [int(v) for v in rank]
    n = len(b)
    cap = float(capacity)
    take = [0] * n
    best = {"b": 0.0, "w": 0.0, "mask": [0] * n}

    def bound(d, cur_b, room):
        for i in range(d, n):
            if w[i] <= room:
                room -= w[i]
                cur_b += b[i]
            else:
                return cur_b + b[i] * room / w[i]
        return cur_b

    def earlier(mask, other):
        lo_rank, winner = None, False
        for i in range(n):
            if mask[i] != other[i] and (lo_rank is None or r[i] < lo_rank):
                lo_rank, winner = r[i], bool(mask[i])
        return winner

    def consider(cur_b, cur_w):
        bb, bw = best["b"], best["w"]
        if cur_b > bb + TIE_TOL:
            better = True
        elif cur_b < bb - TIE_TOL:
            better = False
        elif cur_w < bw - TIE_TOL:
            better = True
        elif cur_w > bw + TIE_TOL:
            better = False
        else:
            better = earlier(take, best["mask"])
        if better:
            best["b"], best["w"], best["mask"] = cur_b, cur_w, list(take)

    def visit(d, cur_b, cur_w):
        if d == n:
            consider(cur_b, cur_w)
            return
        if bound(d, cur_b, cap - cur_w) < best["b"] - TIE_TOL:
            return
        if cur_w + w[d] <= cap:
            take[d] = 1
            visit(d + 1, cur_b + b[d], cur_w + w[d])
            take[d] = 0
        visit(d + 1, cur_b, cur_w)

    visit(0, 0.0, 0.0)
    return np.array(best["mask"], dtype=np.uint8)
