# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the kernels in ``_pure.py`` (same contracts)."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs

cnp.import_array()

cdef double TIE_TOL = 1e-12
cdef double PERIOD_PICK_RATIO = 0.95


def nccf_track(x, Py_ssize_t sub_len, Py_ssize_t hop, Py_ssize_t min_lag, Py_ssize_t max_lag):
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0]
    cdef Py_ssize_t span = sub_len + max_lag
    cdef Py_ssize_t count = 0 if n < span else (n - span) // hop + 1
    best_a = np.zeros(count, dtype=np.int64)
    rmax_a = np.zeros(count)
    rms_a = np.zeros(count)
    peak_a = np.zeros(count)
    cdef cnp.int64_t[::1] best = best_a
    cdef double[::1] rmax = rmax_a
    cdef double[::1] rms = rms_a
    cdef double[::1] peak = peak_a
    cdef Py_ssize_t j, i, s, tau, best_tau, last
    cdef double e0, c, e, v, den, r, top, pk
    corr_a = np.zeros(max_lag - min_lag + 1)
    cdef double[::1] corr = corr_a
    with nogil:
        for j in range(count):
            s = j * hop
            e0 = 0.0
            pk = 0.0
            for i in range(sub_len):
                v = xv[s + i]
                e0 += v * v
                if fabs(v) > pk:
                    pk = fabs(v)
            rms[j] = sqrt(e0 / sub_len)
            peak[j] = pk
            top = -2.0
            for tau in range(min_lag, max_lag + 1):
                c = 0.0
                e = 0.0
                for i in range(sub_len):
                    v = xv[s + tau + i]
                    c += xv[s + i] * v
                    e += v * v
                den = e0 * e
                r = c / sqrt(den) if den > 0 else 0.0
                corr[tau - min_lag] = r
                if r > top:
                    top = r
            best_tau = min_lag
            if top > 0:
                last = max_lag - min_lag
                for i in range(last + 1):
                    r = corr[i]
                    if r < PERIOD_PICK_RATIO * top:
                        continue
                    if r == top or (0 < i < last and r >= corr[i - 1] and r >= corr[i + 1]):
                        best_tau = min_lag + i
                        break
            best[j] = best_tau
            rmax[j] = top
    return best_a, rmax_a, rms_a, peak_a


def dwt_step(x, lo, hi):
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef const double[::1] lv = np.ascontiguousarray(lo, dtype=np.float64)
    cdef const double[::1] hv = np.ascontiguousarray(hi, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0]
    cdef Py_ssize_t half = n // 2
    cdef Py_ssize_t taps = lv.shape[0]
    a_arr = np.zeros(half)
    d_arr = np.zeros(half)
    cdef double[::1] a = a_arr
    cdef double[::1] d = d_arr
    cdef Py_ssize_t k, j, idx
    cdef double sa, sd, v
    with nogil:
        for k in range(half):
            sa = 0.0
            sd = 0.0
            for j in range(taps):
                idx = (2 * k + j) % n
                v = xv[idx]
                sa += lv[j] * v
                sd += hv[j] * v
            a[k] = sa
            d[k] = sd
    return a_arr, d_arr


cdef class _Search:
    cdef double[::1] b
    cdef double[::1] w
    cdef cnp.int64_t[::1] r
    cdef unsigned char[::1] take
    cdef unsigned char[::1] best_mask
    cdef Py_ssize_t n
    cdef double cap
    cdef double best_b
    cdef double best_w

    def __init__(self, b, w, r, double cap):
        self.b = b
        self.w = w
        self.r = r
        self.n = b.shape[0]
        self.cap = cap
        self.take = np.zeros(self.n, dtype=np.uint8)
        self.best_mask = np.zeros(self.n, dtype=np.uint8)
        self.best_b = 0.0
        self.best_w = 0.0

    cdef double bound(self, Py_ssize_t d, double cur_b, double room) nogil:
        cdef Py_ssize_t i
        for i in range(d, self.n):
            if self.w[i] <= room:
                room -= self.w[i]
                cur_b += self.b[i]
            else:
                return cur_b + self.b[i] * room / self.w[i]
        return cur_b

    cdef bint earlier(self) nogil:
        cdef Py_ssize_t i
        cdef cnp.int64_t lo_rank = -1
        cdef bint winner = False
        for i in range(self.n):
            if self.take[i] != self.best_mask[i] and (lo_rank < 0 or self.r[i] < lo_rank):
                lo_rank = self.r[i]
                winner = self.take[i] != 0
        return winner

    cdef void consider(self, double cur_b, double cur_w) nogil:
        cdef bint better
        cdef Py_ssize_t i
        if cur_b > self.best_b + TIE_TOL:
            better = True
        elif cur_b < self.best_b - TIE_TOL:
            better = False
        elif cur_w < self.best_w - TIE_TOL:
            better = True
        elif cur_w > self.best_w + TIE_TOL:
            better = False
        else:
            better = self.earlier()
        if better:
            self.best_b = cur_b
            self.best_w = cur_w
            for i in range(self.n):
                self.best_mask[i] = self.take[i]

    cdef void visit(self, Py_ssize_t d, double cur_b, double cur_w) nogil:
        if d == self.n:
            self.consider(cur_b, cur_w)
            return
        if self.bound(d, cur_b, self.cap - cur_w) < self.best_b - TIE_TOL:
            return
        if cur_w + self.w[d] <= self.cap:
            self.take[d] = 1
            self.visit(d + 1, cur_b + self.b[d], cur_w + self.w[d])
            self.take[d] = 0
        self.visit(d + 1, cur_b, cur_w)

    def run(self):
        with nogil:
            self.visit(0, 0.0, 0.0)
        return np.asarray(self.best_mask).copy()


def knapsack_bb(benefit, weight, rank, double capacity):
    b = np.ascontiguousarray(benefit, dtype=np.float64)
    w = np.ascontiguousarray(weight, dtype=np.float64)
    r = np.ascontiguousarray(rank, dtype=np.int64)
    if b.shape[0] == 0:
        return np.zeros(0, dtype=np.uint8)
    return _Search(b, w, r, capacity).run()
