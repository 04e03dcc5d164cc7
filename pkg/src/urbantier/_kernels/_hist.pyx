# cython: boundscheck=False, wraparound=False, cdivision=True
"""Histogram accumulation kernel for tree growing.

Accumulates gradient/hessian/count statistics per (feature, bin) over a
row subset.  Rows are processed in index order so the floating-point sums
match the pure-Python backend bit for bit.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def build_histograms(const cnp.uint16_t[:, ::1] binned,
                     const double[::1] grad,
                     const double[::1] hess,
                     const cnp.int64_t[::1] rows,
                     int n_bins):
    cdef Py_ssize_t n_feat = binned.shape[1]
    cdef Py_ssize_t m = rows.shape[0]
    cdef Py_ssize_t i, f, r
    cdef int b

    hist_g = np.zeros((n_feat, n_bins), dtype=np.float64)
    hist_h = np.zeros((n_feat, n_bins), dtype=np.float64)
    hist_n = np.zeros((n_feat, n_bins), dtype=np.int64)
    cdef double[:, ::1] hg = hist_g
    cdef double[:, ::1] hh = hist_h
    cdef cnp.int64_t[:, ::1] hn = hist_n

    for f in range(n_feat):
        for i in range(m):
            r = rows[i]
            b = binned[r, f]
            hg[f, b] += grad[r]
            hh[f, b] += hess[r]
            hn[f, b] += 1
    return hist_g, hist_h, hist_n
