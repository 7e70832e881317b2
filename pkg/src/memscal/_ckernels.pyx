# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled MVG cost-surface kernel. Same contract as ``_kernels_py.cost_surface``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()


def cost_surface(frame, m_values, k_values, bint serpentine):
    cdef const double[::1] f = np.ascontiguousarray(frame, dtype=np.float64)
    cdef const long long[::1] ms = np.ascontiguousarray(m_values, dtype=np.int64)
    cdef const long long[::1] ks = np.ascontiguousarray(k_values, dtype=np.int64)
    cdef Py_ssize_t nm = ms.shape[0], nk = ks.shape[0], n = f.shape[0]
    sums_arr = np.zeros((nm, nk), dtype=np.float64)
    pairs_arr = np.zeros((nm, nk), dtype=np.int64)
    cdef double[:, ::1] sums = sums_arr
    cdef long long[:, ::1] pairs = pairs_arr
    cdef Py_ssize_t a, b, m, k, rows, r, c, top, bot
    cdef double s, x, y
    cdef long long cnt
    with nogil:
        for a in range(nm):
            m = ms[a]
            for b in range(nk):
                k = ks[b]
                if m < 0 or k < 2 or m >= n or (n - m) // k < 2:
                    continue
                rows = (n - m) // k
                s = 0.0
                cnt = 0
                for r in range(rows - 1):
                    top = m + r * k
                    bot = top + k
                    if serpentine:
                        # one of the two rows runs backwards: pair c with k - 1 - c
                        for c in range(k):
                            x = f[top + c]
                            y = f[bot + k - 1 - c]
                            if x == x and y == y:
                                s += fabs(y - x)
                                cnt += 1
                    else:
                        for c in range(k):
                            x = f[top + c]
                            y = f[bot + c]
                            if x == x and y == y:
                                s += fabs(y - x)
                                cnt += 1
                sums[a, b] = s
                pairs[a, b] = cnt
    return sums_arr, pairs_arr
