# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled Ward.D2 agglomeration kernel.

Mirrors treemimic._ward_py.ward_merge operation-for-operation (the build
disables FP contraction), so merge sequences are bit-identical across
backends. See the fallback module for the slot invariant that fixes the
tie-breaking order.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY

cnp.import_array()


def ward_merge(cnp.float64_t[:, ::1] work not None):
    """Agglomerate a squared-dissimilarity matrix with the Ward.D2 update.

    Same contract as the fallback kernel: ``work`` is destroyed; returns
    (left, right, heights_sq, sizes).
    """
    cdef Py_ssize_t k = work.shape[0]
    if work.shape[1] != k:
        raise ValueError("work must be square")

    size_arr = np.ones(k)
    node_arr = np.arange(k, dtype=np.int64)
    left_arr = np.empty(k - 1, dtype=np.int64)
    right_arr = np.empty(k - 1, dtype=np.int64)
    hsq_arr = np.empty(k - 1)
    sizes_arr = np.empty(k - 1, dtype=np.int64)

    cdef cnp.float64_t[::1] size = size_arr
    cdef cnp.int64_t[::1] node = node_arr
    cdef cnp.int64_t[::1] left = left_arr
    cdef cnp.int64_t[::1] right = right_arr
    cdef cnp.float64_t[::1] hsq = hsq_arr
    cdef cnp.int64_t[::1] sizes = sizes_arr

    cdef Py_ssize_t step, i, j, a, b, m
    cdef double best, v, h, ni, nj, nm, dim, djm

    with nogil:
        for a in range(k):
            for b in range(a + 1):
                work[a, b] = INFINITY

        for step in range(k - 1):
            best = INFINITY
            i = 0
            j = 1
            for a in range(k - 1):
                for b in range(a + 1, k):
                    v = work[a, b]
                    if v < best:
                        best = v
                        i = a
                        j = b
            h = work[i, j]
            ni = size[i]
            nj = size[j]

            for m in range(k):
                if m == i or m == j:
                    continue
                nm = size[m]
                dim = work[m, i] if m < i else work[i, m]
                djm = work[m, j] if m < j else work[j, m]
                v = ((ni + nm) * dim + (nj + nm) * djm - nm * h) / (ni + nj + nm)
                if m < i:
                    work[m, i] = v
                else:
                    work[i, m] = v
            work[i, j] = INFINITY
            for m in range(j):
                work[m, j] = INFINITY
            for m in range(j + 1, k):
                work[j, m] = INFINITY

            left[step] = node[i]
            right[step] = node[j]
            hsq[step] = h
            sizes[step] = <cnp.int64_t> (ni + nj)
            size[i] = ni + nj
            node[i] = k + step
    return left_arr, right_arr, hsq_arr, sizes_arr
