# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled closed-form block assembly (hot kernel).

Same arithmetic as ``_block_py.closed_block_entries``: the bond chain of
every tuple is accumulated once, then the (n**k, n**k) block is filled in a
single fused pass

    out[a, b] = head[a_1, b_1] * chain[a] * conj(chain[b]) * tail[a_k, b_k].
"""

import numpy as np


def closed_block_entries(double complex[:, ::1] head,
                         double complex[:, ::1] w,
                         double complex[:, ::1] tail,
                         Py_ssize_t k):
    cdef Py_ssize_t n = head.shape[0]
    cdef Py_ssize_t dim = 1
    cdef Py_ssize_t t, a, b, m, rem
    if k < 1:
        raise ValueError("block length must be >= 1")
    for t in range(k):
        dim *= n

    # base-n digit expansion of every tuple index, row-major
    digits_np = np.empty((dim, k), dtype=np.intp)
    cdef Py_ssize_t[:, ::1] digits = digits_np
    for a in range(dim):
        rem = a
        for m in range(k - 1, -1, -1):
            digits[a, m] = rem % n
            rem //= n

    chain_np = np.empty(dim, dtype=np.complex128)
    cdef double complex[::1] chain = chain_np
    cdef double complex acc
    for a in range(dim):
        acc = 1.0
        for m in range(k - 1):
            acc = acc * w[digits[a, m], digits[a, m + 1]]
        chain[a] = acc

    out_np = np.empty((dim, dim), dtype=np.complex128)
    cdef double complex[:, ::1] out = out_np
    cdef double complex row_factor
    cdef Py_ssize_t a0, ak
    for a in range(dim):
        a0 = digits[a, 0]
        ak = digits[a, k - 1]
        row_factor = chain[a]
        for b in range(dim):
            out[a, b] = (head[a0, digits[b, 0]]
                         * row_factor * chain[b].conjugate()
                         * tail[ak, digits[b, k - 1]])
    return out_np
