# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops.  Must stay numerically identical to ``_kernels_py``."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def lfsr_period(int length, long long tap_mask, long long seed):
    cdef long long mask = (1LL << length) - 1
    cdef long long state = seed
    cdef long long fb, x
    cdef long long steps = 0
    with nogil:
        while True:
            x = state & tap_mask
            fb = 0
            while x:
                fb ^= 1
                x &= x - 1
            state = ((state << 1) | fb) & mask
            steps += 1
            if state == seed:
                break
    return steps


def key_loglik(const double[:, :, ::1] W, const cnp.uint8_t[:, :, ::1] bad,
               const int[:, ::1] KS):
    cdef Py_ssize_t T = W.shape[0], n = W.shape[1]
    cdef Py_ssize_t K = KS.shape[0]
    cdef Py_ssize_t t, k, i
    cdef int b, v
    cdef double acc
    cdef bint use_bad = bad is not None
    logL_arr = np.zeros((T, K), dtype=np.float64)
    viol_arr = np.zeros((T, K), dtype=np.int32)
    cdef double[:, ::1] logL = logL_arr
    cdef int[:, ::1] viol = viol_arr
    with nogil:
        for t in range(T):
            for k in range(K):
                acc = 0.0
                v = 0
                for i in range(n):
                    b = KS[k, i]
                    acc = acc + W[t, i, b]
                    if use_bad:
                        v = v + bad[t, i, b]
                logL[t, k] = acc
                viol[t, k] = v
    return logL_arr, viol_arr
