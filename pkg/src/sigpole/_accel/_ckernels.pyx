# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the reference kernels (see reference.py).

Element order matches the numpy implementations; results agree with the
reference to a few ulps (libm pow vs numpy's vectorized pow).
"""
from libc.math cimport fabs, pow

import numpy as np


def pair_power_product(double[:, ::1] s, long[::1] a_idx, long[::1] b_idx,
                       double expo):
    cdef Py_ssize_t n = s.shape[0]
    cdef Py_ssize_t k = a_idx.shape[0]
    cdef Py_ssize_t i, l
    cdef double acc
    out_arr = np.empty(n)
    cdef double[::1] out = out_arr
    with nogil:
        for i in range(n):
            acc = 1.0
            for l in range(k):
                acc *= fabs(s[i, a_idx[l]] - s[i, b_idx[l]])
            out[i] = pow(acc, expo)
    return out_arr


def power_product(double[:, ::1] bases, double[::1] expos):
    cdef Py_ssize_t n = bases.shape[0]
    cdef Py_ssize_t m = bases.shape[1]
    cdef Py_ssize_t i, j
    cdef double e
    out_arr = np.ones(n)
    cdef double[::1] out = out_arr
    with nogil:
        for j in range(m):
            e = expos[j]
            if e == 0.0:
                continue
            if e == 1.0:
                for i in range(n):
                    out[i] *= bases[i, j]
            else:
                for i in range(n):
                    out[i] *= pow(bases[i, j], e)
    return out_arr
