# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled split-scan kernel.

Semantics and floating-point operation order are pinned to kernels.pure:
both backends must return bit-identical results for identical inputs.
"""

import numpy as np

cimport numpy as cnp

BACKEND = "compiled"


def scan_sorted_split(
    cnp.float64_t[::1] values,
    cnp.float64_t[::1] grad,
    cnp.float64_t[::1] hess,
    double total_g,
    double total_h,
    double alpha,
    double two_beta,
    double min_child_hessian,
):
    """Best split of one feature, arrays pre-sorted by value ascending.

    Returns (gain, threshold, g_left, h_left, n_left) or None.
    """
    cdef Py_ssize_t n = values.shape[0]
    if n < 2:
        return None
    cdef double parent_denom = total_h + two_beta
    if parent_denom <= 0.0:
        return None
    cdef double parent_term = total_g * total_g / parent_denom
    cdef double gl = 0.0, hl = 0.0
    cdef double gr, hr, dl, dr, gain, best_gain = 0.0
    cdef double best_threshold = 0.0, best_gl = 0.0, best_hl = 0.0
    cdef Py_ssize_t i, best_n_left = 0
    cdef bint found = False
    for i in range(n - 1):
        gl = gl + grad[i]
        hl = hl + hess[i]
        if values[i] == values[i + 1]:
            continue
        gr = total_g - gl
        hr = total_h - hl
        dl = hl + two_beta
        dr = hr + two_beta
        if dl <= 0.0 or dr <= 0.0:
            continue
        if hl < min_child_hessian or hr < min_child_hessian:
            continue
        gain = 0.5 * (gl * gl / dl + gr * gr / dr - parent_term) - alpha
        if not found or gain > best_gain:
            found = True
            best_gain = gain
            best_threshold = 0.5 * (values[i] + values[i + 1])
            best_gl = gl
            best_hl = hl
            best_n_left = i + 1
    if not found:
        return None
    return best_gain, best_threshold, best_gl, best_hl, best_n_left


def sequential_sum(cnp.float64_t[::1] a):
    """Left-to-right accumulation, matching kernels.pure."""
    cdef Py_ssize_t i, n = a.shape[0]
    cdef double s = 0.0
    for i in range(n):
        s = s + a[i]
    return s
