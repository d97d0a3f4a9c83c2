# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled pairwise-kernel entropy map.

Hot kernel of the action step: for every pixel, the entropy estimate needs
all N_p^2 particle pair differences, so cost is O(N_p^2 * n_pixels) with an
exp per pair. The Python fallback in ``_fallback.py`` computes the same
thing vectorized; this version avoids the (N_p, N_p, n_pixels) temporary.
"""

from libc.math cimport exp, log

import numpy as np

cimport numpy as cnp

cnp.import_array()


def pairwise_entropy(double[:, ::1] particles, double sigma_x2):
    """Per-pixel entropy of the particle set.

    particles: (N_p, n_pixels) C-contiguous float64.
    Returns a float64 array of length n_pixels.
    """
    cdef Py_ssize_t n_p = particles.shape[0]
    cdef Py_ssize_t n_px = particles.shape[1]
    cdef double inv_two_s2 = 0.5 / sigma_x2
    cdef double inv_np = 1.0 / n_p
    out_arr = np.empty(n_px, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t px, i, j
    cdef double acc, inner, diff

    for px in range(n_px):
        acc = 0.0
        for i in range(n_p):
            inner = 0.0
            for j in range(n_p):
                diff = particles[i, px] - particles[j, px]
                inner += exp(-diff * diff * inv_two_s2)
            acc += log(inner * inv_np)
        out[px] = -acc * inv_np
    return out_arr
