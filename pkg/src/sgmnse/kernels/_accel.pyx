# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels; semantics identical to ``sgmnse.kernels._pure``."""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def leray_inplace(cnp.complex128_t[:, :, :, ::1] c,
                  cnp.float64_t[::1] kt1,
                  cnp.float64_t[::1] kt2,
                  cnp.float64_t[::1] kt3):
    cdef Py_ssize_t n1 = c.shape[1], n2 = c.shape[2], n3 = c.shape[3]
    cdef Py_ssize_t i, j, k
    cdef double k1, k2, k3, ksq
    cdef double complex kdotu
    with nogil:
        for i in range(n1):
            k1 = kt1[i]
            for j in range(n2):
                k2 = kt2[j]
                for k in range(n3):
                    k3 = kt3[k]
                    ksq = k1 * k1 + k2 * k2 + k3 * k3
                    if ksq == 0.0:
                        c[0, i, j, k] = 0.0
                        c[1, i, j, k] = 0.0
                        c[2, i, j, k] = 0.0
                        continue
                    kdotu = (c[0, i, j, k] * k1 + c[1, i, j, k] * k2
                             + c[2, i, j, k] * k3) / ksq
                    c[0, i, j, k] = c[0, i, j, k] - k1 * kdotu
                    c[1, i, j, k] = c[1, i, j, k] - k2 * kdotu
                    c[2, i, j, k] = c[2, i, j, k] - k3 * kdotu


def diffusion_solve_inplace(cnp.complex128_t[:, :, :, ::1] c,
                            cnp.float64_t[:, :, ::1] ksq,
                            double a):
    cdef Py_ssize_t n1 = c.shape[1], n2 = c.shape[2], n3 = c.shape[3]
    cdef Py_ssize_t m, i, j, k
    cdef double s
    with nogil:
        for i in range(n1):
            for j in range(n2):
                for k in range(n3):
                    s = 1.0 / (1.0 + a * ksq[i, j, k])
                    for m in range(3):
                        c[m, i, j, k] = c[m, i, j, k] * s


def hv_norms(cnp.complex128_t[:, :, :, ::1] c,
             cnp.float64_t[:, :, ::1] mult,
             cnp.float64_t[:, :, ::1] ksq):
    cdef Py_ssize_t n1 = c.shape[1], n2 = c.shape[2], n3 = c.shape[3]
    cdef Py_ssize_t i, j, k, m
    cdef double h = 0.0, v = 0.0, a, re, im
    with nogil:
        for i in range(n1):
            for j in range(n2):
                for k in range(n3):
                    a = 0.0
                    for m in range(3):
                        re = c[m, i, j, k].real
                        im = c[m, i, j, k].imag
                        a += re * re + im * im
                    a *= mult[i, j, k]
                    h += a
                    v += a * ksq[i, j, k]
    return h, v


def assemble_convective(cnp.complex128_t[:, :, :, ::1] that,
                        cnp.float64_t[::1] kt1,
                        cnp.float64_t[::1] kt2,
                        cnp.float64_t[::1] kt3,
                        cnp.uint8_t[:, :, ::1] mask):
    cdef Py_ssize_t n1 = that.shape[1], n2 = that.shape[2], n3 = that.shape[3]
    out_arr = np.empty((3, n1, n2, n3), dtype=np.complex128)
    cdef cnp.complex128_t[:, :, :, ::1] out = out_arr
    cdef Py_ssize_t i, j, k
    cdef double k1, k2, k3, ksq
    cdef double complex c0, c1, c2, kdot, iunit
    iunit = 1j
    with nogil:
        for i in range(n1):
            k1 = kt1[i]
            for j in range(n2):
                k2 = kt2[j]
                for k in range(n3):
                    if not mask[i, j, k]:
                        out[0, i, j, k] = 0.0
                        out[1, i, j, k] = 0.0
                        out[2, i, j, k] = 0.0
                        continue
                    k3 = kt3[k]
                    ksq = k1 * k1 + k2 * k2 + k3 * k3
                    c0 = iunit * (k1 * that[0, i, j, k] + k2 * that[1, i, j, k]
                                  + k3 * that[2, i, j, k])
                    c1 = iunit * (k1 * that[1, i, j, k] + k2 * that[3, i, j, k]
                                  + k3 * that[4, i, j, k])
                    c2 = iunit * (k1 * that[2, i, j, k] + k2 * that[4, i, j, k]
                                  + k3 * that[5, i, j, k])
                    if ksq > 0.0:
                        kdot = (k1 * c0 + k2 * c1 + k3 * c2) / ksq
                        c0 = c0 - k1 * kdot
                        c1 = c1 - k2 * kdot
                        c2 = c2 - k3 * kdot
                    else:
                        c0 = 0.0
                        c1 = 0.0
                        c2 = 0.0
                    out[0, i, j, k] = c0
                    out[1, i, j, k] = c1
                    out[2, i, j, k] = c2
    return out_arr


def convect(cnp.float64_t[:, :, :, ::1] u, cnp.float64_t[:, :, :, :, ::1] gv):
    cdef Py_ssize_t n1 = u.shape[1], n2 = u.shape[2], n3 = u.shape[3]
    out_arr = np.empty((3, n1, n2, n3), dtype=np.float64)
    cdef cnp.float64_t[:, :, :, ::1] out = out_arr
    cdef Py_ssize_t i, j, k, m
    with nogil:
        for i in range(n1):
            for j in range(n2):
                for k in range(n3):
                    for m in range(3):
                        out[m, i, j, k] = (u[0, i, j, k] * gv[0, m, i, j, k]
                                           + u[1, i, j, k] * gv[1, m, i, j, k]
                                           + u[2, i, j, k] * gv[2, m, i, j, k])
    return out_arr
