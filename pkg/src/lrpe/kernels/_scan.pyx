# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled causal prefix-scan kernels (float64 and complex128)."""

import numpy as np

cimport cython


def causal_scan_f64(double[:, ::1] qf, double[:, ::1] kf, double[:, ::1] v):
    cdef Py_ssize_t n = qf.shape[0]
    cdef Py_ssize_t d = qf.shape[1]
    cdef Py_ssize_t dv = v.shape[1]
    numer_arr = np.empty((n, dv), dtype=np.float64)
    delta_arr = np.empty(n, dtype=np.float64)
    state_arr = np.zeros((d, dv), dtype=np.float64)
    zsum_arr = np.zeros(d, dtype=np.float64)
    cdef double[:, ::1] numer = numer_arr
    cdef double[::1] delta = delta_arr
    cdef double[:, ::1] state = state_arr
    cdef double[::1] zsum = zsum_arr
    cdef Py_ssize_t s, i, j
    cdef double ki, qi, acc
    for s in range(n):
        for i in range(d):
            ki = kf[s, i]
            zsum[i] += ki
            for j in range(dv):
                state[i, j] += ki * v[s, j]
        acc = 0.0
        for i in range(d):
            acc += qf[s, i] * zsum[i]
        delta[s] = acc
        for j in range(dv):
            acc = 0.0
            for i in range(d):
                acc += qf[s, i] * state[i, j]
            numer[s, j] = acc
    return numer_arr, delta_arr


def causal_scan_c128(double complex[:, ::1] qf,
                     double complex[:, ::1] kf,
                     double complex[:, ::1] v):
    cdef Py_ssize_t n = qf.shape[0]
    cdef Py_ssize_t d = qf.shape[1]
    cdef Py_ssize_t dv = v.shape[1]
    numer_arr = np.empty((n, dv), dtype=np.complex128)
    delta_arr = np.empty(n, dtype=np.complex128)
    state_arr = np.zeros((d, dv), dtype=np.complex128)
    zsum_arr = np.zeros(d, dtype=np.complex128)
    cdef double complex[:, ::1] numer = numer_arr
    cdef double complex[::1] delta = delta_arr
    cdef double complex[:, ::1] state = state_arr
    cdef double complex[::1] zsum = zsum_arr
    cdef Py_ssize_t s, i, j
    cdef double complex ki, acc
    for s in range(n):
        for i in range(d):
            ki = kf[s, i]
            zsum[i] += ki
            for j in range(dv):
                state[i, j] += ki * v[s, j]
        acc = 0.0
        for i in range(d):
            acc += qf[s, i] * zsum[i]
        delta[s] = acc
        for j in range(dv):
            acc = 0.0
            for i in range(d):
                acc += qf[s, i] * state[i, j]
            numer[s, j] = acc
    return numer_arr, delta_arr
