"""Numpy fallback for the causal prefix-scan kernel."""

from __future__ import annotations

import numpy as np


def causal_scan(qf: np.ndarray, kf: np.ndarray, v: np.ndarray):
    """Running-state causal attention accumulation.

    For each position s: state += outer(kf[s], v[s]) and zsum += kf[s], then
    numer[s] = qf[s] @ state and delta[s] = qf[s] @ zsum.  The caller passes
    qf pre-conjugated when the inputs are complex, so the kernel itself is
    dtype-agnostic.  O(n d^2) time, O(d^2) extra space.
    """
    n, d = qf.shape
    dv = v.shape[1]
    dtype = np.result_type(qf.dtype, kf.dtype, v.dtype)
    state = np.zeros((d, dv), dtype=dtype)
    zsum = np.zeros(d, dtype=dtype)
    numer = np.empty((n, dv), dtype=dtype)
    delta = np.empty(n, dtype=dtype)
    for s in range(n):
        state += np.outer(kf[s], v[s])
        zsum += kf[s]
        numer[s] = qf[s] @ state
        delta[s] = qf[s] @ zsum
    return numer, delta
