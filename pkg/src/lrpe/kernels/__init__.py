"""Backend selection for the hot causal-scan kernel.

The compiled Cython extension is preferred when it imported cleanly; the
numpy fallback is always available.  Set ``LRPE_BACKEND=python`` or
``LRPE_BACKEND=compiled`` to force a side (the latter raises if the extension
is missing).  Both backends compute the same recurrence and agree to
rounding; ``benchmarks/backend_compare.py`` measures the gap.
"""

from __future__ import annotations

import os

import numpy as np

from . import _scan_py

try:
    from . import _scan as _scan_ext
except ImportError:
    _scan_ext = None

_choice = os.environ.get("LRPE_BACKEND", "auto").lower()
if _choice not in ("auto", "compiled", "python"):
    raise ValueError(f"LRPE_BACKEND must be auto|compiled|python, got {_choice!r}")
if _choice == "compiled" and _scan_ext is None:
    raise ImportError("LRPE_BACKEND=compiled but the lrpe.kernels._scan extension is missing")

_use_compiled = _scan_ext is not None and _choice != "python"

BACKEND = "compiled" if _use_compiled else "python"
HAVE_COMPILED = _scan_ext is not None


def causal_scan(qf: np.ndarray, kf: np.ndarray, v: np.ndarray, backend: str | None = None):
    """Dispatch the causal recurrence to the selected backend.

    Returns (numer, delta) with numer[s] = qf[s] @ sum_{t<=s} outer(kf[t], v[t])
    and delta[s] = qf[s] @ sum_{t<=s} kf[t].  Complex inputs must arrive with
    qf already conjugated.
    """
    use_compiled = _use_compiled if backend is None else backend == "compiled"
    if use_compiled and _scan_ext is None:
        raise ImportError("compiled backend requested but unavailable")
    if not use_compiled:
        return _scan_py.causal_scan(qf, kf, v)
    if any(np.iscomplexobj(a) for a in (qf, kf, v)):
        qc = np.ascontiguousarray(qf, dtype=np.complex128)
        kc = np.ascontiguousarray(kf, dtype=np.complex128)
        vc = np.ascontiguousarray(v, dtype=np.complex128)
        return _scan_ext.causal_scan_c128(qc, kc, vc)
    qr = np.ascontiguousarray(qf, dtype=np.float64)
    kr = np.ascontiguousarray(kf, dtype=np.float64)
    vr = np.ascontiguousarray(v, dtype=np.float64)
    return _scan_ext.causal_scan_f64(qr, kr, vr)
