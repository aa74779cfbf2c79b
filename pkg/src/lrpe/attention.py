"""Softmax attention, kernelized linear attention, and the encoded variant.

The linear paths never materialize the n x n score matrix: the non-causal
path computes phi(K)^T V first, the causal path keeps a running d x d state.
With an encoding spec attached, phi(Q) and phi(K) are position-encoded before
the same machinery runs; for the complex unitary family the scores entering
the normalization are the real parts of the encoded inner products.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .encoding import EncodingSpec, encode_positions

DEGENERATE_EPS = 1e-30


class DegenerateNormalizerError(ValueError):
    """Raised when some |delta_s| falls below the hard floor instead of
    silently clamping it."""


@dataclass(frozen=True)
class AttentionInput:
    q: np.ndarray
    k: np.ndarray
    v: np.ndarray
    causal: bool = False
    spec: EncodingSpec | None = None


@dataclass(frozen=True)
class AttentionOutput:
    o: np.ndarray
    delta: np.ndarray | None = None


def phi(x: np.ndarray) -> np.ndarray:
    """1 + elu kernel map: x + 1 for x >= 0, exp(x) below; strictly positive."""
    x = np.asarray(x, dtype=np.float64)
    return np.where(x >= 0.0, x + 1.0, np.exp(np.minimum(x, 0.0)))


def _check_qkv(q, k, v):
    q = np.asarray(q, dtype=np.float64)
    k = np.asarray(k, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if q.ndim != 2 or q.shape != k.shape or v.shape[0] != q.shape[0] or v.ndim != 2:
        raise ValueError(f"Q, K, V must share n and d, got {q.shape} {k.shape} {v.shape}")
    return q, k, v


def _finish(numer: np.ndarray, delta: np.ndarray) -> AttentionOutput:
    if np.iscomplexobj(numer):
        numer = numer.real
    if np.iscomplexobj(delta):
        delta = delta.real
    if np.min(np.abs(delta)) < DEGENERATE_EPS:
        raise DegenerateNormalizerError(
            f"normalizer magnitude below {DEGENERATE_EPS:g}; refusing to divide"
        )
    out = numer / delta[:, None]
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("attention output contains NaN/Inf")
    return AttentionOutput(o=out, delta=delta)


def vanilla_attention(q, k, v, causal: bool = False) -> AttentionOutput:
    """Softmax(Q K^T / sqrt(d)) V with max-subtracted softmax; O(n^2 d)."""
    q, k, v = _check_qkv(q, k, v)
    n, d = q.shape
    scores = q @ k.T / np.sqrt(d)
    if causal:
        scores[np.triu_indices(n, k=1)] = -np.inf
    scores -= scores.max(axis=1, keepdims=True)
    np.exp(scores, out=scores)
    weights = scores / scores.sum(axis=1, keepdims=True)
    out = weights @ v
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("attention output contains NaN/Inf")
    return AttentionOutput(o=out, delta=None)


def linear_attention(q, k, v) -> AttentionOutput:
    """Non-causal kernelized attention: phi(Q) [phi(K)^T V] / delta; O(n d^2)."""
    q, k, v = _check_qkv(q, k, v)
    fq = phi(q)
    fk = phi(k)
    state = fk.T @ v
    zsum = fk.sum(axis=0)
    return _finish(fq @ state, fq @ zsum)


def causal_linear_attention(q, k, v) -> AttentionOutput:
    """Causal kernelized attention via the running-state recurrence."""
    q, k, v = _check_qkv(q, k, v)
    numer, delta = kernels.causal_scan(phi(q), phi(k), v)
    return _finish(numer, delta)


def _encoded_qk(spec: EncodingSpec, q, k, encode_before_kernel: bool):
    if encode_before_kernel:
        if spec.is_complex:
            raise ValueError("encode-before-kernel is only defined for real families")
        return phi(encode_positions(spec, q)), phi(encode_positions(spec, k))
    return encode_positions(spec, phi(q)), encode_positions(spec, phi(k))


def lrpe_linear_attention(
    q, k, v, spec: EncodingSpec | None, causal: bool = False,
    encode_before_kernel: bool = False,
) -> AttentionOutput:
    """Linear attention on position-encoded phi(Q), phi(K).

    ``encode_before_kernel`` swaps the encode/kernel order for
    experimentation (real families only) and sits outside the verified path.
    """
    q, k, v = _check_qkv(q, k, v)
    if spec is None or spec.lambda_family == "none":
        if causal:
            return causal_linear_attention(q, k, v)
        return linear_attention(q, k, v)
    if q.shape[1] != spec.d:
        raise ValueError(f"spec dimension {spec.d} does not match input width {q.shape[1]}")
    qt, kt = _encoded_qk(spec, q, k, encode_before_kernel)
    qc = qt.conj() if np.iscomplexobj(qt) else qt
    if causal:
        vv = v.astype(kt.dtype) if np.iscomplexobj(kt) else v
        numer, delta = kernels.causal_scan(qc, kt, vv)
        return _finish(numer, delta)
    state = kt.T @ v
    zsum = kt.sum(axis=0)
    return _finish(qc @ state, qc @ zsum)


def lrpe_scores(spec: EncodingSpec | None, q, k) -> np.ndarray:
    """All-pairs unnormalized scores of the linearizable route.

    Entry (s, t) is (L(s) P q_s)^H (L(t) P k_t); complex for the unitary
    family (attention consumes the real part), real otherwise.  This is the
    n x n surface the dense-matrix oracle is checked against; the attention
    paths above never form it.
    """
    q = np.asarray(q, dtype=np.float64)
    k = np.asarray(k, dtype=np.float64)
    if spec is None or spec.lambda_family == "none":
        return q @ k.T
    qt = encode_positions(spec, q)
    kt = encode_positions(spec, k)
    return qt.conj() @ kt.T


def attend(inp: AttentionInput, vanilla: bool = False) -> AttentionOutput:
    """Dispatch helper used by the CLI."""
    if vanilla:
        return vanilla_attention(inp.q, inp.k, inp.v, causal=inp.causal)
    return lrpe_linear_attention(inp.q, inp.k, inp.v, inp.spec, causal=inp.causal)
