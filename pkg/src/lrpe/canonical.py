"""Canonical decompositions of published relative-encoding methods.

Every method here scores a query/key pair as a sum of primitive triples
(q_hat, W_rel(t - s), k_hat); evaluating that sum and evaluating the direct
published formula must agree, which is what the tests lock down.  A primitive
side is usually a vector, but identity matrices are legal primitives too: a
matrix side contracts through its column sums, and when both sides are
matrix-valued the result is additionally divided by d (for diagonal W this is
the normalized trace).  The stacked evaluation concatenates the effective
vectors and block-diagonalizes the relative matrices, so stacked == summed
holds exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .numerics import Rng, random_mat

Vector = np.ndarray
PrimitiveSide = Callable[[np.ndarray, int], np.ndarray]


@dataclass(frozen=True)
class Primitive:
    """One triple of the decomposition.

    ``q_hat(q_s, s)`` and ``k_hat(k_t, t)`` return a vector or a matrix;
    ``w_rel(r)`` returns the relative matrix for offset r = t - s.
    """

    q_hat: PrimitiveSide
    k_hat: PrimitiveSide
    w_rel: Callable[[int], np.ndarray]


@dataclass(frozen=True)
class CanonicalForm:
    name: str
    primitives: tuple[Primitive, ...]

    def __post_init__(self):
        if not self.primitives:
            raise ValueError("canonical form needs at least one primitive")


def _as_columns(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a)
    return a.reshape(-1, 1) if a.ndim == 1 else a


def eval_primitive(prim: Primitive, q_s: Vector, k_t: Vector, s: int, t: int) -> complex:
    qh = _as_columns(prim.q_hat(np.asarray(q_s), s))
    kh = _as_columns(prim.k_hat(np.asarray(k_t), t))
    w = np.asarray(prim.w_rel(t - s))
    if w.ndim != 2 or w.shape != (qh.shape[0], kh.shape[0]):
        raise ValueError(f"relative matrix shape {w.shape} does not conform")
    smat = qh.conj().T @ w @ kh
    val = smat.sum()
    if qh.shape[1] > 1 and kh.shape[1] > 1:
        if qh.shape[1] != kh.shape[1]:
            raise ValueError("dual matrix primitives must replicate equally")
        val = val / qh.shape[1]
    return val.item()


def compose(form: CanonicalForm, q_s: Vector, k_t: Vector, s: int, t: int) -> complex:
    """Sum of the primitive evaluations (the summed canonical form)."""
    return sum(eval_primitive(p, q_s, k_t, s, t) for p in form.primitives)


def compose_stacked(form: CanonicalForm, q_s: Vector, k_t: Vector, s: int, t: int) -> complex:
    """Single-primitive evaluation: stacked sides against block-diag W."""
    q_parts, k_parts, w_parts = [], [], []
    for prim in form.primitives:
        qh = _as_columns(prim.q_hat(np.asarray(q_s), s))
        kh = _as_columns(prim.k_hat(np.asarray(k_t), t))
        both = qh.shape[1] > 1 and kh.shape[1] > 1
        scale = 1.0 / np.sqrt(qh.shape[1]) if both else 1.0
        q_parts.append(qh.sum(axis=1) * scale if qh.shape[1] > 1 else qh[:, 0])
        k_parts.append(kh.sum(axis=1) * scale if kh.shape[1] > 1 else kh[:, 0])
        w_parts.append(np.asarray(prim.w_rel(t - s)))
    q_stack = np.concatenate(q_parts)
    k_stack = np.concatenate(k_parts)
    w_stack = _block_diag(w_parts)
    return np.vdot(q_stack, w_stack @ k_stack).item()


def _block_diag(blocks: list[np.ndarray]) -> np.ndarray:
    rows = sum(b.shape[0] for b in blocks)
    cols = sum(b.shape[1] for b in blocks)
    dtype = np.result_type(*[b.dtype for b in blocks])
    out = np.zeros((rows, cols), dtype=dtype)
    i = j = 0
    for b in blocks:
        out[i : i + b.shape[0], j : j + b.shape[1]] = b
        i += b.shape[0]
        j += b.shape[1]
    return out


# ---------------------------------------------------------------------------
# method configurations (tables are learned in the original methods; for the
# identity checks they are just seeded standard-normal fills)
# ---------------------------------------------------------------------------

def clip(x: int, k: int) -> int:
    return max(-k, min(k, x))


def deberta_bucket(x: int, c: int) -> int:
    if x <= -c:
        return 0
    if x >= c:
        return 2 * c - 1
    return x + c


@dataclass(frozen=True, eq=False)
class AdditiveConfig:
    """Scalar bias w_r for offsets r in [-r_max, r_max]."""

    r_max: int
    w: np.ndarray  # length 2*r_max + 1

    def bias(self, r: int) -> float:
        if abs(r) > self.r_max:
            raise ValueError(f"offset {r} outside bias table (+-{self.r_max})")
        return float(self.w[r + self.r_max])


@dataclass(frozen=True, eq=False)
class DebertaConfig:
    c: int
    k_bar: np.ndarray  # 2c x d
    q_bar: np.ndarray  # 2c x d


@dataclass(frozen=True, eq=False)
class RprConfig:
    k: int
    table: np.ndarray  # (2k + 1) x d, row i holds w_{i - k}

    def vector(self, r: int) -> np.ndarray:
        return self.table[clip(r, self.k) + self.k]


@dataclass(frozen=True, eq=False)
class CosformerConfig:
    alpha: float


def random_additive_config(r_max: int, seed: int) -> AdditiveConfig:
    w = Rng(seed).normals(2 * r_max + 1)
    return AdditiveConfig(r_max=r_max, w=w)


def random_deberta_config(d: int, c: int, seed: int) -> DebertaConfig:
    rng = Rng(seed)
    return DebertaConfig(c=c, k_bar=random_mat(rng, 2 * c, d), q_bar=random_mat(rng, 2 * c, d))


def random_rpr_config(d: int, k: int, seed: int) -> RprConfig:
    return RprConfig(k=k, table=random_mat(Rng(seed), 2 * k + 1, d))


# ---------------------------------------------------------------------------
# direct evaluators
# ---------------------------------------------------------------------------

def eval_additive(q: Vector, k: Vector, r: int, cfg: AdditiveConfig) -> complex:
    """q^H k + w_r."""
    return np.vdot(q, k).item() + cfg.bias(r)


def eval_multiplicative(
    q: Vector, k: Vector, r: int, w: Callable[[int], np.ndarray]
) -> complex:
    """q^H W(r) k (the rotary-style weighted inner product)."""
    q = np.asarray(q)
    k = np.asarray(k)
    wr = np.asarray(w(r))
    if wr.shape != (len(q), len(k)):
        raise ValueError(f"relative matrix shape {wr.shape} does not conform")
    return np.vdot(q, wr @ k).item()


def eval_deberta(q: Vector, k: Vector, s: int, t: int, cfg: DebertaConfig) -> complex:
    """q^H k + q^H kbar_{g(s-t)} + qbar_{g(t-s)}^H k with the clamped bucket g."""
    g_sk = deberta_bucket(s - t, cfg.c)
    g_qk = deberta_bucket(t - s, cfg.c)
    return (
        np.vdot(q, k).item()
        + np.vdot(q, cfg.k_bar[g_sk]).item()
        + np.vdot(cfg.q_bar[g_qk], k).item()
    )


def eval_rpr(q: Vector, k: Vector, r: int, cfg: RprConfig) -> complex:
    """q^H k + q^H w_{clip(r, k)}."""
    return np.vdot(q, k).item() + np.vdot(q, cfg.vector(r)).item()


def eval_cosformer(q: Vector, k: Vector, r: int, cfg: CosformerConfig) -> complex:
    """q^H k * cos(alpha r)."""
    return np.vdot(q, k).item() * np.cos(cfg.alpha * r)


# ---------------------------------------------------------------------------
# documented decompositions
# ---------------------------------------------------------------------------

def _content(x: np.ndarray, _pos: int) -> np.ndarray:
    return x


def _identity_side(d: int) -> PrimitiveSide:
    eye = np.eye(d)
    return lambda _x, _pos: eye


def additive_form(cfg: AdditiveConfig, d: int) -> CanonicalForm:
    """m = 2: the content product plus a bias primitive with identity sides."""
    return CanonicalForm(
        name="additive",
        primitives=(
            Primitive(_content, _content, lambda r: np.eye(d)),
            Primitive(_identity_side(d), _identity_side(d), lambda r: cfg.bias(r) * np.eye(d)),
        ),
    )


def multiplicative_form(w: Callable[[int], np.ndarray]) -> CanonicalForm:
    """m = 1: the weighted inner product itself."""
    return CanonicalForm(
        name="multiplicative",
        primitives=(Primitive(_content, _content, lambda r: np.asarray(w(r))),),
    )


def deberta_form(cfg: DebertaConfig, d: int) -> CanonicalForm:
    """m = 3: content, column-replicated kbar/d, row-replicated conj(qbar)/d."""

    def w_kbar(r: int) -> np.ndarray:
        kb = cfg.k_bar[deberta_bucket(-r, cfg.c)]
        return np.repeat(kb.reshape(d, 1), d, axis=1) / d

    def w_qbar(r: int) -> np.ndarray:
        qb = cfg.q_bar[deberta_bucket(r, cfg.c)]
        return np.repeat(np.conj(qb).reshape(1, d), d, axis=0) / d

    return CanonicalForm(
        name="deberta",
        primitives=(
            Primitive(_content, _content, lambda r: np.eye(d)),
            Primitive(_content, _identity_side(d), w_kbar),
            Primitive(_identity_side(d), _content, w_qbar),
        ),
    )


def rpr_form(cfg: RprConfig, d: int) -> CanonicalForm:
    """m = 2: content plus the column-replicated clipped table vector / d."""

    def w_c(r: int) -> np.ndarray:
        return np.repeat(cfg.vector(r).reshape(d, 1), d, axis=1) / d

    return CanonicalForm(
        name="rpr",
        primitives=(
            Primitive(_content, _content, lambda r: np.eye(d)),
            Primitive(_content, _identity_side(d), w_c),
        ),
    )


def cosformer_form(cfg: CosformerConfig, d: int) -> CanonicalForm:
    """m = 1 with W(r) = cos(alpha r) I."""
    return CanonicalForm(
        name="cosformer",
        primitives=(Primitive(_content, _content, lambda r: np.cos(cfg.alpha * r) * np.eye(d)),),
    )
