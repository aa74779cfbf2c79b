"""Position-dependent unitary transforms for decomposable relative encodings.

A position transform is the map ``s -> W_s = P^H L(s) P`` built from a fixed
change-of-basis P and a per-position core family L(s).  Because
``W_s^H W_t = P^H L(s)^H L(t) P`` collapses to ``W_{t-s}``, scores between
encoded queries and keys depend only on the offset t - s, which is what lets
linear attention keep its O(n d^2) evaluation order.  In practice rows are
encoded with the cheaper ``L(s) P x`` (the P^H on the left cancels in every
score).

Core families
    unitary      complex phase diagonal  diag(exp(i s a_k))
    orthogonal   2x2 rotation blocks by s*a_k plus an identity tail of size q
    mixed        orthogonal with the split e = roundup_even(d // 2), q = d - e
    permutation  powers of a fixed permutation, L(s) x = x[pi^s]
    none         no encoding at all

P families: identity, householder (frozen random reflection), odd_even
(interleaving permutation), fourier (orthonormal DFT, complex pipelines only).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .numerics import Rng, conj_transpose, random_mat

LAMBDA_FAMILIES = ("unitary", "orthogonal", "mixed", "permutation", "none")
P_FAMILIES = ("identity", "householder", "odd_even", "fourier")
THETA_KINDS = ("a", "b", "c", "learned-init-a")


# ---------------------------------------------------------------------------
# theta schedules
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ThetaSchedule:
    """Angle schedule a_1..a_count for the unitary/orthogonal core families.

    ``d`` is the dimension entering the kind-a exponent (the rotated
    sub-dimension for orthogonal/mixed, the full embedding dimension for
    unitary); ``l`` is the reference sequence length used by kinds b and c.
    """

    kind: str
    d: int
    l: int | None
    values: tuple[float, ...]


def make_theta(kind: str, d: int, l: int | None = None, count: int | None = None) -> ThetaSchedule:
    if kind not in THETA_KINDS:
        raise ValueError(f"unknown theta kind {kind!r}")
    if d < 1:
        raise ValueError("d must be >= 1")
    if count is None:
        count = max(d // 2, 1)
    if count < 1:
        raise ValueError("count must be >= 1")
    if kind in ("a", "learned-init-a"):
        values = tuple(10000.0 ** (-2.0 * t / d) for t in range(count))
    elif kind == "b":
        if l is None or l < 1:
            raise ValueError("theta kind 'b' needs a reference length l >= 1")
        values = tuple(math.pi / 2.0 / l / count * t for t in range(1, count + 1))
    else:  # kind == "c"
        if l is None or l < 1:
            raise ValueError("theta kind 'c' needs a reference length l >= 1")
        values = tuple(math.pi / 2.0 / l / t for t in range(1, count + 1))
    return ThetaSchedule(kind=kind, d=d, l=l if kind in ("b", "c") else None, values=values)


# ---------------------------------------------------------------------------
# permutations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PermutationSpec:
    d: int
    pi: tuple[int, ...]
    cycle_order: int

    def __post_init__(self):
        if sorted(self.pi) != list(range(self.d)):
            raise ValueError("pi is not a bijection on {0..d-1}")
        if self.cycle_order != _cycle_order(self.pi):
            raise ValueError("cycle_order does not match pi")


def _cycle_order(pi: Sequence[int]) -> int:
    order = 1
    seen = [False] * len(pi)
    for start in range(len(pi)):
        if seen[start]:
            continue
        length = 0
        j = start
        while not seen[j]:
            seen[j] = True
            j = pi[j]
            length += 1
        order = math.lcm(order, length)
    return order


def make_permutation(d: int, seed: int) -> PermutationSpec:
    """Random permutation of {0..d-1}, frozen once drawn from the seed."""
    pi = tuple(Rng(seed).permutation(d))
    return PermutationSpec(d=d, pi=pi, cycle_order=_cycle_order(pi))


def perm_power(pi: Sequence[int], s: int) -> np.ndarray:
    """Index table of pi^s, i.e. out[j] = pi applied s times to j."""
    if s < 0:
        raise ValueError("s must be >= 0")
    pi_arr = np.asarray(pi, dtype=np.intp)
    out = np.arange(len(pi_arr), dtype=np.intp)
    for _ in range(s):
        out = out[pi_arr]
    return out


def permutation_matrix(pi: Sequence[int]) -> np.ndarray:
    """Dense gather matrix: (M x)[j] = x[pi[j]]."""
    d = len(pi)
    m = np.zeros((d, d))
    m[np.arange(d), np.asarray(pi, dtype=np.intp)] = 1.0
    return m


# ---------------------------------------------------------------------------
# encoding specification
# ---------------------------------------------------------------------------

def mixed_split(d: int) -> int:
    """Rotated prefix size for the mixed family: d // 2, rounded up to even."""
    e = d // 2
    if e % 2:
        e += 1
    return e


@dataclass(frozen=True)
class EncodingSpec:
    """Declarative description of one encoding instance.

    Immutable and hashable; realize it with :class:`PositionTransform` or the
    vectorized :func:`encode_positions`.
    """

    lambda_family: str
    p_family: str
    d: int
    seed: int = 0
    theta: ThetaSchedule | None = None
    identity_block_q: int = 0
    perm: PermutationSpec | None = None

    def __post_init__(self):
        if self.lambda_family not in LAMBDA_FAMILIES:
            raise ValueError(f"unknown lambda family {self.lambda_family!r}")
        if self.p_family not in P_FAMILIES:
            raise ValueError(f"unknown p family {self.p_family!r}")
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if self.p_family == "fourier" and self.lambda_family != "unitary":
            raise ValueError("fourier P is only valid with the unitary family")
        fam = self.lambda_family
        if fam == "unitary":
            self._need_theta(self.d, expect_q=0)
        elif fam == "orthogonal":
            e = self.d - self.identity_block_q
            if self.identity_block_q < 0 or e < 2 or e % 2:
                raise ValueError("orthogonal family needs an even rotated sub-dimension >= 2")
            self._need_theta(e // 2, expect_q=self.identity_block_q)
        elif fam == "mixed":
            if self.d < 3:
                raise ValueError("mixed family needs d >= 3")
            e = mixed_split(self.d)
            if self.identity_block_q != self.d - e:
                raise ValueError("mixed family fixes identity_block_q = d - roundup_even(d // 2)")
            self._need_theta(e // 2, expect_q=self.identity_block_q)
        elif fam == "permutation":
            if self.theta is not None:
                raise ValueError("permutation family takes no theta schedule")
            if self.perm is None or self.perm.d != self.d:
                raise ValueError("permutation family needs a PermutationSpec of matching d")
        else:  # none
            if self.theta is not None or self.perm is not None or self.identity_block_q:
                raise ValueError("family 'none' takes no theta, perm or identity block")

    def _need_theta(self, count: int, expect_q: int):
        if self.theta is None:
            raise ValueError(f"{self.lambda_family} family needs a theta schedule")
        if len(self.theta.values) != count:
            raise ValueError(
                f"theta schedule has {len(self.theta.values)} values, expected {count}"
            )
        if self.lambda_family == "unitary" and self.identity_block_q:
            raise ValueError("unitary family has no identity block")
        if self.perm is not None:
            raise ValueError(f"{self.lambda_family} family takes no permutation")

    @property
    def rotated_dim(self) -> int:
        """Size of the rotated prefix (orthogonal/mixed) or d (unitary)."""
        if self.lambda_family == "unitary":
            return self.d
        return self.d - self.identity_block_q

    @property
    def is_complex(self) -> bool:
        return self.lambda_family == "unitary"


def make_spec(
    lambda_family: str,
    p_family: str = "identity",
    d: int = 8,
    theta_kind: str = "a",
    q: int = 0,
    l: int | None = None,
    seed: int = 0,
) -> EncodingSpec:
    """Build a validated EncodingSpec, deriving theta/perm from the knobs."""
    theta = None
    perm = None
    identity_q = 0
    if lambda_family == "unitary":
        theta = make_theta(theta_kind, d=d, l=l, count=d)
    elif lambda_family == "orthogonal":
        e = d - q
        if e < 2 or e % 2:
            raise ValueError("orthogonal family needs an even rotated sub-dimension >= 2")
        theta = make_theta(theta_kind, d=e, l=l, count=e // 2)
        identity_q = q
    elif lambda_family == "mixed":
        if q:
            raise ValueError("mixed family derives q from d; do not pass q")
        if d < 3:
            raise ValueError("mixed family needs d >= 3")
        e = mixed_split(d)
        theta = make_theta(theta_kind, d=e, l=l, count=e // 2)
        identity_q = d - e
    elif lambda_family == "permutation":
        if q:
            raise ValueError("permutation family takes no q")
        perm = make_permutation(d, seed)
    elif lambda_family == "none":
        if q:
            raise ValueError("family 'none' takes no q")
    else:
        raise ValueError(f"unknown lambda family {lambda_family!r}")
    return EncodingSpec(
        lambda_family=lambda_family,
        p_family=p_family,
        d=d,
        seed=seed,
        theta=theta,
        identity_block_q=identity_q,
        perm=perm,
    )


# ---------------------------------------------------------------------------
# spec string grammar:  <lambda>:<p>:<theta_kind>:<d>[:q=<q>][:l=<l>][:seed=<seed>]
# ---------------------------------------------------------------------------

def parse_spec(text: str) -> EncodingSpec:
    parts = text.strip().split(":")
    if len(parts) < 4:
        raise ValueError(f"spec string needs at least 4 fields, got {text!r}")
    lam, pf, kind, d_str = parts[:4]
    if kind not in THETA_KINDS:
        raise ValueError(f"unknown theta kind {kind!r} in spec string")
    try:
        d = int(d_str)
    except ValueError:
        raise ValueError(f"bad dimension field {d_str!r} in spec string") from None
    q = 0
    l = None
    seed = 0
    for part in parts[4:]:
        key, sep, val = part.partition("=")
        if not sep or key not in ("q", "l", "seed"):
            raise ValueError(f"bad spec option {part!r}")
        try:
            ival = int(val)
        except ValueError:
            raise ValueError(f"bad integer in spec option {part!r}") from None
        if key == "q":
            q = ival
        elif key == "l":
            l = ival
        else:
            seed = ival
    return make_spec(lam, pf, d=d, theta_kind=kind, q=q, l=l, seed=seed)


def render_spec(spec: EncodingSpec) -> str:
    kind = spec.theta.kind if spec.theta is not None else "a"
    out = f"{spec.lambda_family}:{spec.p_family}:{kind}:{spec.d}"
    if spec.lambda_family == "orthogonal":
        out += f":q={spec.identity_block_q}"
    if spec.theta is not None and spec.theta.l is not None:
        out += f":l={spec.theta.l}"
    out += f":seed={spec.seed}"
    return out


# ---------------------------------------------------------------------------
# P families
# ---------------------------------------------------------------------------

def householder_matrix(v: np.ndarray, eps: float = 0.0) -> np.ndarray:
    """Reflection I - 2 v v^T / (v^T v); eps > 0 reproduces the learnable-v
    renormalization (out of the acceptance path)."""
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    norm = np.linalg.norm(v)
    if norm == 0.0 and eps == 0.0:
        raise ValueError("householder vector must be nonzero")
    u = v / (norm + eps)
    return np.eye(len(u)) - 2.0 * np.outer(u, u)


def householder_vector(d: int, seed: int) -> np.ndarray:
    """The frozen unit reflection vector for a given (d, seed)."""
    v = random_mat(Rng(seed), d, 1).reshape(-1)
    return v / np.linalg.norm(v)


def odd_even_indices(d: int) -> np.ndarray:
    """Gather table g with out[i] = in[g[i]]: out[2k] = in[k],
    out[2k+1] = in[k + ceil(d/2)]."""
    half = d - d // 2
    g = np.empty(d, dtype=np.intp)
    g[0::2] = np.arange(half)
    g[1::2] = np.arange(d // 2) + half
    return g


def fourier_matrix(d: int) -> np.ndarray:
    """Orthonormal DFT matrix F_{jk} = exp(-2*pi*i*j*k/d) / sqrt(d)."""
    idx = np.arange(d)
    return np.exp(-2j * np.pi * np.outer(idx, idx) / d) / math.sqrt(d)


def build_p(p_family: str, d: int, seed: int = 0) -> np.ndarray:
    """Dense unitary/orthogonal P for a family; encode paths use the
    matrix-free equivalents."""
    if p_family == "identity":
        return np.eye(d)
    if p_family == "householder":
        return householder_matrix(householder_vector(d, seed))
    if p_family == "odd_even":
        return permutation_matrix(odd_even_indices(d))
    if p_family == "fourier":
        return fourier_matrix(d)
    raise ValueError(f"unknown p family {p_family!r}")


# ---------------------------------------------------------------------------
# core family actions on single vectors
# ---------------------------------------------------------------------------

def lambda_unitary(s: int, theta: ThetaSchedule, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x)
    alpha = np.asarray(theta.values)
    if len(alpha) != x.shape[-1]:
        raise ValueError("theta length does not match vector length")
    return x * np.exp(1j * s * alpha)


def lambda_orthogonal(s: int, theta: ThetaSchedule, q_identity: int, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    alpha = np.asarray(theta.values)
    e = len(x) - q_identity
    if e < 0 or e % 2:
        raise ValueError("rotated sub-dimension must be even and nonnegative")
    if e != 2 * len(alpha):
        raise ValueError("theta length does not match rotated sub-dimension")
    c = np.cos(s * alpha)
    si = np.sin(s * alpha)
    out = x.copy()
    xe = x[0:e:2]
    xo = x[1:e:2]
    out[0:e:2] = xe * c - xo * si
    out[1:e:2] = xe * si + xo * c
    return out


def lambda_permutation(s: int, perm: PermutationSpec, x: np.ndarray) -> np.ndarray:
    if s < 0:
        raise ValueError("s must be >= 0")
    return np.asarray(x)[perm_power(perm.pi, s)]


# ---------------------------------------------------------------------------
# realized transforms
# ---------------------------------------------------------------------------

class PositionTransform:
    """Realized position map for one spec: apply to vectors or materialize
    dense W_s.  Immutable after construction and safe to share."""

    def __init__(self, spec: EncodingSpec):
        self.spec = spec
        self.d = spec.d
        self._alpha = np.asarray(spec.theta.values) if spec.theta is not None else None
        self._hh_v = (
            householder_vector(spec.d, spec.seed) if spec.p_family == "householder" else None
        )
        self._oe = odd_even_indices(spec.d) if spec.p_family == "odd_even" else None
        self._p = build_p(spec.p_family, spec.d, spec.seed)

    # -- P action -----------------------------------------------------------

    def apply_p(self, x: np.ndarray) -> np.ndarray:
        if self.spec.p_family == "identity":
            return np.asarray(x)
        if self.spec.p_family == "householder":
            x = np.asarray(x)
            return x - 2.0 * np.dot(x, self._hh_v) * self._hh_v
        if self.spec.p_family == "odd_even":
            return np.asarray(x)[self._oe]
        return self._p @ np.asarray(x)  # fourier

    def apply_p_rows(self, x: np.ndarray) -> np.ndarray:
        """P applied to every row of an n x d array."""
        x = np.asarray(x)
        if self.spec.p_family == "identity":
            return x
        if self.spec.p_family == "householder":
            return x - 2.0 * np.outer(x @ self._hh_v, self._hh_v)
        if self.spec.p_family == "odd_even":
            return x[:, self._oe]
        return np.fft.fft(x, axis=1, norm="ortho")  # == F @ row for every row

    # -- core action --------------------------------------------------------

    def apply_core(self, s: int, y: np.ndarray) -> np.ndarray:
        fam = self.spec.lambda_family
        if fam == "unitary":
            return lambda_unitary(s, self.spec.theta, y)
        if fam in ("orthogonal", "mixed"):
            return lambda_orthogonal(s, self.spec.theta, self.spec.identity_block_q, y)
        if fam == "permutation":
            return lambda_permutation(s, self.spec.perm, y)
        return np.asarray(y)  # none

    def apply(self, s: int, x: np.ndarray) -> np.ndarray:
        """The practical per-row encoding L(s) (P x)."""
        if self.spec.lambda_family == "none":
            return np.asarray(x)
        return self.apply_core(s, self.apply_p(x))

    # -- dense materialization ----------------------------------------------

    def dense_core(self, s: int) -> np.ndarray:
        """Dense L(s)."""
        fam = self.spec.lambda_family
        d = self.d
        if fam == "unitary":
            return np.diag(np.exp(1j * s * self._alpha))
        if fam in ("orthogonal", "mixed"):
            out = np.eye(d)
            angles = s * self._alpha
            c, si = np.cos(angles), np.sin(angles)
            for k in range(len(self._alpha)):
                i = 2 * k
                out[i, i] = c[k]
                out[i, i + 1] = -si[k]
                out[i + 1, i] = si[k]
                out[i + 1, i + 1] = c[k]
            return out
        if fam == "permutation":
            return permutation_matrix(perm_power(self.spec.perm.pi, s))
        return np.eye(d)  # none

    def materialize_practical(self, s: int) -> np.ndarray:
        """Dense L(s) P."""
        if self.spec.lambda_family == "none":
            return np.eye(self.d)
        return self.dense_core(s) @ self._p

    def materialize(self, s: int) -> np.ndarray:
        """Dense W_s = P^H L(s) P."""
        if self.spec.lambda_family == "none":
            return np.eye(self.d)
        return conj_transpose(self._p) @ self.materialize_practical(s)

    def relative(self, r: int, s_anchor: int = 0) -> np.ndarray:
        """Dense relative matrix W_r via W_anchor^H W_{anchor+r}."""
        if s_anchor < 0 or s_anchor + r < 0:
            raise ValueError("absolute positions must be nonnegative")
        return conj_transpose(self.materialize(s_anchor)) @ self.materialize(s_anchor + r)


def encode_positions(spec: EncodingSpec, x: np.ndarray) -> np.ndarray:
    """Row s of the output is L(s) (P row_s(x)); vectorized over rows.

    O(n*d) core work plus one P application per row; the unitary family
    returns complex output, everything else stays real.
    """
    x = np.asarray(x)
    if x.ndim != 2 or x.shape[1] != spec.d:
        raise ValueError(f"input must be n x {spec.d}, got {x.shape}")
    if spec.lambda_family == "none":
        return x
    transform = PositionTransform(spec)
    y = transform.apply_p_rows(x)
    n = y.shape[0]
    positions = np.arange(n)
    fam = spec.lambda_family
    if fam == "unitary":
        phases = np.exp(1j * np.outer(positions, np.asarray(spec.theta.values)))
        return y * phases
    if fam in ("orthogonal", "mixed"):
        e = spec.rotated_dim
        angles = np.outer(positions, np.asarray(spec.theta.values))  # n x e/2
        c, si = np.cos(angles), np.sin(angles)
        out = np.array(y, dtype=np.float64, copy=True)
        ye = y[:, 0:e:2]
        yo = y[:, 1:e:2]
        out[:, 0:e:2] = ye * c - yo * si
        out[:, 1:e:2] = ye * si + yo * c
        return out
    # permutation: build pi^s tables incrementally, then gather per row
    pi = np.asarray(spec.perm.pi, dtype=np.intp)
    table = np.empty((n, spec.d), dtype=np.intp)
    if n > 0:
        table[0] = np.arange(spec.d)
    for s in range(1, n):
        table[s] = table[s - 1][pi]
    return np.take_along_axis(y, table, axis=1)


def relative_matrix(spec: EncodingSpec, r: int, s_anchor: int = 0) -> np.ndarray:
    """Dense W_r = W_anchor^H W_{anchor+r}; independent of the anchor."""
    return PositionTransform(spec).relative(r, s_anchor)


# ---------------------------------------------------------------------------
# scores and analytic theta gradients
# ---------------------------------------------------------------------------

def relative_score(spec: EncodingSpec, s: int, t: int, q: np.ndarray, k: np.ndarray) -> float:
    """Re[(L(s) P q)^H (L(t) P k)], the scalar attention score at (s, t)."""
    transform = PositionTransform(spec)
    qs = transform.apply(s, q)
    kt = transform.apply(t, k)
    return float(np.vdot(qs, kt).real)


def theta_grad_score(
    spec: EncodingSpec, s: int, t: int, q: np.ndarray, k: np.ndarray
) -> np.ndarray:
    """Analytic d(score)/d(alpha_j) of :func:`relative_score`.

    Only the families with a theta schedule support this; the permutation
    and none families raise.
    """
    if spec.theta is None:
        raise ValueError(f"{spec.lambda_family} family has no theta parameters")
    transform = PositionTransform(spec)
    u = transform.apply_p(np.asarray(q))
    w = transform.apply_p(np.asarray(k))
    alpha = np.asarray(spec.theta.values)
    r = t - s
    if spec.lambda_family == "unitary":
        # score_j = Re[conj(u_j) w_j exp(i r a_j)]
        c = np.conj(u) * w
        return -r * (c * np.exp(1j * r * alpha)).imag
    # orthogonal/mixed pairs: score_j = cos(r a_j)(ac + bd) + sin(r a_j)(bc - ad)
    e = spec.rotated_dim
    a, b = u[0:e:2], u[1:e:2]
    cc, dd = w[0:e:2], w[1:e:2]
    sym = a * cc + b * dd
    skew = b * cc - a * dd
    return r * (-np.sin(r * alpha) * sym + np.cos(r * alpha) * skew)


def perturbed_theta(spec: EncodingSpec, j: int, delta: float) -> EncodingSpec:
    """Copy of the spec with alpha_j shifted by delta (finite differences)."""
    if spec.theta is None:
        raise ValueError(f"{spec.lambda_family} family has no theta parameters")
    values = list(spec.theta.values)
    values[j] += delta
    return replace(spec, theta=replace(spec.theta, values=tuple(values)))
