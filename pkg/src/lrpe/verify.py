"""Independent oracles and property drivers.

The checkers here deliberately take the slow road: dense relative matrices,
explicit double loops, finite differences.  They share no evaluation order
with the fast paths they judge, which is the point.  Each check returns a
:class:`PropertyReport`; the negative controls construct transforms that the
corresponding checks must reject.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .attention import lrpe_scores
from .canonical import (
    additive_form,
    compose,
    cosformer_form,
    CosformerConfig,
    deberta_form,
    eval_additive,
    eval_cosformer,
    eval_deberta,
    eval_multiplicative,
    eval_rpr,
    multiplicative_form,
    random_additive_config,
    random_deberta_config,
    random_rpr_config,
    rpr_form,
)
from .encoding import (
    EncodingSpec,
    PositionTransform,
    conj_transpose,
    permutation_matrix,
    perm_power,
    perturbed_theta,
    relative_score,
    theta_grad_score,
)
from .numerics import Rng, fro_norm, random_mat


@dataclass(frozen=True)
class PropertyReport:
    name: str
    max_error: float
    tolerance: float
    passed: bool
    cases: int

    def __post_init__(self):
        if self.passed != (self.max_error <= self.tolerance):
            raise ValueError("passed flag must equal max_error <= tolerance")


def _report(name: str, max_error: float, tolerance: float, cases: int) -> PropertyReport:
    return PropertyReport(
        name=name,
        max_error=float(max_error),
        tolerance=tolerance,
        passed=bool(max_error <= tolerance),
        cases=cases,
    )


@dataclass(frozen=True)
class ScalingFit:
    sizes: tuple[int, ...]
    times: tuple[float, ...]
    slope: float
    r2: float

    def __post_init__(self):
        if len(self.sizes) < 4 or any(b <= a for a, b in zip(self.sizes, self.sizes[1:])):
            raise ValueError("need at least 4 strictly increasing sizes")


def _as_transform(spec_or_transform):
    if isinstance(spec_or_transform, EncodingSpec):
        return PositionTransform(spec_or_transform)
    return spec_or_transform


# ---------------------------------------------------------------------------
# dense score oracle
# ---------------------------------------------------------------------------

def oracle_scores(spec: EncodingSpec | None, q: np.ndarray, k: np.ndarray) -> np.ndarray:
    """Score matrix via dense relative matrices, O(n^2 d^2) on purpose.

    e_{st} = q_s^H W_{t-s} k_t with each W materialized from the transform;
    this is the quadratic-order reference the linearized path must match.
    """
    q = np.asarray(q)
    k = np.asarray(k)
    n = q.shape[0]
    if n > 256:
        raise ValueError("oracle is dense; n must be <= 256")
    if spec is None or spec.lambda_family == "none":
        return q @ np.asarray(k).conj().T
    transform = PositionTransform(spec)
    dtype = np.complex128 if spec.is_complex else np.float64
    out = np.empty((n, n), dtype=dtype)
    for s in range(n):
        for t in range(n):
            anchor = max(0, -(t - s))
            w = transform.relative(t - s, anchor)
            out[s, t] = np.vdot(q[s], w @ k[t])
    return out


# ---------------------------------------------------------------------------
# property checks
# ---------------------------------------------------------------------------

def check_unitarity(spec_or_transform, s_max: int = 64, tolerance: float = 1e-10) -> PropertyReport:
    """max over s of ||W_s^H W_s - I||_F."""
    transform = _as_transform(spec_or_transform)
    eye = np.eye(transform.d)
    worst = 0.0
    for s in range(s_max + 1):
        w = transform.materialize(s)
        worst = max(worst, fro_norm(conj_transpose(w) @ w - eye))
    return _report("unitarity", worst, tolerance, s_max + 1)


def check_decomposability(
    spec_or_transform, s_max: int = 32, tolerance: float = 1e-8
) -> PropertyReport:
    """max over s, t of ||W_s^H W_t - W_{t-s}||_F with W_{-r} = W_r^H."""
    transform = _as_transform(spec_or_transform)
    mats = [transform.materialize(s) for s in range(s_max + 1)]
    worst = 0.0
    for s in range(s_max + 1):
        left = conj_transpose(mats[s])
        for t in range(s_max + 1):
            r = t - s
            ref = mats[r] if r >= 0 else conj_transpose(mats[-r])
            worst = max(worst, fro_norm(left @ mats[t] - ref))
    return _report("decomposability", worst, tolerance, (s_max + 1) ** 2)


def check_anchor_independence(
    spec: EncodingSpec, r_max: int = 16, anchor_max: int = 16, tolerance: float = 1e-8
) -> PropertyReport:
    """relative(r, a) must not depend on a, for offsets of both signs."""
    transform = PositionTransform(spec)
    worst = 0.0
    cases = 0
    for r in range(-r_max, r_max + 1):
        base_anchor = max(0, -r)
        base = transform.relative(r, base_anchor)
        for anchor in range(base_anchor, anchor_max + 1):
            worst = max(worst, fro_norm(transform.relative(r, anchor) - base))
            cases += 1
    return _report("anchor_independence", worst, tolerance, cases)


def check_permutation_lemmas(spec: EncodingSpec) -> PropertyReport:
    """Dense core powers: L_k == L_1^k exactly for k <= 2*cycle_order, and
    L_k^T L_k == I exactly."""
    if spec.lambda_family != "permutation":
        raise ValueError("permutation lemmas need the permutation family")
    perm = spec.perm
    lam1 = permutation_matrix(perm.pi)
    power = np.eye(perm.d)
    worst = 0.0
    cases = 0
    for k in range(2 * perm.cycle_order + 1):
        lam_k = permutation_matrix(perm_power(perm.pi, k))
        worst = max(worst, float(np.abs(lam_k - power).max()))
        worst = max(worst, float(np.abs(lam_k.T @ lam_k - np.eye(perm.d)).max()))
        power = lam1 @ power
        cases += 1
    return _report("permutation_lemmas", worst, 0.0, cases)


def check_linear_vs_oracle(
    spec: EncodingSpec | None, n: int = 32, seed: int = 0, tolerance: float = 1e-8
) -> PropertyReport:
    """Linearized all-pairs scores against the dense oracle."""
    d = spec.d if spec is not None else 8
    rng = Rng(seed)
    q = random_mat(rng, n, d)
    k = random_mat(rng, n, d)
    diff = np.abs(lrpe_scores(spec, q, k) - oracle_scores(spec, q, k))
    return _report("linear_vs_oracle", float(diff.max()), tolerance, n * n)


def check_canonical_forms(
    d: int = 6, draws: int = 100, seed: int = 0, tolerance: float = 1e-10,
    rope_spec: EncodingSpec | None = None,
) -> PropertyReport:
    """Direct formula vs composed decomposition for the five methods."""
    from .encoding import make_spec, relative_matrix

    rng = Rng(seed)
    if rope_spec is None or rope_spec.lambda_family == "none" or rope_spec.d != d:
        rope_spec = make_spec("orthogonal", "householder", d=d if d % 2 == 0 else d + 1, seed=seed)
    add_cfg = random_additive_config(r_max=40, seed=seed + 1)
    deb_cfg = random_deberta_config(d, c=3, seed=seed + 2)
    rpr_cfg = random_rpr_config(d, k=4, seed=seed + 3)
    cos_cfg = CosformerConfig(alpha=0.37)
    rope_d = rope_spec.d
    rope_w = lambda r: relative_matrix(rope_spec, r, max(0, -r))
    forms = {
        "additive": (additive_form(add_cfg, d), None),
        "rope": (multiplicative_form(rope_w), None),
        "deberta": (deberta_form(deb_cfg, d), None),
        "rpr": (rpr_form(rpr_cfg, d), None),
        "cosformer": (cosformer_form(cos_cfg, d), None),
    }
    worst = 0.0
    cases = 0
    for _ in range(draws):
        q = random_mat(rng, 1, d)[0]
        k = random_mat(rng, 1, d)[0]
        qr = random_mat(rng, 1, rope_d)[0]
        kr = random_mat(rng, 1, rope_d)[0]
        s = rng.integer(20)
        t = rng.integer(20)
        direct = {
            "additive": eval_additive(q, k, t - s, add_cfg),
            "rope": eval_multiplicative(qr, kr, t - s, rope_w),
            "deberta": eval_deberta(q, k, s, t, deb_cfg),
            "rpr": eval_rpr(q, k, t - s, rpr_cfg),
            "cosformer": eval_cosformer(q, k, t - s, cos_cfg),
        }
        for name, (form, _) in forms.items():
            qq, kk = (qr, kr) if name == "rope" else (q, k)
            worst = max(worst, abs(direct[name] - compose(form, qq, kk, s, t)))
            cases += 1
    return _report("canonical_forms", worst, tolerance, cases)


def fd_gradient(
    spec: EncodingSpec, s: int, t: int, q: np.ndarray, k: np.ndarray, h: float = 1e-5
) -> np.ndarray:
    """Central-difference gradient of the score in each theta component."""
    if not 1e-7 <= h <= 1e-3:
        raise ValueError("h must lie in [1e-7, 1e-3]")
    if spec.theta is None:
        raise ValueError(f"{spec.lambda_family} family has no theta parameters")
    out = np.empty(len(spec.theta.values))
    for j in range(len(out)):
        plus = relative_score(perturbed_theta(spec, j, h), s, t, q, k)
        minus = relative_score(perturbed_theta(spec, j, -h), s, t, q, k)
        out[j] = (plus - minus) / (2.0 * h)
    return out


def check_gradients(
    spec: EncodingSpec, draws: int = 50, seed: int = 0, h: float = 1e-5,
    tolerance: float = 1e-4,
) -> PropertyReport:
    """Analytic theta gradient vs central differences, relative vector error."""
    rng = Rng(seed)
    worst = 0.0
    for _ in range(draws):
        q = random_mat(rng, 1, spec.d)[0]
        k = random_mat(rng, 1, spec.d)[0]
        s = rng.integer(8)
        t = s + 1 + rng.integer(8)
        analytic = theta_grad_score(spec, s, t, q, k)
        numeric = fd_gradient(spec, s, t, q, k, h)
        scale = max(np.linalg.norm(analytic), np.linalg.norm(numeric), 1e-12)
        worst = max(worst, float(np.linalg.norm(analytic - numeric) / scale))
    return _report("theta_gradient", worst, tolerance, draws)


# ---------------------------------------------------------------------------
# negative controls: the suite must catch these
# ---------------------------------------------------------------------------

class _DenseTransform:
    def __init__(self, d, materialize_fn):
        self.d = d
        self._fn = materialize_fn

    def materialize(self, s):
        return self._fn(s)


def corrupted_angle_transform(spec: EncodingSpec, delta: float = 0.3):
    """Orthogonal-family transform whose first rotation block mixes two
    different angles (cos of s*a, sin of s*(a + delta)): not orthogonal."""
    if spec.lambda_family not in ("orthogonal", "mixed"):
        raise ValueError("angle corruption applies to the rotation families")
    base = PositionTransform(spec)
    alpha0 = spec.theta.values[0]

    def materialize(s):
        core = base.dense_core(s)
        core[0, 1] = -np.sin(s * (alpha0 + delta))
        core[1, 0] = np.sin(s * (alpha0 + delta))
        p = base.materialize_practical(0)  # == P, since L(0) = I
        return conj_transpose(p) @ core @ p

    return _DenseTransform(spec.d, materialize)


def non_unitary_control(d: int = 2):
    """W_s = diag(1, s+1, 1, ...): neither unitary nor decomposable."""
    def materialize(s):
        w = np.eye(d)
        w[1, 1] = s + 1.0
        return w

    return _DenseTransform(d, materialize)


# ---------------------------------------------------------------------------
# scaling fits
# ---------------------------------------------------------------------------

def fit_scaling(runner, sizes, trials: int = 3) -> ScalingFit:
    """Least-squares slope of log(best wall time) against log(n).

    One untimed warmup per size, then best-of-``trials`` on the monotonic
    clock; any exception from a timed run propagates and aborts the fit.
    """
    sizes = tuple(int(n) for n in sizes)
    if len(sizes) < 4 or any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ValueError("need at least 4 strictly increasing sizes")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    times = []
    for n in sizes:
        runner(n)  # warmup
        best = None
        for _ in range(trials):
            start = time.perf_counter_ns()
            runner(n)
            elapsed = time.perf_counter_ns() - start
            best = elapsed if best is None else min(best, elapsed)
        times.append(best / 1e9)
    logn = np.log(np.asarray(sizes, dtype=np.float64))
    logt = np.log(np.asarray(times))
    slope, intercept = np.polyfit(logn, logt, 1)
    fitted = slope * logn + intercept
    ss_res = float(np.sum((logt - fitted) ** 2))
    ss_tot = float(np.sum((logt - logt.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return ScalingFit(sizes=sizes, times=tuple(times), slope=float(slope), r2=r2)
