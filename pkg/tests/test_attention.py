import numpy as np
import pytest

from lrpe import kernels
from lrpe.attention import (
    AttentionInput,
    attend,
    causal_linear_attention,
    DegenerateNormalizerError,
    linear_attention,
    lrpe_linear_attention,
    lrpe_scores,
    phi,
    vanilla_attention,
)
from lrpe.encoding import make_spec
from lrpe.numerics import Rng, random_mat

FAMILIES = [
    ("unitary", "fourier"),
    ("unitary", "householder"),
    ("orthogonal", "odd_even"),
    ("mixed", "householder"),
    ("permutation", "identity"),
    ("none", "identity"),
]


def _qkv(n, d, seed=0):
    rng = Rng(seed)
    return tuple(random_mat(rng, n, d) for _ in range(3))


# ---------------------------------------------------------------------------
# kernel map
# ---------------------------------------------------------------------------

def test_phi_values():
    assert phi(np.array([0.0]))[0] == 1.0
    assert phi(np.array([3.0]))[0] == 4.0
    assert phi(np.array([-20.0]))[0] == pytest.approx(np.exp(-20.0))
    assert phi(np.array([-20.0]))[0] > 0.0


def test_phi_is_strictly_positive_and_finite():
    x = np.linspace(-700, 700, 2001)
    out = phi(x)
    assert np.all(out > 0.0)
    assert np.all(np.isfinite(out))


# ---------------------------------------------------------------------------
# vanilla attention
# ---------------------------------------------------------------------------

def test_vanilla_single_row_passes_value_through():
    q, k, v = _qkv(1, 4, seed=1)
    np.testing.assert_allclose(vanilla_attention(q, k, v).o, v)


def test_vanilla_identical_keys_average_values():
    rng = Rng(2)
    q = random_mat(rng, 5, 3)
    k = np.tile(random_mat(rng, 1, 3), (5, 1))
    v = random_mat(rng, 5, 3)
    out = vanilla_attention(q, k, v)
    np.testing.assert_allclose(out.o, np.tile(v.mean(axis=0), (5, 1)), atol=1e-12)


def test_vanilla_matches_scalar_loop():
    q, k, v = _qkv(3, 2, seed=3)
    out = vanilla_attention(q, k, v)
    d = 2
    ref = np.zeros((3, 2))
    for s in range(3):
        logits = [sum(q[s, m] * k[t, m] for m in range(d)) / np.sqrt(d) for t in range(3)]
        weights = np.exp(logits)
        weights /= weights.sum()
        for t in range(3):
            ref[s] += weights[t] * v[t]
    np.testing.assert_allclose(out.o, ref, atol=1e-12)


def test_vanilla_causal_masks_future():
    q, k, v = _qkv(6, 4, seed=4)
    out = vanilla_attention(q, k, v, causal=True)
    np.testing.assert_allclose(out.o[0], v[0], atol=1e-12)
    # changing future keys/values must not move earlier rows
    k2, v2 = k.copy(), v.copy()
    k2[4:] += 3.0
    v2[4:] -= 5.0
    out2 = vanilla_attention(q, k2, v2, causal=True)
    np.testing.assert_allclose(out.o[:4], out2.o[:4], atol=1e-12)


# ---------------------------------------------------------------------------
# linear attention
# ---------------------------------------------------------------------------

def _quadratic_reference(q, k, v, causal=False):
    weights = phi(q) @ phi(k).T
    if causal:
        weights = np.tril(weights)
    return weights @ v / weights.sum(axis=1, keepdims=True)


def test_linear_equals_quadratic_order():
    q, k, v = _qkv(16, 8, seed=5)
    out = linear_attention(q, k, v)
    np.testing.assert_allclose(out.o, _quadratic_reference(q, k, v), atol=1e-10)


def test_linear_single_row():
    q, k, v = _qkv(1, 5, seed=6)
    np.testing.assert_allclose(linear_attention(q, k, v).o, v)


def test_linear_identical_keys_average_values():
    rng = Rng(7)
    q = random_mat(rng, 4, 3)
    k = np.tile(random_mat(rng, 1, 3), (4, 1))
    v = random_mat(rng, 4, 3)
    out = linear_attention(q, k, v)
    np.testing.assert_allclose(out.o, np.tile(v.mean(axis=0), (4, 1)), atol=1e-10)
    van = vanilla_attention(q, k, v)
    np.testing.assert_allclose(out.o, van.o, atol=1e-10)


def test_linear_row_sums_and_positivity():
    q, k, v = _qkv(12, 6, seed=8)
    out = linear_attention(q, k, v)
    weights = phi(q) @ phi(k).T
    assert np.all(weights >= 0.0)
    norm = weights / out.delta[:, None]
    np.testing.assert_allclose(norm.sum(axis=1), np.ones(12), atol=1e-8)


def test_causal_linear_matches_masked_quadratic():
    q, k, v = _qkv(16, 8, seed=9)
    out = causal_linear_attention(q, k, v)
    np.testing.assert_allclose(out.o, _quadratic_reference(q, k, v, causal=True), atol=1e-10)


def test_causal_position_zero_returns_first_value():
    q, k, v = _qkv(5, 4, seed=10)
    np.testing.assert_allclose(causal_linear_attention(q, k, v).o[0], v[0], atol=1e-12)


def test_causal_prefix_invariance():
    q, k, v = _qkv(10, 4, seed=11)
    full = causal_linear_attention(q, k, v)
    trunc = causal_linear_attention(q[:6], k[:6], v[:6])
    np.testing.assert_allclose(full.o[:6], trunc.o, atol=1e-12)


def test_degenerate_normalizer_raises():
    # phi underflows to exactly 0.0 for very negative keys, so delta hits the
    # hard floor and the guard must refuse to divide
    q = np.zeros((2, 2))
    k = np.full((2, 2), -800.0)
    v = np.ones((2, 2))
    with pytest.raises(DegenerateNormalizerError):
        linear_attention(q, k, v)
    with pytest.raises(DegenerateNormalizerError):
        causal_linear_attention(q, k, v)


def test_near_cancelling_rotation_normalizer():
    # a pi rotation makes the encoded K rows at s=0,1 cancel to rounding; the
    # normalizers land around 1e-16, which is *above* the 1e-30 floor, so the
    # division must proceed and stay finite rather than erroring or clamping
    from dataclasses import replace
    from lrpe.encoding import make_theta

    spec = replace(
        make_spec("orthogonal", "identity", d=2),
        theta=replace(make_theta("a", 2, count=1), values=(np.pi,)),
    )
    q = np.zeros((2, 2))
    k = np.zeros((2, 2))
    v = np.ones((2, 2))
    out = lrpe_linear_attention(q, k, v, spec)
    assert np.all(np.isfinite(out.o))
    assert np.all(np.abs(out.delta) < 1e-12)


def test_shapes_must_conform():
    q, k, v = _qkv(4, 3, seed=12)
    with pytest.raises(ValueError):
        linear_attention(q, k[:3], v)
    with pytest.raises(ValueError):
        lrpe_linear_attention(q, k, v, make_spec("orthogonal", d=8))


# ---------------------------------------------------------------------------
# encoded linear attention
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("fam,p", FAMILIES)
@pytest.mark.parametrize("causal", [False, True])
def test_lrpe_linear_matches_encoded_quadratic(fam, p, causal):
    d = 8
    spec = make_spec(fam, p, d=d, seed=13)
    q, k, v = _qkv(16, d, seed=14)
    out = lrpe_linear_attention(q, k, v, spec, causal=causal)
    scores = lrpe_scores(spec, phi(q), phi(k))
    weights = scores.real if np.iscomplexobj(scores) else scores
    if causal:
        weights = np.tril(weights)
    ref = weights @ v / weights.sum(axis=1, keepdims=True)
    np.testing.assert_allclose(out.o, ref, atol=1e-8)
    np.testing.assert_allclose(out.delta, weights.sum(axis=1), atol=1e-8)


def test_lrpe_with_none_spec_equals_plain_linear():
    q, k, v = _qkv(9, 5, seed=15)
    a = lrpe_linear_attention(q, k, v, make_spec("none", d=5))
    b = linear_attention(q, k, v)
    np.testing.assert_array_equal(a.o, b.o)
    c = lrpe_linear_attention(q, k, v, None)
    np.testing.assert_array_equal(c.o, b.o)


def test_lrpe_scores_shift_covariance():
    # prepending one row shifts all positions by one; offset-matched scores
    # must be unchanged because they depend on t - s only
    d = 6
    spec = make_spec("orthogonal", "householder", d=d, seed=16)
    rng = Rng(17)
    q = random_mat(rng, 7, d)
    k = random_mat(rng, 7, d)
    extra_q = random_mat(rng, 1, d)
    extra_k = random_mat(rng, 1, d)
    base = lrpe_scores(spec, q, k)
    shifted = lrpe_scores(spec, np.vstack([extra_q, q]), np.vstack([extra_k, k]))
    np.testing.assert_allclose(shifted[1:, 1:], base, atol=1e-10)


def test_encode_before_kernel_flag():
    d = 4
    q, k, v = _qkv(6, d, seed=18)
    spec = make_spec("orthogonal", "identity", d=d, seed=19)
    swapped = lrpe_linear_attention(q, k, v, spec, encode_before_kernel=True)
    default = lrpe_linear_attention(q, k, v, spec)
    assert not np.allclose(swapped.o, default.o)  # genuinely different order
    with pytest.raises(ValueError):
        lrpe_linear_attention(q, k, v, make_spec("unitary", d=d), encode_before_kernel=True)


def test_attend_dispatch():
    q, k, v = _qkv(5, 4, seed=20)
    inp = AttentionInput(q=q, k=k, v=v, causal=False, spec=None)
    np.testing.assert_array_equal(attend(inp).o, linear_attention(q, k, v).o)
    np.testing.assert_array_equal(attend(inp, vanilla=True).o, vanilla_attention(q, k, v).o)


def test_outputs_are_finite():
    q, k, v = _qkv(8, 4, seed=21)
    for fam, p in FAMILIES:
        out = lrpe_linear_attention(q, k, v, make_spec(fam, p, d=4, seed=22))
        assert np.all(np.isfinite(out.o))


# ---------------------------------------------------------------------------
# kernel backends
# ---------------------------------------------------------------------------

def test_backends_agree_real():
    rng = Rng(23)
    qf = phi(random_mat(rng, 64, 8))
    kf = phi(random_mat(rng, 64, 8))
    v = random_mat(rng, 64, 8)
    numer_py, delta_py = kernels.causal_scan(qf, kf, v, backend="python")
    if kernels.HAVE_COMPILED:
        numer_cy, delta_cy = kernels.causal_scan(qf, kf, v, backend="compiled")
        np.testing.assert_allclose(numer_cy, numer_py, rtol=1e-12, atol=1e-9)
        np.testing.assert_allclose(delta_cy, delta_py, rtol=1e-12, atol=1e-9)


def test_backends_agree_complex():
    rng = Rng(24)
    qf = random_mat(rng, 32, 4) + 1j * random_mat(rng, 32, 4)
    kf = random_mat(rng, 32, 4) + 1j * random_mat(rng, 32, 4)
    v = random_mat(rng, 32, 4).astype(np.complex128)
    numer_py, delta_py = kernels.causal_scan(qf, kf, v, backend="python")
    if kernels.HAVE_COMPILED:
        numer_cy, delta_cy = kernels.causal_scan(qf, kf, v, backend="compiled")
        np.testing.assert_allclose(numer_cy, numer_py, rtol=1e-12, atol=1e-9)
        np.testing.assert_allclose(delta_cy, delta_py, rtol=1e-12, atol=1e-9)


def test_backend_name_is_reported():
    assert kernels.BACKEND in ("compiled", "python")
