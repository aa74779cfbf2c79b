"""Decomposable relative positional encodings for linear attention.

The package provides:

* :mod:`lrpe.numerics` -- pinned deterministic RNG and small matrix helpers
* :mod:`lrpe.encoding` -- theta schedules, core families, P families,
  position transforms, dense relative matrices, analytic theta gradients
* :mod:`lrpe.canonical` -- canonical decompositions of published relative
  encodings (additive, rotary-style multiplicative, DeBERTa, RPR, cosFormer)
* :mod:`lrpe.attention` -- softmax attention and the linear paths, with and
  without position encoding
* :mod:`lrpe.verify` -- dense oracles, property checkers, negative controls,
  finite differences, log-log scaling fits
* :mod:`lrpe.cli` -- the ``lrpe`` command (check / bench / dump)
"""

from .attention import (
    AttentionInput,
    AttentionOutput,
    causal_linear_attention,
    DegenerateNormalizerError,
    linear_attention,
    lrpe_linear_attention,
    lrpe_scores,
    phi,
    vanilla_attention,
)
from .encoding import (
    EncodingSpec,
    PermutationSpec,
    PositionTransform,
    ThetaSchedule,
    build_p,
    encode_positions,
    lambda_orthogonal,
    lambda_permutation,
    lambda_unitary,
    make_permutation,
    make_spec,
    make_theta,
    parse_spec,
    relative_matrix,
    relative_score,
    render_spec,
    theta_grad_score,
)
from .numerics import Mat, Rng, conj_transpose, fro_norm, matmul, random_mat
from .verify import (
    PropertyReport,
    ScalingFit,
    check_decomposability,
    check_unitarity,
    fd_gradient,
    fit_scaling,
    oracle_scores,
)

__version__ = "0.1.0"
