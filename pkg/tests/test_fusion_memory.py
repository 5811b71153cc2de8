import numpy as np
import pytest

from harness.gradchecks import fm_grad_check
from model.fusion_memory import FmParams, LinearFusion, fm_forward, linear_fusion
from numcore import ops
from numcore.errors import ContractError, DimensionError
from numcore.tensor import Graph, ParameterSet, Tensor


def build_fm(rng, d=8, H=2):
    params = ParameterSet()
    width = d // H
    return params, FmParams.build(params, "fm", d, H, width, width, float(width), rng, 0.3)


def test_output_shape_and_attention_layout(rng):
    _, fm = build_fm(rng)
    f_t, attention = fm_forward(Tensor(rng.normal(size=(1, 8))), Tensor(rng.normal(size=(1, 8))), fm)
    assert f_t.shape == (1, 8)
    assert len(attention.weights) == 2
    for weights in attention.weights:
        assert weights.shape == (2, 2)
        np.testing.assert_allclose(weights.sum(axis=1), 1.0, atol=1e-12)
    assert attention.average.shape == (2, 2)


def test_zero_query_key_projections_give_uniform_attention(rng):
    _, fm = build_fm(rng)
    for head in fm.heads:
        head.U_q.data[...] = 0.0
        head.U_k.data[...] = 0.0
    _, attention = fm_forward(Tensor(rng.normal(size=(1, 8))), Tensor(rng.normal(size=(1, 8))), fm)
    for weights in attention.weights:
        np.testing.assert_array_equal(weights, np.full((2, 2), 0.5))


def test_non_positive_scale_is_a_contract_error(rng):
    _, fm = build_fm(rng)
    fm.lambda1 = 0.0
    with pytest.raises(ContractError):
        fm_forward(Tensor(np.ones((1, 8))), Tensor(np.ones((1, 8))), fm)


def test_input_width_is_checked(rng):
    _, fm = build_fm(rng)
    with pytest.raises(DimensionError):
        fm_forward(Tensor(np.ones((1, 6))), Tensor(np.ones((1, 8))), fm)


@pytest.mark.parametrize("seed, H", [(42, 2), (7, 1), (3, 4)])
def test_fm_gradients(seed, H):
    assert fm_grad_check(seed, H=H).passed()


def test_zero_inputs_give_zero_query_key_gradients(rng):
    params, fm = build_fm(rng)
    with Graph() as graph:
        f_t, _ = fm_forward(Tensor.zeros(1, 8), Tensor.zeros(1, 8), fm)
        loss = ops.l2_norm_sq(ops.add(f_t, Tensor(np.ones((1, 8)))))
    grads = graph.backward(loss)
    for head in fm.heads:
        for param in (head.U_q, head.U_k):
            np.testing.assert_array_equal(grads.get(param.name, np.zeros(param.shape)), np.zeros(param.shape))
    assert np.any(grads["fm.b_o"] != 0)


def test_linear_fusion_concatenates_inputs(rng):
    params = ParameterSet()
    fusion = LinearFusion.build(params, "fusion", 4, rng, 0.3)
    v, w_prev = Tensor(rng.normal(size=(1, 4))), Tensor(rng.normal(size=(1, 4)))
    expected = np.concatenate([v.data, w_prev.data], axis=1) @ fusion.W.data + fusion.b.data
    np.testing.assert_allclose(linear_fusion(v, w_prev, fusion).data, expected, atol=1e-14)


def test_attention_rows_are_distributions_over_many_passes(rng):
    _, fm = build_fm(rng)
    for _ in range(1000):
        scale = rng.uniform(0.1, 10.0)
        v, w_prev = (Tensor(scale * rng.normal(size=(1, 8))) for _ in range(2))
        _, attention = fm_forward(v, w_prev, fm)
        for weights in attention.weights:
            assert np.all(np.isfinite(weights))
            assert np.all(weights >= 0.0)
            np.testing.assert_allclose(weights.sum(axis=1), 1.0, atol=1e-9)


def test_logits_are_scaled_by_inverse_root_lambda(rng):
    _, fm = build_fm(rng)
    v, w_prev = Tensor(rng.normal(size=(1, 8))), Tensor(rng.normal(size=(1, 8)))
    x = np.concatenate([v.data, w_prev.data])
    _, attention = fm_forward(v, w_prev, fm)
    for head, logits in zip(fm.heads, attention.logits):
        raw = (x @ head.U_q.data) @ (x @ head.U_k.data).T
        np.testing.assert_allclose(logits, raw / np.sqrt(fm.lambda1), rtol=1e-12, atol=1e-14)

    fm.lambda1 *= 4.0
    _, quartered = fm_forward(v, w_prev, fm)
    for before, after in zip(attention.logits, quartered.logits):
        np.testing.assert_allclose(after, before / 2.0, rtol=1e-12, atol=1e-14)
