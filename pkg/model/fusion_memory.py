"""
Fusion memory (FM): multi-head self-attention over the stacked concept vector
and previous word embedding, flattened through a linear layer into f_t.
"""

import math
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from model import init
from numcore import ops
from numcore.errors import ContractError, DimensionError
from numcore.tensor import Parameter, ParameterSet, Tensor


@dataclass
class FmHead:
    U_q: Parameter
    U_k: Parameter
    U_v: Parameter


@dataclass
class FmParams:
    """Per-head projections, the flattening output layer and the logit scale λ₁."""

    heads: List[FmHead]
    W_o: Parameter
    b_o: Parameter
    lambda1: float

    @classmethod
    def build(cls, params: ParameterSet, prefix: str, d: int, H: int, d_k: int, d_v: int,
              lambda1: float, rng: np.random.Generator, scale: float) -> "FmParams":
        heads = [
            FmHead(
                U_q=init.normal(params, f"{prefix}.head{h}.U_q", (d, d_k), rng, scale),
                U_k=init.normal(params, f"{prefix}.head{h}.U_k", (d, d_k), rng, scale),
                U_v=init.normal(params, f"{prefix}.head{h}.U_v", (d, d_v), rng, scale),
            )
            for h in range(H)
        ]
        W_o = init.normal(params, f"{prefix}.W_o", (2 * H * d_v, d), rng, scale)
        b_o = init.zeros(params, f"{prefix}.b_o", (1, d))
        return cls(heads, W_o, b_o, lambda1)

    @property
    def d(self) -> int:
        return self.heads[0].U_q.shape[0]


@dataclass
class FmAttention:
    """Per-head 2×2 row-stochastic matrices; rows are queries (v, w_{t-1})."""

    weights: List[np.ndarray] = field(default_factory=list)
    logits: List[np.ndarray] = field(default_factory=list)

    @property
    def average(self) -> np.ndarray:
        return np.mean(self.weights, axis=0)


def fm_forward(v: Tensor, w_prev: Tensor, p: FmParams) -> Tuple[Tensor, FmAttention]:
    """f_t = FC(flatten([A_h · x U_v^h]_h)), A_h = softmax(x U_q^h (x U_k^h)ᵀ / √λ₁), x = [v; w_prev]."""
    if p.lambda1 <= 0:
        raise ContractError(f"lambda1 must be positive, got {p.lambda1}")
    if v.shape != (1, p.d) or w_prev.shape != (1, p.d):
        raise DimensionError("fm_forward", v.shape, w_prev.shape, (1, p.d))

    x = ops.concat_rows([v, w_prev])
    inv_sqrt = 1.0 / math.sqrt(p.lambda1)
    attention = FmAttention()
    attended = []
    for head in p.heads:
        logits = ops.scale(ops.matmul(ops.matmul(x, head.U_q),
                                      ops.transpose(ops.matmul(x, head.U_k))), inv_sqrt)
        weights = ops.softmax_rows(logits)
        attended.append(ops.matmul(weights, ops.matmul(x, head.U_v)))
        attention.logits.append(logits.numpy())
        attention.weights.append(weights.numpy())

    joint = ops.concat_cols(attended)
    flat = ops.reshape(joint, (1, joint.size))
    f_t = ops.add(ops.matmul(flat, p.W_o), p.b_o)
    return f_t, attention


@dataclass
class LinearFusion:
    """Ablation without FM: f_t = [v, w_prev] W + b."""

    W: Parameter
    b: Parameter

    @classmethod
    def build(cls, params: ParameterSet, prefix: str, d: int,
              rng: np.random.Generator, scale: float) -> "LinearFusion":
        return cls(init.normal(params, f"{prefix}.W", (2 * d, d), rng, scale),
                   init.zeros(params, f"{prefix}.b", (1, d)))


def linear_fusion(v: Tensor, w_prev: Tensor, p: LinearFusion) -> Tensor:
    d = p.W.shape[1]
    if v.shape != (1, d) or w_prev.shape != (1, d):
        raise DimensionError("linear_fusion", v.shape, w_prev.shape, (1, d))
    return ops.add(ops.matmul(ops.concat_cols([v, w_prev]), p.W), p.b)
