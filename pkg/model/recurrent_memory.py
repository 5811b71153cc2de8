"""
Recurrent memory (RM) unit: memory-guided multi-head attention, the residual
MLP block ψ with layer normalization, and the relational gate.
"""

import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from model import init
from numcore import ops
from numcore.errors import ContractError, DimensionError, NumericError
from numcore.tensor import Parameter, ParameterSet, Tensor


@dataclass
class MemoryState:
    """Memory matrix M (N×d). ``cell`` is only used when an LSTM stands in for RM."""

    matrix: Tensor
    cell: Optional[Tensor] = None

    @classmethod
    def zeros(cls, rows: int, d: int, with_cell: bool = False) -> "MemoryState":
        return cls(Tensor.zeros(rows, d), Tensor.zeros(rows, d) if with_cell else None)

    @property
    def rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def d(self) -> int:
        return self.matrix.shape[1]

    def check_finite(self) -> "MemoryState":
        if not np.isfinite(self.matrix.data).all():
            raise NumericError("memory state contains NaN or infinite values")
        return self


@dataclass
class RmHead:
    W_q: Parameter
    W_k: Parameter
    W_v: Parameter


@dataclass
class RmParams:
    """Attention heads, ψ (MLP + two layer norms) and the relational gate."""

    heads: List[RmHead]
    lambda2: float
    W_1: Parameter
    b_1: Parameter
    W_2: Parameter
    b_2: Parameter
    ln1_gain: Parameter
    ln1_bias: Parameter
    ln2_gain: Parameter
    ln2_bias: Parameter
    W_i: Parameter
    U_i: Parameter
    b_i: Parameter
    W_f: Parameter
    U_f: Parameter
    b_f: Parameter
    ln_eps: float = 1e-5

    @classmethod
    def build(cls, params: ParameterSet, prefix: str, d: int, H: int, d_K: int, d_V: int,
              lambda2: float, rng: np.random.Generator, scale: float,
              ln_eps: float = 1e-5) -> "RmParams":
        if H * d_V != d:
            raise DimensionError("RmParams", (H, d_V), (d,), detail="H*d_V must equal d")
        heads = [
            RmHead(
                W_q=init.normal(params, f"{prefix}.head{h}.W_q", (d, d_K), rng, scale),
                W_k=init.normal(params, f"{prefix}.head{h}.W_k", (d, d_K), rng, scale),
                W_v=init.normal(params, f"{prefix}.head{h}.W_v", (d, d_V), rng, scale),
            )
            for h in range(H)
        ]
        return cls(
            heads=heads,
            lambda2=lambda2,
            W_1=init.normal(params, f"{prefix}.psi.W_1", (d, d), rng, scale),
            b_1=init.zeros(params, f"{prefix}.psi.b_1", (1, d)),
            W_2=init.normal(params, f"{prefix}.psi.W_2", (d, d), rng, scale),
            b_2=init.zeros(params, f"{prefix}.psi.b_2", (1, d)),
            ln1_gain=init.ones(params, f"{prefix}.psi.ln1_gain", (1, d)),
            ln1_bias=init.zeros(params, f"{prefix}.psi.ln1_bias", (1, d)),
            ln2_gain=init.ones(params, f"{prefix}.psi.ln2_gain", (1, d)),
            ln2_bias=init.zeros(params, f"{prefix}.psi.ln2_bias", (1, d)),
            W_i=init.normal(params, f"{prefix}.gate.W_i", (d, d), rng, scale),
            U_i=init.normal(params, f"{prefix}.gate.U_i", (d, d), rng, scale),
            b_i=init.zeros(params, f"{prefix}.gate.b_i", (1, d)),
            W_f=init.normal(params, f"{prefix}.gate.W_f", (d, d), rng, scale),
            U_f=init.normal(params, f"{prefix}.gate.U_f", (d, d), rng, scale),
            b_f=init.zeros(params, f"{prefix}.gate.b_f", (1, d)),
            ln_eps=ln_eps,
        )

    @property
    def d(self) -> int:
        return self.W_1.shape[0]


@dataclass
class RmAttention:
    """Per-head rows [M→M, f→M] (N×(N+1) in general, 1×2 for N=1)."""

    weights: List[np.ndarray] = field(default_factory=list)


def _check_inputs(op: str, M_prev: MemoryState, f_t: Tensor, d: int) -> None:
    if M_prev.d != d or f_t.shape != (1, d):
        raise DimensionError(op, M_prev.matrix.shape, f_t.shape, detail=f"memory width {d}")


def rm_attend(M_prev: MemoryState, f_t: Tensor, p: RmParams) -> Tuple[Tensor, RmAttention]:
    """M'_t: queries from M_prev, keys/values from [M_prev; f_t], heads concatenated."""
    if p.lambda2 <= 0:
        raise ContractError(f"lambda2 must be positive, got {p.lambda2}")
    _check_inputs("rm_attend", M_prev, f_t, p.d)
    memory = M_prev.matrix
    joint = ops.concat_rows([memory, f_t])
    inv_sqrt = 1.0 / math.sqrt(p.lambda2)
    attention = RmAttention()
    outputs = []
    for head in p.heads:
        logits = ops.scale(ops.matmul(ops.matmul(memory, head.W_q),
                                      ops.transpose(ops.matmul(joint, head.W_k))), inv_sqrt)
        weights = ops.softmax_rows(logits)
        outputs.append(ops.matmul(weights, ops.matmul(joint, head.W_v)))
        attention.weights.append(weights.numpy())
    return ops.concat_cols(outputs), attention


def psi(M_attended: Tensor, M_prev: MemoryState, p: RmParams) -> Tensor:
    """Memory gain: h = LN₁(M' + M_prev); M̃ = LN₂(h + MLP(h)), MLP = linear→tanh→linear."""
    if M_attended.shape != M_prev.matrix.shape:
        raise DimensionError("psi", M_attended.shape, M_prev.matrix.shape)
    rows = M_attended.shape[0]
    h = ops.layer_norm(ops.add(M_attended, M_prev.matrix), p.ln1_gain, p.ln1_bias, p.ln_eps)
    hidden = ops.tanh(ops.add(ops.matmul(h, p.W_1), _tile(p.b_1, rows)))
    mlp = ops.add(ops.matmul(hidden, p.W_2), _tile(p.b_2, rows))
    return ops.layer_norm(ops.add(h, mlp), p.ln2_gain, p.ln2_bias, p.ln_eps)


def relational_gate(f_t: Tensor, M_prev: MemoryState, M_gain: Tensor, p: RmParams) -> MemoryState:
    """M_t = g_i ⊙ tanh(M̃_t) + g_f ⊙ M_prev with elementwise sigmoid gates."""
    _check_inputs("relational_gate", M_prev, f_t, p.d)
    if M_gain.shape != M_prev.matrix.shape:
        raise DimensionError("relational_gate", M_gain.shape, M_prev.matrix.shape)
    rows = M_prev.rows
    squashed = ops.tanh(M_prev.matrix)
    input_gate = ops.sigmoid(ops.add(ops.add(_tile(ops.matmul(f_t, p.W_i), rows),
                                             ops.matmul(squashed, p.U_i)), _tile(p.b_i, rows)))
    forget_gate = ops.sigmoid(ops.add(ops.add(_tile(ops.matmul(f_t, p.W_f), rows),
                                              ops.matmul(squashed, p.U_f)), _tile(p.b_f, rows)))
    memory = ops.add(ops.mul(input_gate, ops.tanh(M_gain)), ops.mul(forget_gate, M_prev.matrix))
    return MemoryState(memory)


def rm_step(M_prev: MemoryState, f_t: Tensor, p: RmParams) -> Tuple[MemoryState, RmAttention]:
    """M_t = RM(M_{t-1}, f_t): attend, ψ, relational gate."""
    attended, attention = rm_attend(M_prev, f_t, p)
    gain = psi(attended, M_prev, p)
    return relational_gate(f_t, M_prev, gain, p), attention


def _tile(row: Tensor, count: int) -> Tensor:
    return row if count == 1 else ops.concat_rows([row] * count)
