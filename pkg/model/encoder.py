"""
Concept encoder: visual-dictionary filtering and an LSTM over shuffled concept embeddings.
"""

import logging
from dataclasses import dataclass
from typing import AbstractSet, Tuple

import numpy as np

from model import init
from model.vocabulary import UNK_ID, ConceptSet
from numcore import ops
from numcore.errors import DimensionError, VocabularyError
from numcore.tensor import Parameter, ParameterSet, Tensor

logger = logging.getLogger(__name__)


def filter_concepts(detections: ConceptSet, dictionary: AbstractSet[int], threshold: float) -> ConceptSet:
    """Keep dictionary concepts scored at or above ``threshold``, in input order."""
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"threshold must lie in [0, 1], got {threshold}")
    return ConceptSet(tuple((cid, score) for cid, score in detections
                            if cid in dictionary and score >= threshold))


class Embedding:
    """Vocabulary-sized lookup table."""

    def __init__(self, table: Parameter):
        self.table = table

    @classmethod
    def build(cls, params: ParameterSet, name: str, vocab_size: int, d: int,
              rng: np.random.Generator, scale: float) -> "Embedding":
        return cls(init.normal(params, name, (vocab_size, d), rng, scale))

    @property
    def rows(self) -> int:
        return self.table.shape[0]

    @property
    def dim(self) -> int:
        return self.table.shape[1]

    def lookup(self, ids) -> Tensor:
        return ops.embedding(self.table, ids)


@dataclass
class LstmParams:
    """Per-gate input weights W_*, recurrent weights U_* and biases b_*."""

    W_i: Parameter
    U_i: Parameter
    b_i: Parameter
    W_f: Parameter
    U_f: Parameter
    b_f: Parameter
    W_o: Parameter
    U_o: Parameter
    b_o: Parameter
    W_c: Parameter
    U_c: Parameter
    b_c: Parameter

    @classmethod
    def build(cls, params: ParameterSet, prefix: str, input_dim: int, hidden: int,
              rng: np.random.Generator, scale: float) -> "LstmParams":
        fields = {}
        for gate in ("i", "f", "o", "c"):
            fields[f"W_{gate}"] = init.normal(params, f"{prefix}.W_{gate}", (input_dim, hidden), rng, scale)
            fields[f"U_{gate}"] = init.normal(params, f"{prefix}.U_{gate}", (hidden, hidden), rng, scale)
            fields[f"b_{gate}"] = init.zeros(params, f"{prefix}.b_{gate}", (1, hidden))
        return cls(**fields)

    @property
    def input_dim(self) -> int:
        return self.W_i.shape[0]

    @property
    def hidden(self) -> int:
        return self.U_i.shape[0]


def _gate(x: Tensor, h: Tensor, W: Parameter, U: Parameter, b: Parameter) -> Tensor:
    return ops.add(ops.add(ops.matmul(x, W), ops.matmul(h, U)), b)


def lstm_step(x: Tensor, h: Tensor, c: Tensor, lstm: LstmParams) -> Tuple[Tensor, Tensor]:
    """One standard LSTM recurrence; returns (h', c')."""
    if x.shape != (1, lstm.input_dim):
        raise DimensionError("lstm_step input", x.shape, (1, lstm.input_dim))
    if h.shape != (1, lstm.hidden) or c.shape != (1, lstm.hidden):
        raise DimensionError("lstm_step state", h.shape, c.shape, (1, lstm.hidden))
    input_gate = ops.sigmoid(_gate(x, h, lstm.W_i, lstm.U_i, lstm.b_i))
    forget_gate = ops.sigmoid(_gate(x, h, lstm.W_f, lstm.U_f, lstm.b_f))
    output_gate = ops.sigmoid(_gate(x, h, lstm.W_o, lstm.U_o, lstm.b_o))
    candidate = ops.tanh(_gate(x, h, lstm.W_c, lstm.U_c, lstm.b_c))
    c_next = ops.add(ops.mul(forget_gate, c), ops.mul(input_gate, candidate))
    h_next = ops.mul(output_gate, ops.tanh(c_next))
    return h_next, c_next


def concept_order(count: int, order_seed: int) -> np.ndarray:
    """Seed-determined presentation order of ``count`` concepts."""
    return np.random.default_rng(order_seed).permutation(count)


def encode_concepts(concepts: ConceptSet, emb: Embedding, lstm: LstmParams, order_seed: int) -> Tensor:
    """Encode a concept set into v (1×d): the final LSTM hidden state.

    Concepts are fed in a shuffled order fixed by ``order_seed``; an empty set
    is encoded as the single token ``<UNK>``. The initial state is zero.
    """
    ids = concepts.ids
    for concept_id in ids:
        if not 0 <= concept_id < emb.rows:
            raise VocabularyError(f"concept id {concept_id} outside vocabulary of {emb.rows} tokens")
    if ids:
        ids = [ids[i] for i in concept_order(len(ids), order_seed)]
    else:
        logger.debug("Empty concept set encoded as <UNK>")
        ids = [UNK_ID]

    inputs = emb.lookup(ids)
    h = Tensor.zeros(1, lstm.hidden)
    c = Tensor.zeros(1, lstm.hidden)
    for row in ops.rows(inputs):
        h, c = lstm_step(row, h, c, lstm)
    return h
