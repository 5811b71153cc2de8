"""
Finite-difference checks of every parameter group on a tiny model.
"""

import logging
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from config import settings
from config.train_config import TrainConfig
from model.encoder import LstmParams, lstm_step
from model.fusion_memory import FmParams, fm_forward
from model.losses import (LossWeights, corpus_loss, image_loss, rec_loss, similarity_matrix, triplet_loss,
                          xe_loss)
from model.recurrent_memory import MemoryState, RmParams, rm_step
from model.seq2seq import R2MModel
from model.vocabulary import ConceptSet, Vocabulary
from numcore import ops
from numcore.gradcheck import DEFAULT_EPS, GradCheckReport, grad_check
from numcore.tensor import Parameter, ParameterSet, Tensor

logger = logging.getLogger(__name__)

TINY_DIMENSIONS = dict(d=8, H=2, d_k=4, d_v=4, d_K=4, d_V=4, N=1, d_img=6)
TINY_VOCAB_SIZE = 20
TINY_INIT_SCALE = 0.3
MODEL_MAX_ENTRIES = 16  # per tensor in the whole-model checks; block checks cover every entry

PARAMETER_GROUPS: Dict[str, Tuple[str, ...]] = {
    "encoder": ("embedding.", "encoder."),
    "fusion": ("fm.", "fusion."),
    "decoder": ("decoder.rm.head", "decoder.rm.psi", "decoder.lstm."),
    "gates": ("decoder.rm.gate", "reconstructor.rm.gate"),
    "reconstructor": ("reconstructor.rm.head", "reconstructor.rm.psi", "reconstructor.lstm."),
    "word_head": ("head.",),
    "similarity": ("similarity.",),
}


def tiny_vocabulary(size: int = TINY_VOCAB_SIZE) -> Vocabulary:
    return Vocabulary(list(settings.RESERVED_TOKENS) + [f"w{i}" for i in range(size - len(settings.RESERVED_TOKENS))])


def tiny_config(base: Optional[TrainConfig] = None, seed: int = 0) -> TrainConfig:
    """``base`` switches and loss weights at gradient-check dimensions."""
    base = base or TrainConfig()
    return base.replace(seed=seed, init_scale=TINY_INIT_SCALE, **TINY_DIMENSIONS)


def group_of(name: str) -> str:
    for group, prefixes in PARAMETER_GROUPS.items():
        if name.startswith(prefixes):
            return group
    return "other"


def select(model: R2MModel, groups: Sequence[str]) -> List[Parameter]:
    return [p for p in model.params if group_of(p.name) in groups]


def corpus_closure(model: R2MModel, rng: np.random.Generator) -> Callable[[], Tensor]:
    """L_S on one teacher-forced sentence with fixed concepts and targets."""
    vocab_size = len(model.vocab)
    concepts = ConceptSet.from_ids(rng.choice(np.arange(3, vocab_size), size=3, replace=False).tolist())
    targets = rng.integers(3, vocab_size, size=4).tolist() + [model.vocab.end_id]
    weights = LossWeights.from_config(model.config)

    def closure() -> Tensor:
        v = model.encode(concepts, order_seed=7)
        logits, trace = model.decode_teacher_forced(v, targets)
        return corpus_loss(xe_loss(logits, targets), rec_loss(v, model.reconstruct(trace)), weights.beta)

    return closure


def image_closure(model: R2MModel, rng: np.random.Generator, batch: int = 3) -> Callable[[], Tensor]:
    """L_I over a small batch; decoding is teacher-forced so the closure is smooth."""
    vocab_size = len(model.vocab)
    concept_sets = [ConceptSet.from_ids(rng.choice(np.arange(3, vocab_size), size=2, replace=False).tolist())
                    for _ in range(batch)]
    targets = [rng.integers(3, vocab_size, size=3).tolist() + [model.vocab.end_id] for _ in range(batch)]
    features = Tensor(rng.normal(size=(batch, model.config.d_img)))
    weights = LossWeights.from_config(model.config)

    def closure() -> Tensor:
        vectors, recons = [], []
        for concepts, target in zip(concept_sets, targets):
            v = model.encode(concepts, order_seed=3)
            _, trace = model.decode_teacher_forced(v, target)
            vectors.append(v)
            recons.append(model.reconstruct(trace))
        S = similarity_matrix(features, ops.concat_rows(recons), model.similarity)
        rec = rec_loss(vectors[0], recons[0])
        for v, r in zip(vectors[1:], recons[1:]):
            rec = ops.add(rec, rec_loss(v, r))
        return image_loss(triplet_loss(S, weights.margin), ops.scale(rec, 1.0 / batch), weights.gamma)

    return closure


def _block_inputs(rng: np.random.Generator, d: int, count: int, zero: bool) -> List[Tensor]:
    return [Tensor(np.zeros((1, d)) if zero else rng.normal(size=(1, d))) for _ in range(count)]


def fm_grad_check(seed: int, H: int = 2, d: int = 8, zero_inputs: bool = False,
                  eps: float = DEFAULT_EPS) -> GradCheckReport:
    """Gradients of ||f_t||² with respect to every FM parameter."""
    rng = np.random.default_rng(seed)
    params = ParameterSet()
    width = d // H
    fm = FmParams.build(params, "fm", d, H, width, width, float(width), rng, TINY_INIT_SCALE)
    v, w_prev = _block_inputs(rng, d, 2, zero_inputs)

    def closure() -> Tensor:
        f_t, _ = fm_forward(v, w_prev, fm)
        return ops.l2_norm_sq(f_t)

    return grad_check(closure, list(params), eps)


def rm_grad_check(seed: int, H: int = 2, d: int = 8, eps: float = DEFAULT_EPS) -> GradCheckReport:
    """Gradients of ||M_t||² through attention, ψ and the relational gate."""
    rng = np.random.default_rng(seed)
    params = ParameterSet()
    width = d // H
    rm = RmParams.build(params, "rm", d, H, width, width, float(width), rng, TINY_INIT_SCALE)
    memory, f_t = _block_inputs(rng, d, 2, False)

    def closure() -> Tensor:
        state, _ = rm_step(MemoryState(memory), f_t, rm)
        return ops.l2_norm_sq(state.matrix)

    return grad_check(closure, list(params), eps)


def lstm_grad_check(seed: int, d: int = 8, eps: float = DEFAULT_EPS) -> GradCheckReport:
    rng = np.random.default_rng(seed)
    params = ParameterSet()
    lstm = LstmParams.build(params, "lstm", d, d, rng, TINY_INIT_SCALE)
    x, h, c = _block_inputs(rng, d, 3, False)

    def closure() -> Tensor:
        h_next, c_next = lstm_step(x, h, c, lstm)
        return ops.add(ops.l2_norm_sq(h_next), ops.l2_norm_sq(c_next))

    return grad_check(closure, list(params), eps)


def run_gradchecks(base: Optional[TrainConfig] = None, seed: int = 0,
                   eps: float = DEFAULT_EPS) -> GradCheckReport:
    """Check the single blocks, the corpus objective, the image objective and the LSTM/linear-fusion variants."""
    config = tiny_config(base, seed)
    vocab = tiny_vocabulary()
    rng = np.random.default_rng(seed)
    report = GradCheckReport()

    report.merge(fm_grad_check(seed, config.H, config.d, eps=eps), "fm_block:")
    report.merge(rm_grad_check(seed, config.H, config.d, eps=eps), "rm_block:")
    report.merge(lstm_grad_check(seed, config.d, eps=eps), "lstm_block:")

    sampled = dict(eps=eps, max_entries=MODEL_MAX_ENTRIES, seed=seed)
    model = R2MModel.build(config, vocab, seed)
    corpus_groups = ("encoder", "fusion", "decoder", "gates", "reconstructor", "word_head")
    report.merge(grad_check(corpus_closure(model, rng), select(model, corpus_groups), **sampled), "corpus:")
    report.merge(grad_check(image_closure(model, rng), select(model, ("similarity", "reconstructor")), **sampled),
                 "image:")

    variant = R2MModel.build(config.replace(use_fusion_memory=not config.use_fusion_memory,
                                            decoder_cell="lstm" if config.decoder_cell == "rm" else "rm"),
                             vocab, seed)
    report.merge(grad_check(corpus_closure(variant, rng), select(variant, ("fusion", "decoder")), **sampled),
                 "variant:")

    name, error = report.worst() or ("-", 0.0)
    logger.info(f"Gradient checks (seed {seed}): {len(report.errors)} tensors, worst {name} = {error:.3e}")
    return report
