"""
Decoder (FM → RM → word head) and reconstructor composed into one model.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from config.train_config import TrainConfig
from model.encoder import Embedding, LstmParams, encode_concepts, lstm_step
from model.fusion_memory import FmAttention, FmParams, LinearFusion, fm_forward, linear_fusion
from model.losses import SimilarityHead
from model.recurrent_memory import MemoryState, RmAttention, RmParams, rm_step
from model.vocabulary import ConceptSet, Vocabulary
from model import init
from numcore import ops
from numcore.errors import ConfigError, ContractError, DimensionError, VocabularyError
from numcore.tensor import Parameter, ParameterSet, Tensor, no_grad

logger = logging.getLogger(__name__)

MemoryCell = Union[RmParams, LstmParams]


@dataclass
class WordHead:
    """Maps a memory row to vocabulary logits: W_d·M_tᵀ (+ bias)."""

    W_d: Parameter
    bias: Optional[Parameter] = None

    @property
    def vocab_size(self) -> int:
        return self.W_d.shape[0]


def word_logits(M_t: MemoryState, head: WordHead) -> Tensor:
    """1×vocab logits for a single-row memory."""
    if M_t.rows != 1:
        raise ContractError(f"word head reads one memory row, memory has {M_t.rows}")
    if M_t.d != head.W_d.shape[1]:
        raise DimensionError("word_logits", M_t.matrix.shape, head.W_d.shape)
    logits = ops.matmul(M_t.matrix, ops.transpose(head.W_d))
    if head.bias is not None:
        logits = ops.add(logits, head.bias)
    return logits


def memory_step(cell: MemoryCell, state: MemoryState, f_t: Tensor) -> Tuple[MemoryState, Optional[RmAttention]]:
    """Advance a memory by one input: the RM unit, or an LSTM standing in for it."""
    if isinstance(cell, RmParams):
        return rm_step(state, f_t, cell)
    h, c = lstm_step(f_t, state.matrix, state.cell, cell)
    return MemoryState(h, c), None


def initial_memory(cell: MemoryCell, rows: int, d: int) -> MemoryState:
    return MemoryState.zeros(rows, d, with_cell=isinstance(cell, LstmParams))


@dataclass
class DecodeTrace:
    """Per-step record of a decode; ``memories[t]`` is the state after step t."""

    tokens: List[int] = field(default_factory=list)
    logits: List[np.ndarray] = field(default_factory=list)
    fm_attention: List[Optional[FmAttention]] = field(default_factory=list)
    rm_attention: List[Optional[RmAttention]] = field(default_factory=list)
    memories: List[MemoryState] = field(default_factory=list)
    inputs: List[int] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.tokens)

    def append(self, input_id: int, token: int, logits: Tensor, state: MemoryState,
               fm: Optional[FmAttention], rm: Optional[RmAttention]) -> None:
        self.inputs.append(input_id)
        self.tokens.append(token)
        self.logits.append(logits.numpy()[0])
        self.memories.append(state)
        self.fm_attention.append(fm)
        self.rm_attention.append(rm)


@dataclass
class Hypothesis:
    tokens: Tuple[int, ...]
    log_prob: float
    state: MemoryState

    @property
    def last(self) -> int:
        return self.tokens[-1]


@dataclass
class BeamResult:
    caption: List[str]
    tokens: List[int]
    log_prob: float
    finished: bool


def reconstruct(trace: DecodeTrace, cell: MemoryCell) -> Tensor:
    """ṽ: replay the decoder memories through the reconstructor from a zero state.

    Only memory states are read, never token ids.
    """
    if not trace.memories:
        raise ContractError("cannot reconstruct from an empty decode trace")
    first = trace.memories[0].matrix
    state = initial_memory(cell, 1, first.shape[1])
    for memory in trace.memories:
        state, _ = memory_step(cell, state, memory.matrix)
    return state.matrix


class R2MModel:
    """Encoder, FM, decoder RM, word head, reconstructor RM and similarity head."""

    def __init__(self, config: TrainConfig, vocab: Vocabulary, params: ParameterSet,
                 embedding: Embedding, concept_embedding: Embedding, encoder: LstmParams,
                 fusion: Union[FmParams, LinearFusion], decoder: MemoryCell,
                 reconstructor: MemoryCell, head: WordHead, similarity: SimilarityHead):
        self.config = config
        self.vocab = vocab
        self.params = params
        self.embedding = embedding
        self.concept_embedding = concept_embedding
        self.encoder = encoder
        self.fusion = fusion
        self.decoder = decoder
        self.reconstructor = reconstructor
        self.head = head
        self.similarity = similarity

    @classmethod
    def build(cls, config: TrainConfig, vocab: Vocabulary, seed: Optional[int] = None) -> "R2MModel":
        """Create freshly initialized parameters; identical seeds give identical models."""
        config.validate()
        if config.N != 1:
            raise ConfigError("the word head and reconstructor read a single memory row; N must be 1")
        rng = np.random.default_rng(config.seed if seed is None else seed)
        scale = config.init_scale
        d = config.d
        params = ParameterSet()

        embedding = Embedding.build(params, "embedding.table", len(vocab), d, rng, scale)
        if config.shared_embeddings:
            concept_embedding = embedding
        else:
            concept_embedding = Embedding.build(params, "encoder.embedding", len(vocab), d, rng, scale)
        encoder = LstmParams.build(params, "encoder.lstm", d, d, rng, scale)

        if config.use_fusion_memory:
            fusion = FmParams.build(params, "fm", d, config.H, config.d_k, config.d_v,
                                    config.fm_scale, rng, scale)
        else:
            fusion = LinearFusion.build(params, "fusion", d, rng, scale)

        decoder = cls._build_cell(params, "decoder", config.decoder_cell, config, rng)
        reconstructor = cls._build_cell(params, "reconstructor", config.reconstructor_cell, config, rng)

        W_d = init.normal(params, "head.W_d", (len(vocab), d), rng, scale)
        bias = init.zeros(params, "head.bias", (1, len(vocab))) if config.head_bias else None
        similarity = SimilarityHead.build(params, "similarity.W_p", config.d_img, d, rng, scale,
                                          config.cosine_similarity)
        model = cls(config, vocab, params, embedding, concept_embedding, encoder, fusion,
                    decoder, reconstructor, WordHead(W_d, bias), similarity)
        logger.info(f"Built R2M model with {params.num_values()} values in {len(params)} tensors")
        return model

    @staticmethod
    def _build_cell(params: ParameterSet, prefix: str, kind: str, config: TrainConfig,
                    rng: np.random.Generator) -> MemoryCell:
        if kind == "lstm":
            return LstmParams.build(params, f"{prefix}.lstm", config.d, config.d, rng, config.init_scale)
        return RmParams.build(params, f"{prefix}.rm", config.d, config.H, config.d_K, config.d_V,
                              config.rm_scale, rng, config.init_scale, config.ln_eps)

    @property
    def d(self) -> int:
        return self.config.d

    # Building blocks

    def encode(self, concepts: ConceptSet, order_seed: int = 0) -> Tensor:
        return encode_concepts(concepts, self.concept_embedding, self.encoder, order_seed)

    def fuse(self, v: Tensor, w_prev: Tensor) -> Tuple[Tensor, Optional[FmAttention]]:
        if isinstance(self.fusion, FmParams):
            return fm_forward(v, w_prev, self.fusion)
        return linear_fusion(v, w_prev, self.fusion), None

    def step(self, v: Tensor, prev_id: int, state: MemoryState):
        """One decoder step: returns (logits, new state, FM attention, RM attention)."""
        f_t, fm = self.fuse(v, self.embedding.lookup([prev_id]))
        state, rm = memory_step(self.decoder, state, f_t)
        return word_logits(state, self.head), state, fm, rm

    def initial_state(self) -> MemoryState:
        return initial_memory(self.decoder, 1, self.d)

    def _check_ids(self, ids: Sequence[int]) -> None:
        for token in ids:
            if not 0 <= token < len(self.vocab):
                raise VocabularyError(f"token id {token} outside vocabulary of {len(self.vocab)}")

    # Decoding

    def decode_teacher_forced(self, v: Tensor, targets: Sequence[int]) -> Tuple[Tensor, DecodeTrace]:
        """Feed ground-truth previous tokens; returns the L×vocab logits and the trace."""
        targets = [int(t) for t in targets]
        if not targets or targets[-1] != self.vocab.end_id:
            raise ContractError("teacher-forced targets must end with <#end>")
        self._check_ids(targets)
        trace = DecodeTrace()
        state = self.initial_state()
        prev = self.vocab.start_id
        step_logits = []
        for target in targets:
            logits, state, fm, rm = self.step(v, prev, state)
            step_logits.append(logits)
            trace.append(prev, target, logits, state, fm, rm)
            prev = target
        return ops.concat_rows(step_logits), trace

    def decode_greedy(self, v: Tensor, max_len: int) -> Tuple[List[str], DecodeTrace]:
        """Feed back the argmax token until ``<#end>`` or ``max_len`` steps.

        The argmax choice is not differentiated; gradients still flow through
        the memory chain recorded in the trace.
        """
        if max_len < 1:
            raise ContractError(f"max_len must be >= 1, got {max_len}")
        trace = DecodeTrace()
        state = self.initial_state()
        prev = self.vocab.start_id
        for _ in range(max_len):
            logits, state, fm, rm = self.step(v, prev, state)
            token = int(np.argmax(logits.data[0]))
            trace.append(prev, token, logits, state, fm, rm)
            if token == self.vocab.end_id:
                break
            prev = token
        return self.vocab.decode(_strip_end(trace.tokens, self.vocab.end_id), strip_reserved=False), trace

    def beam_search(self, v: Tensor, width: int, max_len: int) -> BeamResult:
        """Length-wise beam over summed token log-probs (no length normalization).

        Hypotheses ending in ``<#end>`` retire to a pool; the best pooled one
        wins, else the best unfinished one at ``max_len``. Ties prefer the
        lexicographically smaller token sequence.
        """
        if width < 1:
            raise ContractError(f"beam width must be >= 1, got {width}")
        if max_len < 1:
            raise ContractError(f"max_len must be >= 1, got {max_len}")
        end_id = self.vocab.end_id
        with no_grad():
            v = v.detach()
            live = [Hypothesis((self.vocab.start_id,), 0.0, self.initial_state())]
            finished: List[Hypothesis] = []
            for _ in range(max_len):
                candidates = []
                for hyp in live:
                    logits, state, _, _ = self.step(v, hyp.last, hyp.state)
                    log_probs = ops.log_softmax_rows(logits).data[0]
                    for token, lp in enumerate(log_probs):
                        candidates.append(Hypothesis(hyp.tokens + (token,), hyp.log_prob + float(lp), state))
                candidates.sort(key=_rank)
                live = []
                for cand in candidates[:width]:
                    (finished if cand.last == end_id else live).append(cand)
                if not live:
                    break
                if finished and min(finished, key=_rank).log_prob >= live[0].log_prob:
                    break
            best = min(finished, key=_rank) if finished else min(live, key=_rank)
        tokens = list(best.tokens[1:])
        caption = self.vocab.decode(_strip_end(tokens, end_id), strip_reserved=False)
        return BeamResult(caption, tokens, best.log_prob, bool(finished))

    def score_sequence(self, v: Tensor, tokens: Sequence[int]) -> float:
        """Summed log-probability of emitting ``tokens`` after ``<#start>``."""
        self._check_ids(tokens)
        total = 0.0
        with no_grad():
            state = self.initial_state()
            prev = self.vocab.start_id
            for token in tokens:
                logits, state, _, _ = self.step(v.detach(), prev, state)
                total += float(ops.log_softmax_rows(logits).data[0][token])
                prev = token
        return total

    def reconstruct(self, trace: DecodeTrace) -> Tensor:
        return reconstruct(trace, self.reconstructor)


def _rank(hyp: Hypothesis):
    return (-hyp.log_prob, hyp.tokens)


def _strip_end(tokens: Sequence[int], end_id: int) -> List[int]:
    tokens = list(tokens)
    if tokens and tokens[-1] == end_id:
        tokens.pop()
    return tokens
