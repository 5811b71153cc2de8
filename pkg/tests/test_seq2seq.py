import itertools

import numpy as np
import pytest

from config import settings
from model.recurrent_memory import MemoryState
from model.seq2seq import DecodeTrace, R2MModel, word_logits
from model.vocabulary import ConceptSet, Vocabulary
from numcore import ops
from numcore.errors import ConfigError, ContractError
from numcore.tensor import Graph, Tensor


def concepts():
    return ConceptSet.from_ids([3, 5, 8])


def test_parameter_names_follow_the_block_layout(make_model):
    names = set(make_model().params.names())
    for expected in ("embedding.table", "encoder.lstm.W_i", "fm.head0.U_q", "fm.W_o",
                     "decoder.rm.gate.W_i", "decoder.rm.psi.W_1", "reconstructor.rm.head1.W_v",
                     "head.W_d", "head.bias", "similarity.W_p"):
        assert expected in names


def test_ablation_switches_change_the_parameter_layout(make_model):
    names = set(make_model(use_fusion_memory=False, decoder_cell="lstm", head_bias=False).params.names())
    assert "fusion.W" in names and "decoder.lstm.U_c" in names
    assert not any(name.startswith(("fm.", "decoder.rm.")) for name in names)
    assert "head.bias" not in names


def test_same_seed_builds_identical_models(make_model):
    first, second = make_model(seed=9).params.snapshot(), make_model(seed=9).params.snapshot()
    assert list(first) == list(second)
    for name in first:
        np.testing.assert_array_equal(first[name], second[name])


def test_multi_row_memory_is_rejected(small_config, tiny_vocab):
    with pytest.raises(ConfigError):
        R2MModel.build(small_config.replace(N=2), tiny_vocab)


def test_word_head_reads_a_single_row(make_model):
    model = make_model()
    with pytest.raises(ContractError):
        word_logits(MemoryState(Tensor(np.ones((2, model.d)))), model.head)


def test_teacher_forced_decode_produces_one_row_per_target(make_model):
    model = make_model()
    targets = [4, 9, 6, model.vocab.end_id]
    logits, trace = model.decode_teacher_forced(model.encode(concepts()), targets)
    assert logits.shape == (4, len(model.vocab))
    assert trace.tokens == targets
    assert trace.inputs == [model.vocab.start_id, 4, 9, 6]
    assert len(trace.memories) == 4


def test_teacher_forced_targets_must_end_with_end_token(make_model):
    model = make_model()
    with pytest.raises(ContractError):
        model.decode_teacher_forced(model.encode(concepts()), [4, 9])


def test_dominant_end_bias_gives_empty_caption(make_model):
    model = make_model()
    model.head.bias.data[0, model.vocab.end_id] = 1000.0
    v = model.encode(concepts())
    words, trace = model.decode_greedy(v, max_len=8)
    assert words == []
    assert trace.tokens == [model.vocab.end_id]
    result = model.beam_search(v, width=3, max_len=8)
    assert result.caption == [] and result.finished


def test_greedy_matches_width_one_beam(make_model):
    for seed in range(50):
        model = make_model(seed=seed)
        v = model.encode(concepts(), order_seed=seed)
        words, _ = model.decode_greedy(v, max_len=6)
        assert model.beam_search(v, width=1, max_len=6).caption == words


def test_wide_beam_finds_the_exhaustive_optimum(make_model):
    vocab = Vocabulary(list(settings.RESERVED_TOKENS) + ["a", "b", "c", "d"])
    max_len = 3
    for seed in range(5):
        model = make_model(seed=seed, vocab=vocab)
        v = model.encode(ConceptSet.from_ids([3, 4]))
        end = vocab.end_id
        candidates = []
        for length in range(1, max_len + 1):
            for prefix in itertools.product([t for t in range(len(vocab)) if t != end], repeat=length - 1):
                tokens = list(prefix) + [end]
                candidates.append((-model.score_sequence(v, tokens), tokens))
        best_score, best_tokens = min(candidates)
        result = model.beam_search(v, width=len(vocab) ** max_len, max_len=max_len)
        assert result.finished
        assert result.tokens == best_tokens
        assert result.log_prob == pytest.approx(-best_score, abs=1e-12)


def test_beam_usually_scores_at_least_greedy(make_model):
    wins = 0
    for seed in range(20):
        model = make_model(seed=seed)
        v = model.encode(concepts())
        _, trace = model.decode_greedy(v, max_len=8)
        greedy_score = model.score_sequence(v, trace.tokens)
        if model.beam_search(v, width=3, max_len=8).log_prob >= greedy_score - 1e-12:
            wins += 1
    assert wins >= 14


def test_beam_rejects_bad_arguments(make_model):
    model = make_model()
    v = model.encode(concepts())
    with pytest.raises(ContractError):
        model.beam_search(v, width=0, max_len=5)
    with pytest.raises(ContractError):
        model.decode_greedy(v, max_len=0)


def test_reconstruct_needs_a_trace(make_model):
    with pytest.raises(ContractError):
        make_model().reconstruct(DecodeTrace())


def test_reconstruction_is_differentiable(make_model):
    model = make_model()
    with Graph() as graph:
        v = model.encode(concepts())
        _, trace = model.decode_teacher_forced(v, [4, model.vocab.end_id])
        recon = model.reconstruct(trace)
        loss = ops.l2_norm_sq(ops.sub(v, recon))
    grads = graph.backward(loss)
    assert recon.shape == (1, model.d)
    assert np.any(grads["reconstructor.rm.gate.W_i"] != 0)
    assert np.any(grads["encoder.lstm.W_i"] != 0)


def test_teacher_forcing_the_greedy_output_reproduces_its_logits(make_model):
    for seed in range(20):
        model = make_model(seed=seed)
        v = model.encode(concepts(), order_seed=seed)
        _, greedy = model.decode_greedy(v, max_len=6)
        targets = list(greedy.tokens)
        if targets[-1] != model.vocab.end_id:
            targets.append(model.vocab.end_id)
        logits, _ = model.decode_teacher_forced(v, targets)
        np.testing.assert_allclose(logits.data[:len(greedy)], np.stack(greedy.logits), rtol=0, atol=1e-12)
