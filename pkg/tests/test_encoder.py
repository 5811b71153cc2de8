import numpy as np
import pytest

from model.encoder import Embedding, LstmParams, concept_order, encode_concepts, filter_concepts, lstm_step
from model.vocabulary import UNK_ID, ConceptSet
from numcore.errors import DimensionError, VocabularyError
from numcore.tensor import ParameterSet, Tensor


@pytest.fixture
def encoder_blocks(rng):
    params = ParameterSet()
    emb = Embedding.build(params, "embedding.table", 12, 6, rng, 0.3)
    lstm = LstmParams.build(params, "encoder.lstm", 6, 6, rng, 0.3)
    return params, emb, lstm


def test_filter_keeps_dictionary_concepts_above_threshold():
    detections = ConceptSet(((5, 0.9), (6, 0.2), (9, 0.5), (7, 0.3)))
    kept = filter_concepts(detections, {5, 6, 7}, 0.3)
    assert kept.items == ((5, 0.9), (7, 0.3))


def test_filter_with_zero_threshold_keeps_all_dictionary_concepts():
    detections = ConceptSet(((5, 0.0), (9, 0.5), (6, 1.0)))
    assert filter_concepts(detections, {5, 6}, 0.0).ids == [5, 6]


@pytest.mark.parametrize("threshold", [-0.1, 1.01])
def test_filter_rejects_threshold_outside_unit_interval(threshold):
    with pytest.raises(ValueError):
        filter_concepts(ConceptSet(), {1}, threshold)


def test_concept_order_is_a_seeded_permutation():
    order = concept_order(6, 11)
    assert sorted(order.tolist()) == list(range(6))
    np.testing.assert_array_equal(order, concept_order(6, 11))


def test_zero_parameters_give_zero_vector(encoder_blocks):
    params, emb, lstm = encoder_blocks
    for param in params:
        param.data[...] = 0.0
    v = encode_concepts(ConceptSet.from_ids([3, 4, 5]), emb, lstm, order_seed=0)
    assert v.shape == (1, 6)
    np.testing.assert_array_equal(v.data, np.zeros((1, 6)))


def test_singleton_set_ignores_order_seed(encoder_blocks):
    _, emb, lstm = encoder_blocks
    concepts = ConceptSet.from_ids([7])
    first = encode_concepts(concepts, emb, lstm, order_seed=0).data
    for seed in (1, 2, 99):
        np.testing.assert_array_equal(encode_concepts(concepts, emb, lstm, order_seed=seed).data, first)


def test_empty_set_encodes_as_unk(encoder_blocks):
    _, emb, lstm = encoder_blocks
    empty = encode_concepts(ConceptSet(), emb, lstm, order_seed=3).data
    unk = encode_concepts(ConceptSet.from_ids([UNK_ID]), emb, lstm, order_seed=3).data
    np.testing.assert_array_equal(empty, unk)


def test_same_seed_gives_same_vector(encoder_blocks):
    _, emb, lstm = encoder_blocks
    concepts = ConceptSet.from_ids([3, 8, 5, 10])
    np.testing.assert_array_equal(encode_concepts(concepts, emb, lstm, 4).data,
                                  encode_concepts(concepts, emb, lstm, 4).data)


def test_out_of_range_concept_is_rejected(encoder_blocks):
    _, emb, lstm = encoder_blocks
    with pytest.raises(VocabularyError):
        encode_concepts(ConceptSet.from_ids([12]), emb, lstm, order_seed=0)


def test_lstm_step_checks_shapes(encoder_blocks):
    _, _, lstm = encoder_blocks
    with pytest.raises(DimensionError):
        lstm_step(Tensor(np.ones((1, 5))), Tensor.zeros(1, 6), Tensor.zeros(1, 6), lstm)
    with pytest.raises(DimensionError):
        lstm_step(Tensor(np.ones((1, 6))), Tensor.zeros(1, 6), Tensor.zeros(1, 4), lstm)


def test_filter_is_idempotent(rng):
    for _ in range(200):
        ids = rng.permutation(30)[:rng.integers(0, 12)]
        detections = ConceptSet(tuple((int(i), float(rng.uniform())) for i in ids))
        dictionary = set(rng.choice(30, size=15, replace=False).tolist())
        threshold = float(rng.uniform())
        once = filter_concepts(detections, dictionary, threshold)
        assert filter_concepts(once, dictionary, threshold) == once
