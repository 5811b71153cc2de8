import struct

import numpy as np
import pytest

from config import settings
from harness.checkpoints import load_model, save_model, sidecar
from harness.evaluate import EvalSet, evaluate
from model.vocabulary import ConceptSet
from numcore.checkpoint import load_tensors, save_tensors
from numcore.errors import CheckpointError, DataFileNotFoundError


def test_tensors_round_trip_bit_for_bit(tmp_path, rng):
    tensors = {
        "embedding.table": rng.normal(size=(5, 3)),
        "head.bias": rng.normal(size=(1, 5)),
        "meta.stage": np.array(2.0),
        "weird.values": np.array([[np.pi, -0.0, 1e-300]]),
    }
    save_tensors(tmp_path / "ckpt.bin", tensors)
    loaded = load_tensors(tmp_path / "ckpt.bin")
    assert list(loaded) == list(tensors)
    for name, array in tensors.items():
        assert loaded[name].shape == array.shape
        assert loaded[name].tobytes() == array.tobytes()


def test_bad_magic_is_rejected(tmp_path):
    path = tmp_path / "ckpt.bin"
    path.write_bytes(b"NOPE" + struct.pack("<I", 0))
    with pytest.raises(CheckpointError, match="magic"):
        load_tensors(path)


def test_truncated_file_is_rejected(tmp_path):
    path = tmp_path / "ckpt.bin"
    save_tensors(path, {"w": np.ones((2, 2))})
    path.write_bytes(path.read_bytes()[:-3])
    with pytest.raises(CheckpointError, match="truncated"):
        load_tensors(path)


def test_trailing_bytes_are_rejected(tmp_path):
    path = tmp_path / "ckpt.bin"
    save_tensors(path, {"w": np.ones((2, 2))})
    path.write_bytes(path.read_bytes() + b"\x00")
    with pytest.raises(CheckpointError, match="trailing"):
        load_tensors(path)


def test_missing_checkpoint_file(tmp_path):
    with pytest.raises(DataFileNotFoundError):
        load_tensors(tmp_path / "absent.bin")


def test_model_round_trip_restores_parameters_and_progress(tmp_path, make_model):
    model = make_model(seed=5)
    path = save_model(model, tmp_path / "model.bin", stage=3, epoch=1)
    loaded = load_model(path)
    assert (loaded.stage, loaded.epoch) == (3, 1)
    assert loaded.model.vocab == model.vocab
    assert loaded.model.config == model.config
    for name, array in model.params.snapshot().items():
        np.testing.assert_array_equal(loaded.model.params[name].data, array)


def test_missing_sidecar_is_a_checkpoint_error(tmp_path, make_model):
    path = save_model(make_model(), tmp_path / "model.bin", stage=1, epoch=0)
    sidecar(path, settings.CHECKPOINT_VOCAB_SUFFIX).unlink()
    with pytest.raises(CheckpointError, match="sidecar"):
        load_model(path)


def test_reloaded_model_evaluates_identically(tmp_path, make_model, tiny_vocab):
    model = make_model(seed=2)
    eval_set = EvalSet([ConceptSet.from_ids([3, 4]), ConceptSet.from_ids([5, 6, 7])],
                       [[["w1", "w2"]], [["w3", "w4", "w5"]]])
    before = evaluate(model, eval_set)
    reloaded = load_model(save_model(model, tmp_path / "model.bin", stage=4, epoch=1)).model
    after = evaluate(reloaded, eval_set)
    assert after == before
