"""
Shared fixtures: a tiny model configuration, a seeded model factory and a small
synthetic dataset on disk.
"""

import numpy as np
import pytest

from datakit.grammar import default_grammar
from datakit.io import save_dataset
from datakit.synth import synthesize_dataset
from harness.gradchecks import tiny_config, tiny_vocabulary
from model.seq2seq import R2MModel


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_vocab():
    return tiny_vocabulary()


@pytest.fixture
def small_config():
    """d=8, H=2 model with short schedules for fast training tests."""
    return tiny_config(seed=0).replace(
        batch_size=4, epochs_stage1=2, epochs_stage2=1, epochs_stage3=1, epochs_stage4=1,
        beam_width=2, max_len=8,
    )


@pytest.fixture
def make_model(tiny_vocab, small_config):
    def factory(seed=0, vocab=None, **overrides):
        config = small_config.replace(seed=seed, **overrides)
        return R2MModel.build(config, vocab or tiny_vocab)

    return factory


@pytest.fixture(scope="session")
def small_dataset():
    return synthesize_dataset(default_grammar(), seed=3, n_corpus=40, n_images=20, d_img=6)


@pytest.fixture
def dataset_dir(tmp_path, small_dataset):
    return save_dataset(small_dataset, tmp_path / "data")
