import math
import time

import numpy as np
import pandas as pd
import pytest

from config import settings
from config.train_config import TrainConfig
from datakit.grammar import default_grammar
from datakit.synth import synthesize_dataset
from harness.checkpoints import load_model
from harness.evaluate import EvalSet, evaluate
from harness.trainer import (CorpusData, ImageData, LossRecord, StagePlan, Trainer, append_loss_curve,
                             completed_stage_of, loss_frame)
from model.losses import rec_loss
from model.seq2seq import R2MModel
from numcore.errors import ConfigError, ContractError
from numcore.tensor import no_grad


@pytest.fixture
def corpus(small_dataset):
    return CorpusData.from_dataset(small_dataset)


@pytest.fixture
def images(small_dataset):
    return ImageData.from_dataset(small_dataset)


@pytest.fixture
def build(small_config, small_dataset):
    def factory(**overrides):
        config = small_config.replace(**overrides)
        return R2MModel.build(config, small_dataset.vocab), config

    return factory


def test_training_data_views(corpus, images, small_dataset):
    assert len(corpus) == len(small_dataset.corpus_split.train)
    assert all(targets[-1] == small_dataset.vocab.end_id for targets in corpus.targets)
    assert len(images) == len(small_dataset.image_split.train)
    assert images.features.shape == (len(images), 6)
    kept = images.concepts(0, 0.0)
    assert set(kept.ids) <= images.dictionary_ids


def test_stage_plan_parsing():
    assert StagePlan.parse("all").stages == (1, 2, 3, 4)
    assert StagePlan.parse("3").stages == (3,)
    with pytest.raises(ConfigError):
        StagePlan.parse("2,1")
    with pytest.raises(ConfigError):
        StagePlan.parse("five")


def test_stages_must_run_in_order(build, corpus, images):
    model, config = build()
    trainer = Trainer(model, config)
    with pytest.raises(ContractError):
        trainer.run_stage(2, corpus)
    with pytest.raises(ContractError):
        trainer.run_stage(3, images)


def test_stage_rejects_the_wrong_data_domain(build, images):
    model, config = build()
    with pytest.raises(ContractError):
        Trainer(model, config).run_stage(1, images)


def test_full_curriculum_writes_curves_and_checkpoints(tmp_path, build, corpus, images):
    model, config = build()
    results = Trainer(model, config, tmp_path).run(StagePlan(), corpus, images)
    assert [r.stage for r in results] == [1, 2, 3, 4]
    assert all(math.isfinite(r.final_loss) for r in results)

    batches_per_epoch = math.ceil(len(corpus) / config.batch_size)
    assert len(results[0].records) == config.epochs_stage1 * batches_per_epoch
    assert math.isnan(results[0].records[0].rec)
    assert not math.isnan(results[1].records[0].rec)
    assert not math.isnan(results[2].records[0].triplet)
    assert not math.isnan(results[3].records[0].rec)

    curves = pd.read_csv(tmp_path / settings.LOSS_CURVES_FILE)
    assert sorted(curves["stage"].unique()) == [1, 2, 3, 4]
    checkpoints = tmp_path / "checkpoints"
    for name in ("stage1.ckpt", "stage1_epoch001.ckpt", "stage1_epoch002.ckpt", "stage4.ckpt"):
        assert (checkpoints / name).is_file()
    loaded = load_model(checkpoints / "stage4.ckpt")
    assert (loaded.stage, loaded.epoch) == (4, config.epochs_stage4)


def test_training_is_deterministic(build, corpus):
    snapshots = []
    for _ in range(2):
        model, config = build(seed=11)
        Trainer(model, config).run_stage(1, corpus)
        snapshots.append(model.params.snapshot())
    for name, array in snapshots[0].items():
        np.testing.assert_array_equal(snapshots[1][name], array)


def test_frozen_prefixes_are_not_updated_in_image_stages(build, images):
    model, config = build(freeze=("embedding.", "encoder."), allow_out_of_order=True)
    before = model.params.snapshot()
    Trainer(model, config).run_stage(3, images)
    for name in ("embedding.table", "encoder.lstm.W_i"):
        np.testing.assert_array_equal(model.params[name].data, before[name])
    assert not np.array_equal(model.params["similarity.W_p"].data, before["similarity.W_p"])


def test_resumed_stage_skips_finished_epochs(build, corpus):
    model, config = build()
    result = Trainer(model, config, completed_stage=0, resume_epoch=1).run_stage(1, corpus)
    assert {r.epoch for r in result.records} == {2}


def test_completed_stage_of_checkpoint_progress(small_config):
    assert completed_stage_of(0, 0, small_config) == (0, 0)
    assert completed_stage_of(1, small_config.epochs_stage1, small_config) == (1, 0)
    assert completed_stage_of(1, 1, small_config) == (0, 1)


def test_loss_curve_rows_are_replaced_per_stage(tmp_path):
    path = tmp_path / "curves.csv"
    append_loss_curve(path, [LossRecord(1, 1, 0, 2.0, xe=2.0), LossRecord(2, 1, 0, 3.0, xe=2.5, rec=0.5)])
    append_loss_curve(path, [LossRecord(1, 1, 0, 1.5, xe=1.5)])
    frame = pd.read_csv(path)
    assert frame["stage"].tolist() == [1, 2]
    assert frame["loss"].tolist() == [1.5, 3.0]


@pytest.mark.slow
def test_corpus_stage_reduces_loss_on_a_handful_of_sentences(build, small_dataset):
    model, config = build(epochs_stage1=60, lr_stage1=1e-2)
    corpus = CorpusData.from_dataset(small_dataset, small_dataset.corpus_split.train[:4])
    result = Trainer(model, config).run_stage(1, corpus)
    means = result.epoch_means()
    assert means[-1] < 0.8 * means[0]


def test_full_curriculum_is_bit_reproducible(build, corpus, images):
    runs = []
    for _ in range(2):
        model, config = build()
        results = Trainer(model, config).run(StagePlan(), corpus, images)
        runs.append(([r.loss for result in results for r in result.records], model.params.snapshot()))
    assert runs[0][0][-1] == runs[1][0][-1]
    assert runs[0][0] == runs[1][0]
    for name, array in runs[0][1].items():
        np.testing.assert_array_equal(runs[1][1][name], array)


@pytest.mark.parametrize("resume_stage", [2, 3, 4])
def test_resuming_from_a_stage_checkpoint_matches_an_uninterrupted_run(tmp_path, build, corpus, images,
                                                                      resume_stage):
    model, config = build()
    full = Trainer(model, config, tmp_path).run(StagePlan(), corpus, images)

    loaded = load_model(tmp_path / "checkpoints" / f"stage{resume_stage - 1}.ckpt")
    completed, resume_epoch = completed_stage_of(loaded.stage, loaded.epoch, config)
    assert (completed, resume_epoch) == (resume_stage - 1, 0)
    resumed = Trainer(loaded.model, config, completed_stage=completed).run(
        StagePlan(tuple(range(resume_stage, 5))), corpus, images)

    assert resumed[-1].final_loss == full[-1].final_loss
    for name, array in model.params.snapshot().items():
        np.testing.assert_array_equal(loaded.model.params[name].data, array)


def test_loss_weights_come_from_the_config(build, corpus):
    model, config = build(beta=0.0, allow_out_of_order=True)
    trainer = Trainer(model, config)
    assert (trainer.weights.beta, trainer.weights.gamma, trainer.weights.margin) == (0.0, config.gamma,
                                                                                     config.margin)
    records = trainer.run_stage(2, corpus).records
    assert all(r.rec > 0.0 and r.loss == r.xe for r in records)


def test_mid_stage_resume_keeps_earlier_curve_rows(tmp_path, build, corpus):
    model, config = build(epochs_stage1=3)
    Trainer(model, config, tmp_path).run_stage(1, corpus)
    before = pd.read_csv(tmp_path / settings.LOSS_CURVES_FILE, float_precision="round_trip")

    Trainer(model, config, tmp_path, completed_stage=0, resume_epoch=2).run_stage(1, corpus)
    after = pd.read_csv(tmp_path / settings.LOSS_CURVES_FILE, float_precision="round_trip")
    assert sorted(after["epoch"].unique()) == [1, 2, 3]
    assert len(after) == len(before)
    early = before["epoch"] <= 2
    pd.testing.assert_frame_equal(after[early].reset_index(drop=True), before[early].reset_index(drop=True))


def test_curve_merge_replaces_from_the_first_new_epoch(tmp_path):
    path = tmp_path / "curves.csv"
    append_loss_curve(path, [LossRecord(1, epoch, 0, 3.0 - epoch, xe=3.0 - epoch) for epoch in (1, 2, 3)])
    append_loss_curve(path, [LossRecord(1, 2, 0, 0.5, xe=0.5)])
    frame = pd.read_csv(path)
    assert frame["epoch"].tolist() == [1, 2]
    assert frame["loss"].tolist() == [2.0, 0.5]


@pytest.mark.slow
def test_stage_one_overfits_a_small_corpus():
    dataset = synthesize_dataset(default_grammar(), seed=0, n_corpus=32)
    indices = list(range(32))
    config = TrainConfig(epochs_stage1=200)
    model = R2MModel.build(config, dataset.vocab)
    start = time.perf_counter()
    result = Trainer(model, config).run_stage(1, CorpusData.from_dataset(dataset, indices))
    elapsed = time.perf_counter() - start

    curve = loss_frame(result.records).groupby("epoch")["xe"].mean()
    assert curve.min() < 0.1
    report = evaluate(model, EvalSet.from_corpus(dataset, indices), greedy=True)
    exact = sum(caption == dataset.corpus[i] for caption, i in zip(report.captions, indices))
    assert exact >= 30
    assert elapsed < 300.0


def mean_text_rec(model, corpus):
    with no_grad():
        total = 0.0
        for concepts, targets in zip(corpus.concepts, corpus.targets):
            v = model.encode(concepts)
            _, trace = model.decode_teacher_forced(v, targets)
            total += rec_loss(v, model.reconstruct(trace)).item()
    return total / len(corpus)


def test_text_reconstruction_stage_lowers_reconstruction_loss(build, corpus):
    model, config = build(epochs_stage1=2, epochs_stage2=8)
    trainer = Trainer(model, config)
    trainer.run_stage(1, corpus)
    before = mean_text_rec(model, corpus)
    trainer.run_stage(2, corpus)
    assert mean_text_rec(model, corpus) < before
