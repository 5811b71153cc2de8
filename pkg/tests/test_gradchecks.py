import time

import pytest

from harness.gradchecks import (PARAMETER_GROUPS, group_of, lstm_grad_check, run_gradchecks, tiny_config,
                                tiny_vocabulary)
from model.seq2seq import R2MModel


def test_every_model_parameter_belongs_to_a_group():
    config = tiny_config()
    for variant in (config, config.replace(use_fusion_memory=False, decoder_cell="lstm")):
        model = R2MModel.build(variant, tiny_vocabulary())
        assert {group_of(name) for name in model.params.names()} <= set(PARAMETER_GROUPS)


def test_gate_parameters_form_their_own_group():
    assert group_of("decoder.rm.gate.W_f") == "gates"
    assert group_of("decoder.rm.head0.W_q") == "decoder"
    assert group_of("reconstructor.lstm.b_i") == "reconstructor"


@pytest.mark.parametrize("seed", [0, 1])
def test_lstm_block_gradients(seed):
    assert lstm_grad_check(seed).passed()


def test_full_model_gradients():
    report = run_gradchecks(seed=0)
    assert report.usable
    assert report.passed(), report.worst()
    assert any(name.startswith("image:similarity") for name in report.errors)
    assert any(name.startswith("corpus:decoder.rm.gate") for name in report.errors)


@pytest.mark.slow
def test_three_seeds_pass_within_a_minute():
    start = time.perf_counter()
    reports = [run_gradchecks(seed=seed) for seed in (0, 1, 2)]
    elapsed = time.perf_counter() - start
    assert all(report.passed() for report in reports), [report.worst() for report in reports]
    assert elapsed < 60.0
