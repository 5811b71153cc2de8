import math

import pytest

from config.train_config import TrainConfig
from datakit.grammar import default_grammar
from datakit.synth import synthesize_dataset
from harness.ablation import AblationResult, ablation_lines, run_curriculum_ablation


def test_ablation_lines_count_improved_seeds():
    results = [AblationResult(0, 0.25, 0.5, 0.1, 0.2), AblationResult(1, 0.5, 0.52, 0.1, 0.1)]
    lines = ablation_lines(results)
    assert lines[0] == "seed.0.recall_stage2=0.25"
    assert lines[1] == "seed.0.recall_stage4=0.5"
    assert lines[-1] == "seeds_improved=1/2"
    assert len(lines) == 9


def test_curriculum_ablation_runs_each_seed(small_config, small_dataset):
    results = run_curriculum_ablation(small_config, small_dataset, [0, 1],
                                      eval_indices=small_dataset.image_split.val[:3])
    assert [r.seed for r in results] == [0, 1]
    for r in results:
        assert 0.0 <= r.recall_text_stages <= 1.0
        assert 0.0 <= r.recall_image_stages <= 1.0
        assert math.isclose(r.recall_gain, r.recall_image_stages - r.recall_text_stages)


@pytest.mark.slow
def test_image_stages_improve_recall_on_most_seeds():
    dataset = synthesize_dataset(default_grammar(), seed=0)
    results = run_curriculum_ablation(TrainConfig(), dataset, [0, 1, 2])
    improved, total = ablation_lines(results)[-1].split("=")[1].split("/")
    assert int(total) == 3
    assert int(improved) >= 2
