"""
Curriculum comparison: concept recall after the text stages versus after the
image stages, per seed.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence

from config.train_config import TrainConfig
from datakit.synth import SyntheticDataset
from harness.evaluate import EvalSet, evaluate
from harness.trainer import CorpusData, ImageData, StagePlan, Trainer
from model.seq2seq import R2MModel

logger = logging.getLogger(__name__)


@dataclass
class AblationResult:
    seed: int
    recall_text_stages: float
    recall_image_stages: float
    bleu4_text_stages: float
    bleu4_image_stages: float

    @property
    def recall_gain(self) -> float:
        return self.recall_image_stages - self.recall_text_stages


def run_curriculum_ablation(config: TrainConfig, dataset: SyntheticDataset, seeds: Sequence[int],
                            eval_indices: Optional[Sequence[int]] = None) -> List[AblationResult]:
    """Train stages 1-2, evaluate, continue with stages 3-4 and evaluate again."""
    corpus = CorpusData.from_dataset(dataset)
    images = ImageData.from_dataset(dataset)
    indices = dataset.image_split.val if eval_indices is None else eval_indices
    results = []
    for seed in seeds:
        seeded = config.replace(seed=seed)
        eval_set = EvalSet.from_images(dataset, indices, seeded.concept_threshold, name="image_val")
        trainer = Trainer(R2MModel.build(seeded, dataset.vocab), seeded)
        trainer.run(StagePlan((1, 2)), corpus=corpus)
        text_report = evaluate(trainer.model, eval_set)
        trainer.run(StagePlan((3, 4)), images=images)
        image_report = evaluate(trainer.model, eval_set)
        result = AblationResult(seed, text_report.concept_recall, image_report.concept_recall,
                                text_report.bleu[3], image_report.bleu[3])
        logger.info(f"Seed {seed}: concept recall {result.recall_text_stages:.4f} -> "
                    f"{result.recall_image_stages:.4f}")
        results.append(result)
    return results


def ablation_lines(results: Sequence[AblationResult], min_gain: float = 0.05) -> List[str]:
    lines = []
    for r in results:
        lines.extend([
            f"seed.{r.seed}.recall_stage2={r.recall_text_stages!r}",
            f"seed.{r.seed}.recall_stage4={r.recall_image_stages!r}",
            f"seed.{r.seed}.bleu4_stage2={r.bleu4_text_stages!r}",
            f"seed.{r.seed}.bleu4_stage4={r.bleu4_image_stages!r}",
        ])
    improved = sum(r.recall_gain >= min_gain for r in results)
    lines.append(f"seeds_improved={improved}/{len(results)}")
    return lines
