"""
Four-stage training curriculum.

Stages 1-2 train on the text corpus (L_XE, then L_S = L_XE + β·L_rec);
stages 3-4 train on the image set (L_M, then L_I = L_M + γ·L_rec).
"""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import AbstractSet, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from config import settings
from config.train_config import TrainConfig
from datakit.synth import SyntheticDataset, decoder_targets, extract_concepts
from harness.batching import make_batches
from harness.checkpoints import save_model
from model.encoder import filter_concepts
from model.losses import (LossWeights, corpus_loss, image_loss, rec_loss, similarity_matrix, triplet_loss,
                          xe_loss)
from model.seq2seq import R2MModel
from model.vocabulary import ConceptSet
from numcore import ops
from numcore.errors import ConfigError, ContractError
from numcore.optim import Adam
from numcore.tensor import Graph, Tensor

logger = logging.getLogger(__name__)

CORPUS_STAGES = (1, 2)
IMAGE_STAGES = (3, 4)
STAGE_OBJECTIVES = {1: "L_XE", 2: "L_S", 3: "L_M", 4: "L_I"}
LOSS_COLUMNS = ["stage", "epoch", "batch", "loss", "xe", "rec", "triplet"]


@dataclass(frozen=True)
class CorpusData:
    """Text-only training data: concept sets and decoder targets per sentence."""

    concepts: Tuple[ConceptSet, ...]
    targets: Tuple[Tuple[int, ...], ...]

    @classmethod
    def from_dataset(cls, dataset: SyntheticDataset, indices: Optional[Sequence[int]] = None) -> "CorpusData":
        indices = dataset.corpus_split.train if indices is None else indices
        words = set(dataset.dictionary)
        concepts = tuple(extract_concepts(dataset.corpus[i], words, dataset.vocab) for i in indices)
        targets = tuple(tuple(decoder_targets(dataset.corpus[i], dataset.vocab)) for i in indices)
        return cls(concepts, targets)

    def __len__(self) -> int:
        return len(self.targets)


@dataclass(frozen=True)
class ImageData:
    """Image-only training data: detections and raw feature vectors."""

    detections: Tuple[ConceptSet, ...]
    features: np.ndarray
    dictionary_ids: AbstractSet[int]

    @classmethod
    def from_dataset(cls, dataset: SyntheticDataset, indices: Optional[Sequence[int]] = None) -> "ImageData":
        indices = dataset.image_split.train if indices is None else list(indices)
        return cls(tuple(dataset.detections[i] for i in indices), dataset.features[indices],
                   frozenset(dataset.dictionary_ids))

    def __len__(self) -> int:
        return len(self.detections)

    def concepts(self, index: int, threshold: float) -> ConceptSet:
        return filter_concepts(self.detections[index], self.dictionary_ids, threshold)


StageData = Union[CorpusData, ImageData]


@dataclass
class StagePlan:
    """Ordered subset of stages 1-4."""

    stages: Tuple[int, ...] = (1, 2, 3, 4)

    def __post_init__(self):
        if not self.stages or any(s not in STAGE_OBJECTIVES for s in self.stages):
            raise ConfigError(f"stages must be drawn from 1-4, got {self.stages}")
        if list(self.stages) != sorted(set(self.stages)):
            raise ConfigError(f"stages must be increasing, got {self.stages}")

    @classmethod
    def parse(cls, text: str) -> "StagePlan":
        if text == "all":
            return cls()
        try:
            return cls(tuple(int(part) for part in text.split(",")))
        except ValueError:
            raise ConfigError(f"stage must be 1, 2, 3, 4 or 'all', got {text!r}") from None

    @staticmethod
    def source(stage: int) -> type:
        return CorpusData if stage in CORPUS_STAGES else ImageData


@dataclass
class LossRecord:
    stage: int
    epoch: int
    batch: int
    loss: float
    xe: float = math.nan
    rec: float = math.nan
    triplet: float = math.nan


@dataclass
class StageResult:
    stage: int
    records: List[LossRecord] = field(default_factory=list)
    checkpoint: Optional[Path] = None

    @property
    def final_loss(self) -> float:
        return self.records[-1].loss if self.records else math.nan

    def epoch_means(self) -> List[float]:
        frame = loss_frame(self.records)
        return frame.groupby("epoch")["loss"].mean().tolist() if not frame.empty else []


def loss_frame(records: Sequence[LossRecord]) -> pd.DataFrame:
    return pd.DataFrame([vars(r) for r in records], columns=LOSS_COLUMNS)


def append_loss_curve(path: Union[str, Path], records: Sequence[LossRecord]) -> Path:
    """Merge ``records`` into the curve file.

    Per stage, rows from the first epoch in ``records`` onward are replaced; earlier
    epochs (written before a mid-stage resume) and other stages are kept.
    """
    path = Path(path)
    frame = loss_frame(records)
    if path.is_file():
        previous = pd.read_csv(path, float_precision="round_trip")
        first_epoch = previous["stage"].map(frame.groupby("stage")["epoch"].min())
        previous = previous[first_epoch.isna() | (previous["epoch"] < first_epoch)]
        frame = pd.concat([previous, frame], ignore_index=True).sort_values(["stage", "epoch", "batch"])
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format="%.17g")
    return path


def _epoch_seed(seed: int, stage: int, epoch: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([seed, stage, epoch])


class Trainer:
    """Runs curriculum stages on one model, enforcing their order."""

    def __init__(self, model: R2MModel, config: Optional[TrainConfig] = None,
                 run_dir: Optional[Union[str, Path]] = None, completed_stage: int = 0,
                 resume_epoch: int = 0):
        self.model = model
        self.config = config or model.config
        self.run_dir = Path(run_dir) if run_dir is not None else None
        self.completed_stage = completed_stage
        self.resume_epoch = resume_epoch
        self.weights = LossWeights.from_config(self.config)

    # Loss terms

    def corpus_batch_loss(self, stage: int, batch: Sequence[int], data: CorpusData,
                          order_seeds: Dict[int, int]) -> Tuple[Tensor, Dict[str, float]]:
        use_rec = stage == 2 and self.config.use_text_rec
        xe_terms, rec_terms = [], []
        for index in batch:
            v = self.model.encode(data.concepts[index], order_seeds[index])
            logits, trace = self.model.decode_teacher_forced(v, data.targets[index])
            xe_terms.append(xe_loss(logits, data.targets[index]))
            if use_rec:
                rec_terms.append(rec_loss(v, self.model.reconstruct(trace)))
        xe = _batch_mean(xe_terms)
        parts = {"xe": xe.item()}
        if not use_rec:
            return xe, parts
        rec = _batch_mean(rec_terms)
        parts["rec"] = rec.item()
        return corpus_loss(xe, rec, self.weights.beta), parts

    def image_batch_loss(self, stage: int, batch: Sequence[int], data: ImageData,
                         order_seeds: Dict[int, int]) -> Tuple[Tensor, Dict[str, float]]:
        use_triplet = stage == 3 or self.config.use_image_triplet
        use_rec = stage == 4 and self.config.use_image_rec
        if not (use_triplet or use_rec):
            raise ConfigError("stage 4 needs use_image_triplet or use_image_rec")
        concept_vectors, recons = [], []
        for index in batch:
            v = self.model.encode(data.concepts(index, self.config.concept_threshold), order_seeds[index])
            _, trace = self.model.decode_greedy(v, self.config.max_len)
            concept_vectors.append(v)
            recons.append(self.model.reconstruct(trace))
        parts: Dict[str, float] = {}
        loss = None
        if use_triplet:
            features = Tensor(data.features[list(batch)])
            S = similarity_matrix(features, ops.concat_rows(recons), self.model.similarity)
            loss = triplet_loss(S, self.weights.margin)
            parts["triplet"] = loss.item()
        if use_rec:
            rec = _batch_mean([rec_loss(v, r) for v, r in zip(concept_vectors, recons)])
            parts["rec"] = rec.item()
            loss = rec if loss is None else image_loss(loss, rec, self.weights.gamma)
        return loss, parts

    # Stages

    def check_order(self, stage: int) -> None:
        if stage != self.completed_stage + 1 and not self.config.allow_out_of_order:
            raise ContractError(f"stage {stage} cannot run after stage {self.completed_stage}; "
                                f"stages run in order 1-4 (set allow_out_of_order to override)")

    def run_stage(self, stage: int, data: StageData) -> StageResult:
        """Train one stage for its configured epochs, checkpointing after every epoch."""
        if stage not in STAGE_OBJECTIVES:
            raise ContractError(f"unknown stage {stage}")
        self.check_order(stage)
        expected = StagePlan.source(stage)
        if not isinstance(data, expected):
            raise ContractError(f"stage {stage} trains on {expected.__name__}, got {type(data).__name__}")
        if len(data) == 0:
            raise ContractError(f"stage {stage} received no training data")

        config = self.config
        is_image = stage in IMAGE_STAGES
        optimizer = Adam(config.stage_lr(stage), config.adam_beta1, config.adam_beta2, config.adam_eps,
                         frozen=config.freeze if is_image else ())
        epochs = config.stage_epochs(stage)
        start_epoch = self.resume_epoch if stage == self.completed_stage + 1 else 0
        if start_epoch:
            logger.warning(f"Resuming stage {stage} after epoch {start_epoch} with fresh optimizer state")
        logger.info(f"Stage {stage} ({STAGE_OBJECTIVES[stage]}): {len(data)} samples, "
                    f"{epochs} epochs, lr {optimizer.lr}")

        result = StageResult(stage)
        params = self.model.params
        items = list(range(len(data)))
        for epoch in range(start_epoch + 1, epochs + 1):
            rng = np.random.default_rng(_epoch_seed(config.seed, stage, epoch))
            batches = make_batches(items, config.batch_size, int(rng.integers(2 ** 31)), drop_short=is_image)
            order_seeds = dict(zip(items, rng.integers(2 ** 31, size=len(items)).tolist()))
            for batch_no, batch in enumerate(batches):
                params.zero_grad()
                with Graph() as graph:
                    if is_image:
                        loss, parts = self.image_batch_loss(stage, batch, data, order_seeds)
                    else:
                        loss, parts = self.corpus_batch_loss(stage, batch, data, order_seeds)
                graph.backward(loss)
                optimizer.step(params)
                record = LossRecord(stage, epoch, batch_no, loss.item(), **parts)
                result.records.append(record)
                logger.debug(f"stage {stage} epoch {epoch} batch {batch_no}: loss {record.loss:.6f}")
            epoch_loss = np.mean([r.loss for r in result.records if r.epoch == epoch])
            logger.info(f"Stage {stage} epoch {epoch}/{epochs}: mean loss {epoch_loss:.6f}")
            if self.run_dir is not None:
                result.checkpoint = save_model(self.model, self.checkpoint_path(stage, epoch), stage, epoch)
                append_loss_curve(self.run_dir / settings.LOSS_CURVES_FILE,
                                  [r for r in result.records if r.epoch == epoch])

        self.completed_stage = stage
        self.resume_epoch = 0
        if self.run_dir is not None:
            result.checkpoint = save_model(self.model, self.checkpoint_path(stage), stage, epochs)
        logger.info(f"Stage {stage} finished")
        return result

    def run(self, plan: StagePlan, corpus: Optional[CorpusData] = None,
            images: Optional[ImageData] = None) -> List[StageResult]:
        results = []
        for stage in plan.stages:
            data = corpus if stage in CORPUS_STAGES else images
            if data is None:
                raise ContractError(f"stage {stage} needs {StagePlan.source(stage).__name__}")
            results.append(self.run_stage(stage, data))
        return results

    def checkpoint_path(self, stage: int, epoch: Optional[int] = None) -> Path:
        name = f"stage{stage}.ckpt" if epoch is None else f"stage{stage}_epoch{epoch:03d}.ckpt"
        return self.run_dir / "checkpoints" / name


def _batch_mean(terms: List[Tensor]) -> Tensor:
    total = terms[0]
    for term in terms[1:]:
        total = ops.add(total, term)
    return ops.scale(total, 1.0 / len(terms))


def completed_stage_of(stage: int, epoch: int, config: TrainConfig) -> Tuple[int, int]:
    """(last completed stage, epochs already done in the next one) for a checkpoint."""
    if stage == 0:
        return 0, 0
    if epoch >= config.stage_epochs(stage):
        return stage, 0
    return stage - 1, epoch
