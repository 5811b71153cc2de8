"""
Model checkpoints: the binary tensor file plus ``.cfg`` and ``.vocab`` sidecars.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

from config import settings
from config.train_config import TrainConfig
from model.seq2seq import R2MModel
from model.vocabulary import Vocabulary
from numcore.checkpoint import load_tensors, save_tensors
from numcore.errors import CheckpointError, DataFileNotFoundError

logger = logging.getLogger(__name__)

META_STAGE = "meta.stage"
META_EPOCH = "meta.epoch"


@dataclass
class LoadedCheckpoint:
    model: R2MModel
    stage: int
    epoch: int
    path: Path


def sidecar(path: Union[str, Path], suffix: str) -> Path:
    path = Path(path)
    return path.with_name(path.name + suffix)


def save_model(model: R2MModel, path: Union[str, Path], stage: int, epoch: int) -> Path:
    """Write parameters and progress; ``epoch`` counts epochs finished in ``stage``."""
    path = Path(path)
    tensors = model.params.snapshot()
    tensors[META_STAGE] = np.array(float(stage))
    tensors[META_EPOCH] = np.array(float(epoch))
    save_tensors(path, tensors)
    model.config.save(sidecar(path, settings.CHECKPOINT_CONFIG_SUFFIX))
    model.vocab.save(sidecar(path, settings.CHECKPOINT_VOCAB_SUFFIX))
    return path


def load_model(path: Union[str, Path]) -> LoadedCheckpoint:
    """Rebuild the model from the sidecars and restore every parameter."""
    path = Path(path)
    if not path.is_file():
        raise DataFileNotFoundError("checkpoint", path)
    try:
        config = TrainConfig.load(sidecar(path, settings.CHECKPOINT_CONFIG_SUFFIX))
        vocab = Vocabulary.load(sidecar(path, settings.CHECKPOINT_VOCAB_SUFFIX))
    except DataFileNotFoundError as exc:
        raise CheckpointError(f"{path}: missing sidecar ({exc})") from exc

    tensors = load_tensors(path)
    model = R2MModel.build(config, vocab)
    expected = set(model.params.names())
    stored = set(tensors) - {META_STAGE, META_EPOCH}
    if expected != stored:
        missing = sorted(expected - stored)[:5]
        extra = sorted(stored - expected)[:5]
        raise CheckpointError(f"{path}: parameters do not match the config (missing {missing}, unexpected {extra})")
    for name in expected:
        if tensors[name].shape != model.params[name].shape:
            raise CheckpointError(f"{path}: {name} has shape {tensors[name].shape}, "
                                  f"expected {model.params[name].shape}")
    model.params.restore({name: tensors[name] for name in expected})

    stage = int(tensors[META_STAGE]) if META_STAGE in tensors else 0
    epoch = int(tensors[META_EPOCH]) if META_EPOCH in tensors else 0
    logger.info(f"Loaded checkpoint {path} (stage {stage}, epoch {epoch})")
    return LoadedCheckpoint(model, stage, epoch, path)
