"""
Training configuration: a dataclass plus a line-oriented ``key = value`` file format.
"""

import dataclasses
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, List, Optional, Tuple, Union

from numcore.errors import ConfigError, DataFileNotFoundError

logger = logging.getLogger(__name__)

_TRUE = {"true", "yes", "on", "1"}
_FALSE = {"false", "no", "off", "0"}
_CELLS = ("rm", "lstm")


@dataclass
class TrainConfig:
    """All model dimensions, loss weights, schedule and paths."""

    # Model dimensions
    d: int = 32
    H: int = 2
    d_k: int = 16
    d_v: int = 16
    d_K: int = 16
    d_V: int = 16
    N: int = 1
    lambda1: Optional[float] = None  # None means d_k
    lambda2: Optional[float] = None  # None means d_K
    d_img: int = 64
    ln_eps: float = 1e-5
    init_scale: float = 0.1

    # Architecture switches
    shared_embeddings: bool = True
    head_bias: bool = True
    use_fusion_memory: bool = True
    decoder_cell: str = "rm"
    reconstructor_cell: str = "rm"
    cosine_similarity: bool = False

    # Losses
    margin: float = 0.2
    beta: float = 1.0
    gamma: float = 1.0
    use_text_rec: bool = True
    use_image_triplet: bool = True
    use_image_rec: bool = True

    # Optimization; stage 1-2 : stage 3-4 learning rates keep a 10:1 ratio
    lr_stage1: float = 5e-3
    lr_stage2: float = 5e-3
    lr_stage3: float = 5e-4
    lr_stage4: float = 5e-4
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    batch_size: int = 16
    epochs_stage1: int = 30
    epochs_stage2: int = 10
    epochs_stage3: int = 5
    epochs_stage4: int = 5
    freeze: Tuple[str, ...] = field(default_factory=tuple)
    allow_out_of_order: bool = False

    # Decoding
    beam_width: int = 3
    max_len: int = 16
    concept_threshold: float = 0.3

    # Seeds and paths
    seed: int = 0
    data_dir: str = "data/synthetic"
    run_dir: str = "runs/default"

    @property
    def fm_scale(self) -> float:
        return float(self.lambda1) if self.lambda1 is not None else float(self.d_k)

    @property
    def rm_scale(self) -> float:
        return float(self.lambda2) if self.lambda2 is not None else float(self.d_K)

    def stage_lr(self, stage: int) -> float:
        return getattr(self, f"lr_stage{stage}")

    def stage_epochs(self, stage: int) -> int:
        return getattr(self, f"epochs_stage{stage}")

    def replace(self, **overrides) -> "TrainConfig":
        updated = dataclasses.replace(self, **overrides)
        updated.validate()
        return updated

    def validate(self) -> "TrainConfig":
        """Check every cross-field invariant; raise ConfigError on the first failure."""
        for name in ("d", "H", "d_k", "d_v", "d_K", "d_V", "N", "d_img", "batch_size",
                     "beam_width", "max_len"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.H * self.d_V != self.d:
            raise ConfigError(f"H*d_V must equal d for the memory head concatenation "
                              f"({self.H}*{self.d_V} != {self.d})")
        if self.fm_scale <= 0 or self.rm_scale <= 0:
            raise ConfigError("lambda1 and lambda2 must be positive")
        for name in ("margin", "beta", "gamma"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0, got {getattr(self, name)}")
        for stage in (1, 2, 3, 4):
            if self.stage_lr(stage) <= 0:
                raise ConfigError(f"lr_stage{stage} must be positive")
            if self.stage_epochs(stage) < 0:
                raise ConfigError(f"epochs_stage{stage} must be >= 0")
        if not 0.0 <= self.concept_threshold <= 1.0:
            raise ConfigError(f"concept_threshold must lie in [0, 1], got {self.concept_threshold}")
        for name in ("decoder_cell", "reconstructor_cell"):
            if getattr(self, name) not in _CELLS:
                raise ConfigError(f"{name} must be one of {_CELLS}, got {getattr(self, name)!r}")
        if self.ln_eps <= 0 or self.init_scale <= 0:
            raise ConfigError("ln_eps and init_scale must be positive")
        return self

    # File format

    @classmethod
    def from_lines(cls, lines: Iterable[str], source: str = "<config>") -> "TrainConfig":
        types = {f.name: f.type for f in dataclasses.fields(cls)}
        values = {}
        for line_no, raw in enumerate(lines, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{source}:{line_no}: expected 'key = value', got {raw.strip()!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in types:
                raise ConfigError(f"{source}:{line_no}: unknown key {key!r}")
            try:
                values[key] = _parse_value(types[key], value)
            except ValueError as exc:
                raise ConfigError(f"{source}:{line_no}: bad value for {key}: {exc}") from exc
        return cls(**values).validate()

    @classmethod
    def load(cls, path: Union[str, Path]) -> "TrainConfig":
        path = Path(path)
        if not path.is_file():
            raise DataFileNotFoundError("config", path)
        config = cls.from_lines(path.read_text(encoding="utf-8").splitlines(), str(path))
        logger.info(f"Loaded config from {path}")
        return config

    def to_lines(self) -> List[str]:
        return [f"{f.name} = {_format_value(getattr(self, f.name))}" for f in dataclasses.fields(self)]

    def save(self, path: Union[str, Path]) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("\n".join(self.to_lines()) + "\n", encoding="utf-8")


def _parse_value(kind, text: str):
    if kind is bool:
        lowered = text.lower()
        if lowered in _TRUE:
            return True
        if lowered in _FALSE:
            return False
        raise ValueError(f"not a boolean: {text!r}")
    if kind is int:
        return int(text)
    if kind is float:
        return float(text)
    if kind == Optional[float]:
        return None if text.lower() in ("auto", "none", "") else float(text)
    if kind == Tuple[str, ...]:
        return tuple(part.strip() for part in text.split(",") if part.strip())
    return text


def _format_value(value) -> str:
    if value is None:
        return "auto"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(value)
    if isinstance(value, float):
        return repr(value)
    return str(value)
