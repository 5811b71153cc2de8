"""
Evaluation: beam-search captions scored with BLEU-1..4 and concept recall.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Union

import pandas as pd

from config import settings
from datakit.synth import SyntheticDataset
from harness.metrics import bleu_scores, concept_recall
from model.encoder import filter_concepts
from model.seq2seq import R2MModel
from model.vocabulary import ConceptSet
from numcore.errors import DataFileNotFoundError, DataFormatError
from numcore.tensor import no_grad

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EvalSet:
    """Model inputs (concept sets) with their reference captions."""

    concepts: Sequence[ConceptSet]
    references: Sequence[Sequence[Sequence[str]]]
    name: str = "eval"

    def __post_init__(self):
        if len(self.concepts) != len(self.references):
            raise ValueError(f"{len(self.concepts)} inputs but {len(self.references)} reference lists")

    def __len__(self) -> int:
        return len(self.concepts)

    @classmethod
    def from_images(cls, dataset: SyntheticDataset, indices: Sequence[int], threshold: float,
                    name: str = "images") -> "EvalSet":
        dictionary = dataset.dictionary_ids
        concepts = [filter_concepts(dataset.detections[i], dictionary, threshold) for i in indices]
        return cls(concepts, [[dataset.captions[i]] for i in indices], name)

    @classmethod
    def from_corpus(cls, dataset: SyntheticDataset, indices: Sequence[int], name: str = "corpus") -> "EvalSet":
        concepts = [dataset.corpus_concepts(i) for i in indices]
        return cls(concepts, [[dataset.corpus[i]] for i in indices], name)


@dataclass
class EvalReport:
    bleu: List[float]
    concept_recall: float
    beam_width: int
    captions: List[List[str]] = field(default_factory=list)
    split: str = "eval"

    def __post_init__(self):
        for value in [*self.bleu, self.concept_recall]:
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"metric {value} outside [0, 1]")

    @property
    def samples(self) -> int:
        return len(self.captions)

    def summary(self) -> dict:
        values = {f"bleu{n}": score for n, score in enumerate(self.bleu, start=1)}
        values["concept_recall"] = self.concept_recall
        return values

    def to_lines(self) -> List[str]:
        lines = [f"split={self.split}", f"samples={self.samples}", f"beam_width={self.beam_width}"]
        lines.extend(f"{key}={value!r}" for key, value in self.summary().items())
        lines.extend(f"caption.{i}={' '.join(words)}" for i, words in enumerate(self.captions))
        return lines

    def save(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("\n".join(self.to_lines()) + "\n", encoding="utf-8")
        return path

    @classmethod
    def load(cls, path: Union[str, Path]) -> "EvalReport":
        path = Path(path)
        if not path.is_file():
            raise DataFileNotFoundError("evaluation report", path)
        values, captions = {}, {}
        for line_no, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
            if not line.strip():
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise DataFormatError(path, line_no, "expected 'key=value'")
            if key.startswith("caption."):
                captions[int(key.split(".", 1)[1])] = value.split()
            else:
                values[key] = value
        try:
            return cls(bleu=[float(values[f"bleu{n}"]) for n in range(1, 5)],
                       concept_recall=float(values["concept_recall"]),
                       beam_width=int(values["beam_width"]),
                       captions=[captions[i] for i in sorted(captions)],
                       split=values.get("split", "eval"))
        except (KeyError, ValueError) as exc:
            raise DataFormatError(path, None, f"incomplete evaluation report: {exc}") from exc

    def metrics_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"metric": list(self.summary()), "value": list(self.summary().values())})

    def captions_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"sample": range(self.samples), "caption": [" ".join(c) for c in self.captions]})


def caption(model: R2MModel, concepts: ConceptSet, beam_width: int, max_len: int,
            greedy: bool = False) -> List[str]:
    """Caption one concept set; the concept order is fixed so the result depends only on the set."""
    v = model.encode(concepts, settings.EVAL_ORDER_SEED)
    if greedy:
        with no_grad():
            words, _ = model.decode_greedy(v, max_len)
        return words
    return model.beam_search(v, beam_width, max_len).caption


def evaluate(model: R2MModel, eval_set: EvalSet, beam_width: Optional[int] = None,
             max_len: Optional[int] = None, greedy: bool = False) -> EvalReport:
    """Caption every input and score against the references; deterministic."""
    if len(eval_set) == 0:
        raise ValueError("evaluation set is empty")
    width = 1 if greedy else beam_width or model.config.beam_width
    max_len = max_len or model.config.max_len
    captions = [caption(model, concepts, width, max_len, greedy=greedy) for concepts in eval_set.concepts]
    concept_tokens = [concepts.tokens(model.vocab) for concepts in eval_set.concepts]
    report = EvalReport(bleu=bleu_scores(captions, eval_set.references),
                        concept_recall=concept_recall(captions, concept_tokens),
                        beam_width=width, captions=captions, split=eval_set.name)
    logger.info(f"Evaluated {len(eval_set)} samples on {eval_set.name}: "
                f"BLEU-4 {report.bleu[3]:.4f}, concept recall {report.concept_recall:.4f}")
    return report
