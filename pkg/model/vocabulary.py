"""
Token/id table and scored visual-concept sets.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, Sequence, Tuple, Union

from config import settings
from numcore.errors import DataFileNotFoundError, DataFormatError, VocabularyError

logger = logging.getLogger(__name__)

START_ID = 0
END_ID = 1
UNK_ID = 2


class Vocabulary:
    """Bijective token↔id table with the three reserved tokens at ids 0, 1, 2."""

    def __init__(self, id_to_token: Sequence[str]):
        tokens = list(id_to_token)
        if tuple(tokens[:len(settings.RESERVED_TOKENS)]) != settings.RESERVED_TOKENS:
            raise VocabularyError(
                f"reserved tokens must occupy ids 0..2 as {settings.RESERVED_TOKENS}")
        token_to_id: Dict[str, int] = {}
        for index, token in enumerate(tokens):
            if not token or any(ch.isspace() for ch in token):
                raise VocabularyError(f"invalid token {token!r} at id {index}")
            if token in token_to_id:
                raise VocabularyError(f"duplicate token {token!r} at ids {token_to_id[token]} and {index}")
            token_to_id[token] = index
        self._tokens = tokens
        self._ids = token_to_id

    @classmethod
    def build(cls, words: Iterable[str]) -> "Vocabulary":
        """Reserved tokens first, then the sorted unique non-reserved words."""
        reserved = set(settings.RESERVED_TOKENS)
        return cls(list(settings.RESERVED_TOKENS) + sorted({w for w in words if w not in reserved}))

    @property
    def start_id(self) -> int:
        return START_ID

    @property
    def end_id(self) -> int:
        return END_ID

    @property
    def unk_id(self) -> int:
        return UNK_ID

    @property
    def tokens(self) -> List[str]:
        return list(self._tokens)

    def __len__(self) -> int:
        return len(self._tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._ids

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocabulary) and self._tokens == other._tokens

    def id_of(self, token: str) -> int:
        try:
            return self._ids[token]
        except KeyError:
            raise VocabularyError(f"unknown token {token!r}") from None

    def token_of(self, index: int) -> str:
        if not 0 <= index < len(self._tokens):
            raise VocabularyError(f"id {index} outside vocabulary of {len(self._tokens)} tokens")
        return self._tokens[index]

    def encode(self, tokens: Iterable[str]) -> List[int]:
        """Map tokens to ids; unknown tokens map to ``<UNK>``."""
        return [self._ids.get(token, UNK_ID) for token in tokens]

    def decode(self, ids: Iterable[int], strip_reserved: bool = True) -> List[str]:
        words = [self.token_of(int(i)) for i in ids]
        if strip_reserved:
            words = [w for w in words if w not in settings.RESERVED_TOKENS]
        return words

    def save(self, path: Union[str, Path]) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        lines = [f"{token}\t{index}" for index, token in enumerate(self._tokens)]
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: Union[str, Path]) -> "Vocabulary":
        path = Path(path)
        if not path.is_file():
            raise DataFileNotFoundError("vocabulary", path)
        tokens: List[str] = []
        for line_no, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise DataFormatError(path, line_no, "expected 'token<TAB>id'")
            token, raw_id = parts
            try:
                index = int(raw_id)
            except ValueError:
                raise DataFormatError(path, line_no, f"id is not an integer: {raw_id!r}") from None
            if index != len(tokens):
                raise DataFormatError(path, line_no, f"ids must be contiguous, expected {len(tokens)}")
            tokens.append(token)
        try:
            vocab = cls(tokens)
        except VocabularyError as exc:
            raise DataFormatError(path, None, str(exc)) from exc
        logger.info(f"Loaded vocabulary of {len(vocab)} tokens from {path}")
        return vocab


@dataclass(frozen=True)
class ConceptSet:
    """Ordered (concept id, detection score) pairs; ids unique, scores in [0, 1]."""

    items: Tuple[Tuple[int, float], ...] = ()

    def __post_init__(self):
        seen = set()
        for concept_id, score in self.items:
            if concept_id in seen:
                raise ValueError(f"duplicate concept id {concept_id}")
            if not 0.0 <= score <= 1.0:
                raise ValueError(f"score {score} of concept {concept_id} outside [0, 1]")
            seen.add(concept_id)

    @classmethod
    def from_ids(cls, ids: Iterable[int], score: float = 1.0) -> "ConceptSet":
        return cls(tuple((int(i), float(score)) for i in ids))

    @property
    def ids(self) -> List[int]:
        return [concept_id for concept_id, _ in self.items]

    @property
    def scores(self) -> List[float]:
        return [score for _, score in self.items]

    def tokens(self, vocab: Vocabulary) -> List[str]:
        return [vocab.token_of(concept_id) for concept_id in self.ids]

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self) -> Iterator[Tuple[int, float]]:
        return iter(self.items)
