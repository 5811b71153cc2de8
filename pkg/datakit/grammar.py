"""
Template grammar for the synthetic corpus.

File format (UTF-8, ``#`` comments)::

    template: a <adj> <noun> <verb> on the <noun>
    noun: man dog motorcycle ...
    verb: riding sitting ...
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Sequence, Union

from numcore.errors import DataFileNotFoundError, DataFormatError

logger = logging.getLogger(__name__)

SLOT_TYPES = ("noun", "verb", "adj", "prep")
MIN_TOKENS = 4
MAX_TOKENS = 12


def slot_type(token: str):
    """Return the slot type of ``<noun>``-style tokens, else None."""
    if token.startswith("<") and token.endswith(">") and token[1:-1] in SLOT_TYPES:
        return token[1:-1]
    return None


@dataclass
class Grammar:
    """Templates with typed slots and the fillers for every slot type."""

    templates: List[List[str]] = field(default_factory=list)
    fillers: Dict[str, List[str]] = field(default_factory=dict)

    def validate(self) -> "Grammar":
        if not self.templates:
            raise ValueError("grammar has no templates")
        for index, template in enumerate(self.templates):
            if not MIN_TOKENS <= len(template) <= MAX_TOKENS:
                raise ValueError(f"template {index} has {len(template)} tokens, "
                                 f"expected {MIN_TOKENS}-{MAX_TOKENS}")
            for token in template:
                kind = slot_type(token)
                if kind is not None and not self.fillers.get(kind):
                    raise ValueError(f"template {index} uses <{kind}> but no fillers are defined")
        return self

    @property
    def nouns(self) -> List[str]:
        return list(self.fillers.get("noun", []))

    def words(self) -> List[str]:
        """Every literal token the grammar can produce."""
        found = {t for template in self.templates for t in template if slot_type(t) is None}
        for kind in SLOT_TYPES:
            found.update(self.fillers.get(kind, []))
        return sorted(found)

    def subset(self, template_ids: Sequence[int], filler_parity: int) -> "Grammar":
        """Templates ``template_ids``; verb/adj fillers of one parity, nouns and preps shared."""
        fillers = {}
        for kind, words in self.fillers.items():
            if kind in ("verb", "adj") and len(words) > 1:
                fillers[kind] = words[filler_parity::2]
            else:
                fillers[kind] = list(words)
        return Grammar([list(self.templates[i]) for i in template_ids], fillers).validate()

    def split_domains(self):
        """Disjoint (corpus, image) grammars sharing only nouns and prepositions."""
        if len(self.templates) < 2:
            raise ValueError("need at least two templates to split into disjoint domains")
        even = list(range(0, len(self.templates), 2))
        odd = list(range(1, len(self.templates), 2))
        return self.subset(even, 0), self.subset(odd, 1)

    @classmethod
    def parse(cls, lines: Iterable[str], source: str = "<grammar>") -> "Grammar":
        templates: List[List[str]] = []
        fillers: Dict[str, List[str]] = {}
        for line_no, raw in enumerate(lines, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, rest = line.partition(":")
            key = key.strip()
            if not sep or not rest.strip():
                raise DataFormatError(source, line_no, "expected '<kind>: tokens...'")
            tokens = rest.lower().split()
            if key == "template":
                templates.append(tokens)
            elif key in SLOT_TYPES:
                fillers.setdefault(key, []).extend(tokens)
            else:
                raise DataFormatError(source, line_no, f"unknown entry kind {key!r}")
        try:
            return cls(templates, fillers).validate()
        except ValueError as exc:
            raise DataFormatError(source, None, str(exc)) from exc

    @classmethod
    def load(cls, path: Union[str, Path]) -> "Grammar":
        path = Path(path)
        if not path.is_file():
            raise DataFileNotFoundError("grammar", path)
        grammar = cls.parse(path.read_text(encoding="utf-8").splitlines(), str(path))
        logger.info(f"Loaded grammar with {len(grammar.templates)} templates from {path}")
        return grammar

    def to_lines(self) -> List[str]:
        lines = [f"template: {' '.join(t)}" for t in self.templates]
        lines.extend(f"{kind}: {' '.join(self.fillers[kind])}" for kind in SLOT_TYPES if kind in self.fillers)
        return lines


DEFAULT_GRAMMAR_LINES = [
    "template: a <adj> <noun> <verb> on the <noun>",
    "template: a <noun> is <verb> <prep> a <adj> <noun>",
    "template: the <adj> <noun> <verb> <prep> the <noun>",
    "template: a <noun> and a <noun> <verb> <prep> the <noun>",
    "template: there is a <noun> <prep> the <adj> <noun>",
    "template: a <noun> <verb> <prep> a <noun>",
    "template: two <noun> are <verb> <prep> a <adj> <noun>",
    "template: the <noun> <verb> <prep> a <noun> with a <noun>",
    "template: a <adj> <noun> <verb> near a <noun> on the <noun>",
    "template: a <noun> <verb> <prep> the <noun> of a <noun>",
    "noun: man woman dog cat horse bicycle motorcycle car bus train boat table chair bench",
    "noun: umbrella phone laptop pizza cake bird kite surfboard skateboard beach street field",
    "noun: grass tree clock bowl",
    "verb: riding sitting standing walking holding eating looking lying playing running carrying watching",
    "adj: young old small large red white black brown green wooden busy empty",
    "prep: on near in under beside behind with at",
]


def default_grammar() -> Grammar:
    return Grammar.parse(DEFAULT_GRAMMAR_LINES, "<default grammar>")
