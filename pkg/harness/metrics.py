"""
Caption metrics: corpus-level BLEU-n and concept recall.
"""

from typing import Iterable, List, Sequence

from sacrebleu.metrics import BLEU

from model.vocabulary import ConceptSet, Vocabulary

Caption = Sequence[str]


def bleu_n(candidates: Sequence[Caption], references: Sequence[Sequence[Caption]], n: int) -> float:
    """Corpus BLEU over 1..n-grams in [0, 1].

    Clipped counts, geometric mean of the n precisions, brevity penalty
    against the closest reference length, no smoothing. Captions are token
    lists; candidates may have differing numbers of references.
    """
    if not 1 <= n <= 4:
        raise ValueError(f"n must lie in 1..4, got {n}")
    if not candidates:
        raise ValueError("BLEU needs at least one candidate")
    if len(candidates) != len(references):
        raise ValueError(f"{len(candidates)} candidates but {len(references)} reference lists")
    if any(len(refs) == 0 for refs in references):
        raise ValueError("every candidate needs at least one reference")

    width = max(len(refs) for refs in references)
    streams: List[List] = [[] for _ in range(width)]
    for refs in references:
        for slot in range(width):
            streams[slot].append(" ".join(refs[slot]) if slot < len(refs) else None)
    hypotheses = [" ".join(candidate) for candidate in candidates]
    metric = BLEU(tokenize="none", smooth_method="none", max_ngram_order=n)
    return metric.corpus_score(hypotheses, streams).score / 100.0


def bleu_scores(candidates: Sequence[Caption], references: Sequence[Sequence[Caption]]) -> List[float]:
    return [bleu_n(candidates, references, n) for n in range(1, 5)]


def concept_recall(captions: Sequence[Caption], concept_sets: Sequence[Iterable[str]]) -> float:
    """Mean fraction of each sample's concepts that appear in its caption.

    An empty concept set counts as fully recalled.
    """
    if len(captions) != len(concept_sets):
        raise ValueError(f"{len(captions)} captions but {len(concept_sets)} concept sets")
    if not captions:
        raise ValueError("concept recall needs at least one sample")
    total = 0.0
    for caption, concepts in zip(captions, concept_sets):
        wanted = set(concepts)
        total += len(wanted & set(caption)) / len(wanted) if wanted else 1.0
    return total / len(captions)


def concept_words(concepts: ConceptSet, vocab: Vocabulary) -> List[str]:
    return concepts.tokens(vocab)
