"""
Deterministic synthetic data: a template corpus, image captions from a disjoint
template subset, simulated concept detections and image feature vectors.
"""

import logging
from dataclasses import dataclass, field
from typing import AbstractSet, Dict, Iterable, List, Mapping, Optional, Sequence, Set, Union

import numpy as np

from config import settings
from datakit.grammar import Grammar, slot_type
from model.encoder import Embedding
from model.vocabulary import ConceptSet, Vocabulary

logger = logging.getLogger(__name__)

Seed = Union[int, np.random.SeedSequence]

DEFAULT_NOISE_SIGMA = 0.1
DEFAULT_D_VISUAL = 16
CORPUS_FRACTIONS = {"train": 0.9, "val": 0.1, "test": 0.0}


def tokenize(text: str) -> List[str]:
    """Lowercase whitespace tokenization."""
    return text.lower().split()


def decoder_targets(tokens: Sequence[str], vocab: Vocabulary) -> List[int]:
    """Token ids of a sentence followed by ``<#end>``."""
    return vocab.encode(tokens) + [vocab.end_id]


def synth_corpus(g: Grammar, n: int, seed: Seed) -> List[List[str]]:
    """Draw ``n`` sentences by seeded template and filler sampling."""
    if n < 1:
        raise ValueError(f"corpus size must be >= 1, got {n}")
    if not g.templates:
        raise ValueError("grammar has no templates")
    rng = np.random.default_rng(seed)
    sentences = []
    for _ in range(n):
        template = g.templates[rng.integers(len(g.templates))]
        sentence = []
        for token in template:
            kind = slot_type(token)
            if kind is None:
                sentence.append(token)
            else:
                choices = g.fillers[kind]
                sentence.append(choices[rng.integers(len(choices))])
        sentences.append(sentence)
    return sentences


def extract_concepts(tokens: Iterable[str], dictionary: AbstractSet[str], vocab: Vocabulary) -> ConceptSet:
    """Unique dictionary tokens of a sentence in order of first occurrence, scored 1.0."""
    seen: List[str] = []
    for token in tokens:
        if token in dictionary and token not in seen:
            seen.append(token)
    return ConceptSet.from_ids([vocab.id_of(token) for token in seen], 1.0)


def feature_lift(d: int, d_img: int, seed: Seed) -> np.ndarray:
    """Fixed random linear map from the d-dim visual space to d_img."""
    return np.random.default_rng(seed).normal(0.0, 1.0 / np.sqrt(d), size=(d, d_img))


def synth_image_features(concepts: ConceptSet, emb: Union[Embedding, np.ndarray], noise_sigma: float,
                         seed: Seed, lift: Optional[np.ndarray] = None) -> np.ndarray:
    """Mean of the concept rows of ``emb``, lifted to d_img, plus Gaussian noise.

    Without ``lift`` the identity map is used. An empty concept set gives a
    zero vector plus noise.
    """
    table = emb.table.data if isinstance(emb, Embedding) else np.asarray(emb, dtype=np.float64)
    lift = np.eye(table.shape[1]) if lift is None else lift
    if concepts.ids:
        feature = table[concepts.ids].mean(axis=0) @ lift
    else:
        feature = np.zeros(lift.shape[1])
    if noise_sigma > 0:
        feature = feature + np.random.default_rng(seed).normal(0.0, noise_sigma, size=feature.shape)
    return feature


def simulate_detections(concept_ids: Sequence[int], rng: np.random.Generator,
                        threshold: float = settings.CONCEPT_THRESHOLD) -> ConceptSet:
    """Uniform [0, 1] detection scores with at least one at or above ``threshold``.

    Concepts scored below the threshold stay in the set as the distractors the
    concept filter discards.
    """
    if not concept_ids:
        return ConceptSet()
    scores = rng.uniform(0.0, 1.0, size=len(concept_ids))
    if scores.max() < threshold:
        scores[int(scores.argmax())] = rng.uniform(threshold, 1.0)
    return ConceptSet(tuple((int(cid), float(score)) for cid, score in zip(concept_ids, scores)))


@dataclass
class SyntheticSample:
    tokens: List[str]
    concepts: ConceptSet
    feature: np.ndarray


@dataclass
class DatasetSplit:
    """Disjoint train/val/test index lists drawn from one seed."""

    train: List[int] = field(default_factory=list)
    val: List[int] = field(default_factory=list)
    test: List[int] = field(default_factory=list)
    seed: int = 0

    def __post_init__(self):
        seen: Set[int] = set()
        for name in ("train", "val", "test"):
            indices = getattr(self, name)
            overlap = seen.intersection(indices)
            if overlap or len(set(indices)) != len(indices):
                raise ValueError(f"split {name} repeats indices {sorted(overlap)[:5]}")
            seen.update(indices)

    @classmethod
    def make(cls, n: int, seed: int, fractions: Mapping[str, float] = settings.SPLIT_FRACTIONS) -> "DatasetSplit":
        order = np.random.default_rng(np.random.SeedSequence([seed, n])).permutation(n).tolist()
        n_val = int(round(n * fractions.get("val", 0.0)))
        n_test = int(round(n * fractions.get("test", 0.0)))
        n_train = n - n_val - n_test
        if n_train < 1:
            raise ValueError(f"split of {n} items leaves no training items")
        return cls(sorted(order[:n_train]), sorted(order[n_train:n_train + n_val]),
                   sorted(order[n_train + n_val:]), seed)

    def as_dict(self) -> Dict[str, List[int]]:
        return {"train": self.train, "val": self.val, "test": self.test}


@dataclass
class SyntheticDataset:
    """Unpaired corpus and image set sharing one vocabulary and visual dictionary."""

    vocab: Vocabulary
    dictionary: List[str]
    corpus: List[List[str]]
    corpus_split: DatasetSplit
    captions: List[List[str]]
    detections: List[ConceptSet]
    features: np.ndarray
    image_split: DatasetSplit
    seed: int = 0

    @property
    def dictionary_ids(self) -> Set[int]:
        return {self.vocab.id_of(token) for token in self.dictionary}

    def corpus_concepts(self, index: int) -> ConceptSet:
        return extract_concepts(self.corpus[index], set(self.dictionary), self.vocab)

    def image_sample(self, index: int) -> SyntheticSample:
        return SyntheticSample(self.captions[index], self.detections[index], self.features[index])


def _stream(seed: int, purpose: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([seed, purpose])


def synthesize_dataset(grammar: Grammar, seed: int, n_corpus: int = settings.DEFAULT_N_CORPUS,
                       n_images: int = settings.DEFAULT_N_IMAGES, d_img: int = settings.DEFAULT_D_IMG,
                       noise_sigma: float = DEFAULT_NOISE_SIGMA,
                       d_visual: int = DEFAULT_D_VISUAL) -> SyntheticDataset:
    """Build the whole unpaired dataset; identical arguments give identical data."""
    corpus_grammar, image_grammar = grammar.split_domains()
    corpus = synth_corpus(corpus_grammar, n_corpus, _stream(seed, 0))
    captions = synth_corpus(image_grammar, n_images, _stream(seed, 1))

    dictionary = sorted(set(grammar.nouns))
    vocab = Vocabulary.build([token for sentence in corpus for token in sentence] + dictionary)
    concept_words = set(dictionary)

    visual_table = np.random.default_rng(_stream(seed, 2)).normal(size=(len(vocab), d_visual))
    lift = feature_lift(d_visual, d_img, _stream(seed, 3))
    detection_rng = np.random.default_rng(_stream(seed, 4))
    image_seeds = _stream(seed, 5).spawn(n_images)

    detections = []
    features = np.zeros((n_images, d_img))
    for index, caption in enumerate(captions):
        truth = extract_concepts(caption, concept_words, vocab)
        detections.append(simulate_detections(truth.ids, detection_rng))
        features[index] = synth_image_features(truth, visual_table, noise_sigma, image_seeds[index], lift)

    dataset = SyntheticDataset(
        vocab=vocab,
        dictionary=dictionary,
        corpus=corpus,
        corpus_split=DatasetSplit.make(n_corpus, seed, CORPUS_FRACTIONS),
        captions=captions,
        detections=detections,
        features=features,
        image_split=DatasetSplit.make(n_images, seed),
        seed=seed,
    )
    logger.info(f"Synthesized {n_corpus} sentences and {n_images} images "
                f"(vocabulary {len(vocab)}, dictionary {len(dictionary)})")
    return dataset
