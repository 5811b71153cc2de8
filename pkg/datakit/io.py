"""
File formats of a dataset directory.

Corpus and captions: one sentence per line. Dictionary: one concept per line.
Detections: one image per line of ``token:score`` items. Features: header
``n d_img`` then n rows of d_img floats written with 17 significant digits.
Splits: one sample index per line.
"""

import logging
from pathlib import Path
from typing import Dict, List, Sequence, Union

import numpy as np
import pandas as pd

from config import settings
from datakit.synth import DatasetSplit, SyntheticDataset
from model.vocabulary import ConceptSet, Vocabulary
from numcore.errors import DataFileNotFoundError, DataFormatError, VocabularyError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def _require(kind: str, path: PathLike) -> Path:
    path = Path(path)
    if not path.is_file():
        raise DataFileNotFoundError(kind, path)
    return path


def _write_lines(path: PathLike, lines: Sequence[str]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("".join(f"{line}\n" for line in lines), encoding="utf-8")
    return path


def _read_lines(kind: str, path: PathLike) -> List[str]:
    return _require(kind, path).read_text(encoding="utf-8").splitlines()


# Sentences

def save_corpus(path: PathLike, sentences: Sequence[Sequence[str]]) -> Path:
    return _write_lines(path, [" ".join(tokens) for tokens in sentences])


def load_corpus(path: PathLike, kind: str = "corpus") -> List[List[str]]:
    sentences = []
    for line_no, line in enumerate(_read_lines(kind, path), start=1):
        tokens = line.split()
        if not tokens:
            raise DataFormatError(path, line_no, "empty sentence")
        sentences.append(tokens)
    return sentences


# Dictionary

def save_dictionary(path: PathLike, concepts: Sequence[str]) -> Path:
    return _write_lines(path, list(concepts))


def load_dictionary(path: PathLike) -> List[str]:
    concepts: List[str] = []
    for line_no, line in enumerate(_read_lines("dictionary", path), start=1):
        token = line.strip()
        if not token:
            continue
        if len(token.split()) != 1:
            raise DataFormatError(path, line_no, f"expected one concept per line, got {line!r}")
        if token in concepts:
            raise DataFormatError(path, line_no, f"duplicate concept {token!r}")
        concepts.append(token)
    return concepts


# Detections

def format_detections(concepts: ConceptSet, vocab: Vocabulary) -> str:
    return " ".join(f"{vocab.token_of(cid)}:{score!r}" for cid, score in concepts)


def parse_detections(line: str, vocab: Vocabulary, path: PathLike = "<detections>",
                     line_no: int = 1) -> ConceptSet:
    items = []
    for item in line.split():
        token, sep, raw_score = item.rpartition(":")
        if not sep or not token:
            raise DataFormatError(path, line_no, f"expected 'token:score', got {item!r}")
        try:
            items.append((vocab.id_of(token), float(raw_score)))
        except ValueError:
            raise DataFormatError(path, line_no, f"score is not a number: {raw_score!r}") from None
        except VocabularyError as exc:
            raise DataFormatError(path, line_no, str(exc)) from exc
    try:
        return ConceptSet(tuple(items))
    except ValueError as exc:
        raise DataFormatError(path, line_no, str(exc)) from exc


def save_detections(path: PathLike, detections: Sequence[ConceptSet], vocab: Vocabulary) -> Path:
    return _write_lines(path, [format_detections(concepts, vocab) for concepts in detections])


def load_detections(path: PathLike, vocab: Vocabulary) -> List[ConceptSet]:
    return [parse_detections(line, vocab, path, line_no)
            for line_no, line in enumerate(_read_lines("detections", path), start=1)]


# Features

def save_features(path: PathLike, features: np.ndarray) -> Path:
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2:
        raise ValueError(f"features must be a matrix, got shape {features.shape}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as handle:
        handle.write(f"{features.shape[0]} {features.shape[1]}\n")
        pd.DataFrame(features).to_csv(handle, sep=" ", header=False, index=False,
                                      float_format="%.17g", lineterminator="\n")
    return path


def _locate_bad_row(lines: List[str], width: int) -> int:
    """1-based file line of the first row that is not ``width`` numbers."""
    for offset, line in enumerate(lines[1:], start=2):
        fields = line.split()
        if len(fields) != width:
            return offset
        try:
            [float(value) for value in fields]
        except ValueError:
            return offset
    return len(lines) + 1


def load_features(path: PathLike) -> np.ndarray:
    path = _require("features", path)
    lines = path.read_text(encoding="utf-8").splitlines()
    header = lines[0].split() if lines else []
    try:
        n, d_img = (int(value) for value in header)
    except ValueError:
        raise DataFormatError(path, 1, f"expected header 'n d_img', got {lines[0] if lines else ''!r}") from None
    rows = [line for line in lines[1:] if line.strip()]
    if len(rows) != n:
        raise DataFormatError(path, 1, f"header declares {n} rows, file has {len(rows)}")
    if n == 0:
        return np.zeros((0, d_img))
    try:
        frame = pd.read_csv(path, sep=" ", header=None, skiprows=1, dtype=np.float64,
                            float_precision="round_trip")
    except (ValueError, pd.errors.ParserError) as exc:
        raise DataFormatError(path, _locate_bad_row(lines, d_img), f"malformed feature row: {exc}") from exc
    if frame.shape[1] != d_img or frame.isna().any().any():
        raise DataFormatError(path, _locate_bad_row(lines, d_img), f"expected {d_img} values per row")
    return frame.to_numpy(dtype=np.float64)


# Splits

def save_split(path: PathLike, indices: Sequence[int]) -> Path:
    return _write_lines(path, [str(int(index)) for index in indices])


def load_split(path: PathLike) -> List[int]:
    indices = []
    for line_no, line in enumerate(_read_lines("split", path), start=1):
        if not line.strip():
            continue
        try:
            indices.append(int(line))
        except ValueError:
            raise DataFormatError(path, line_no, f"expected an integer index, got {line!r}") from None
    return indices


# Whole dataset

def save_dataset(dataset: SyntheticDataset, directory: PathLike) -> Path:
    root = Path(directory)
    root.mkdir(parents=True, exist_ok=True)
    save_corpus(root / settings.CORPUS_FILE, dataset.corpus)
    save_dictionary(root / settings.DICTIONARY_FILE, dataset.dictionary)
    dataset.vocab.save(root / settings.VOCAB_FILE)
    save_detections(root / settings.DETECTIONS_FILE, dataset.detections, dataset.vocab)
    save_corpus(root / settings.CAPTIONS_FILE, dataset.captions)
    save_features(root / settings.FEATURES_FILE, dataset.features)
    for name, indices in _split_indices(dataset).items():
        save_split(root / settings.SPLIT_FILES[name], indices)
    logger.info(f"Saved dataset to {root}")
    return root


def _split_indices(dataset: SyntheticDataset) -> Dict[str, List[int]]:
    return {
        "corpus_train": dataset.corpus_split.train,
        "corpus_val": dataset.corpus_split.val,
        "image_train": dataset.image_split.train,
        "image_val": dataset.image_split.val,
        "image_test": dataset.image_split.test,
    }


def load_dataset(directory: PathLike) -> SyntheticDataset:
    root = Path(directory)
    try:
        vocab = Vocabulary.load(root / settings.VOCAB_FILE)
        corpus = load_corpus(root / settings.CORPUS_FILE)
        captions = load_corpus(root / settings.CAPTIONS_FILE, kind="captions")
        detections = load_detections(root / settings.DETECTIONS_FILE, vocab)
        features = load_features(root / settings.FEATURES_FILE)
        dictionary = load_dictionary(root / settings.DICTIONARY_FILE)
        splits = {name: load_split(root / filename) for name, filename in settings.SPLIT_FILES.items()}
    except (DataFileNotFoundError, DataFormatError) as exc:
        logger.error(f"Error loading dataset from {root}: {exc}")
        raise

    if not len(captions) == len(detections) == features.shape[0]:
        raise DataFormatError(root, None, f"image files disagree: {len(captions)} captions, "
                                          f"{len(detections)} detections, {features.shape[0]} features")
    for name, indices in splits.items():
        size = len(corpus) if name.startswith("corpus") else len(captions)
        bad = [index for index in indices if not 0 <= index < size]
        if bad:
            raise DataFormatError(root / settings.SPLIT_FILES[name], None, f"indices out of range: {bad[:5]}")
    missing = [token for token in dictionary if token not in vocab]
    if missing:
        raise DataFormatError(root / settings.DICTIONARY_FILE, None, f"concepts missing from vocabulary: {missing[:5]}")

    try:
        corpus_split = DatasetSplit(splits["corpus_train"], splits["corpus_val"], [])
        image_split = DatasetSplit(splits["image_train"], splits["image_val"], splits["image_test"])
    except ValueError as exc:
        raise DataFormatError(root, None, str(exc)) from exc
    dataset = SyntheticDataset(vocab, dictionary, corpus, corpus_split, captions, detections,
                               features, image_split)
    logger.info(f"Loaded dataset from {root}: {len(corpus)} sentences, {len(captions)} images")
    return dataset
