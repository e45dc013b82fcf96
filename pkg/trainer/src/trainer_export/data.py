"""Corpus loading, vocabulary building, and pre-trained embedding loading.

The tokenizer here must match the one recorded in exported bundles
(lowercase, runs of ``[a-z0-9]+``); the inference runtime re-reads that
spec from the bundle, so the two sides cannot silently diverge.
"""

from __future__ import annotations

import re
from collections import Counter
from pathlib import Path

import numpy as np

UNKNOWN_TOKEN = "<unk>"
WORD_PATTERN = re.compile(r"[a-z0-9]+")

LABEL_DIRS = ("neg", "pos")  # index == class label

DATASET_HELP = (
    "expected the review corpus layout <root>/{split}/pos/*.txt and "
    "<root>/{split}/neg/*.txt. Download the Large Movie Review Dataset "
    "archive (aclImdb_v1.tar.gz) from "
    "https://ai.stanford.edu/~amaas/data/sentiment/ and extract it, then "
    "pass the extracted aclImdb directory"
)

EMBEDDINGS_HELP = (
    "expected a text file with one 'word v1 ... vD' line per vector. "
    "Download glove.6B.zip from https://nlp.stanford.edu/projects/glove/ "
    "and extract glove.6B.300d.txt"
)


class DatasetError(ValueError):
    """The review corpus is missing or not in the expected layout."""


class EmbeddingError(ValueError):
    """The pre-trained embedding file is missing or unusable."""


def extract_words(text: str) -> list[str]:
    return WORD_PATTERN.findall(text.lower())


def load_split(root: str | Path, split: str) -> tuple[list[str], np.ndarray]:
    """Read one corpus split; returns texts and 0/1 labels, neg first.

    File order inside each label directory is sorted, so corpus order is
    a pure function of the directory contents.
    """
    split_dir = Path(root) / split
    if not split_dir.is_dir():
        raise DatasetError(f"missing corpus split directory {split_dir}; {DATASET_HELP}")
    texts: list[str] = []
    labels: list[int] = []
    for label, name in enumerate(LABEL_DIRS):
        label_dir = split_dir / name
        if not label_dir.is_dir():
            raise DatasetError(f"missing label directory {label_dir}; {DATASET_HELP}")
        paths = sorted(label_dir.glob("*.txt"))
        if not paths:
            raise DatasetError(f"no .txt reviews in {label_dir}; {DATASET_HELP}")
        for path in paths:
            texts.append(path.read_text(encoding="utf-8"))
            labels.append(label)
    return texts, np.array(labels, dtype=np.int64)


def build_vocabulary(texts: list[str], size: int) -> list[str]:
    """Most frequent words, ties broken alphabetically, unknown token first.

    Returns at most ``size`` tokens including the unknown token; fewer when
    the corpus has fewer distinct words.
    """
    if size < 2:
        raise ValueError(f"vocabulary size must be at least 2, got {size}")
    counts = Counter()
    for text in texts:
        counts.update(extract_words(text))
    ranked = sorted(counts.items(), key=lambda item: (-item[1], item[0]))
    return [UNKNOWN_TOKEN] + [word for word, _ in ranked[: size - 1]]


def encode(texts: list[str], tokens: list[str], max_sequence_length: int) -> np.ndarray:
    """Token id matrix (docs, max_sequence_length), truncated and zero-padded.

    Padding goes after the words, matching the inference runtime's
    tokenizer, so both sides feed the convolution identical sequences.
    """
    index = {word: i for i, word in enumerate(tokens)}
    ids = np.zeros((len(texts), max_sequence_length), dtype=np.int64)
    for row, text in enumerate(texts):
        for pos, word in enumerate(extract_words(text)[:max_sequence_length]):
            ids[row, pos] = index.get(word, 0)
    return ids


def load_embeddings(
    path: str | Path,
    tokens: list[str],
    dim: int,
    seed: int = 0,
) -> tuple[np.ndarray, int]:
    """Embedding matrix for ``tokens`` from a GloVe-style text file.

    Returns the matrix and the number of tokens found in the file. Words
    absent from the file get a seeded random draw so runs are repeatable;
    the unknown token (row 0) starts at zero. Lines whose field count
    does not match ``dim`` are skipped (multi-word keys in some vector
    files), but a file yielding no usable vectors at all is rejected,
    which catches passing a file of the wrong dimension.
    """
    path = Path(path)
    if not path.is_file():
        raise EmbeddingError(f"missing embedding file {path}; {EMBEDDINGS_HELP}")
    wanted = {word: i for i, word in enumerate(tokens)}
    rng = np.random.default_rng(seed)
    matrix = rng.normal(0.0, 0.05, size=(len(tokens), dim)).astype(np.float32)
    matrix[0] = 0.0
    usable = 0
    hits = 0
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            parts = line.rstrip("\n").split(" ")
            if len(parts) != dim + 1:
                continue
            usable += 1
            row = wanted.get(parts[0])
            if row is not None and row > 0:
                matrix[row] = np.array(parts[1:], dtype=np.float32)
                hits += 1
    if usable == 0:
        raise EmbeddingError(
            f"no usable vectors in {path}: no line had a word plus {dim} values; "
            f"{EMBEDDINGS_HELP}"
        )
    return matrix, hits
