"""Fixtures: a synthetic review corpus, a vector file, one smoke run."""

from __future__ import annotations

import os

os.environ.setdefault("TF_CPP_MIN_LOG_LEVEL", "3")

import pytest

from trainer_export import TrainingConfig, train_imdb

import corpusgen


@pytest.fixture(scope="session")
def corpus_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("reviews")
    corpusgen.write_corpus(root)
    return root


@pytest.fixture(scope="session")
def embeddings_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("vectors") / "vectors.txt"
    corpusgen.write_vectors(path)
    return path


@pytest.fixture(scope="session")
def smoke_config(corpus_dir, embeddings_file):
    return TrainingConfig(
        data_dir=str(corpus_dir),
        embeddings_path=str(embeddings_file),
        seed=0,
        epochs=2,
        vocab_size=100,
        max_sequence_length=32,
        smoke=True,
    )


@pytest.fixture(scope="session")
def smoke_result(smoke_config):
    return train_imdb(smoke_config)
