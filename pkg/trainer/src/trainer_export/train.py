"""Training and export orchestration.

``train_imdb`` runs the whole pipeline: load corpus, build vocabulary,
seed embeddings, fit, evaluate. ``export_bundle`` verifies the network
is exactly the fixed architecture, converts layer weights into the
bundle's tensor layout, and writes a parity fixture of held-out reviews
with reference probabilities so the inference runtime can be checked
against the training framework.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import tensorflow as tf

from . import bundle_io, data, model as model_def

PARITY_REVIEWS_PER_LABEL = 5
PARITY_DECIMALS = 6
SMOKE_FRACTION = 0.01
SMOKE_MIN_PER_LABEL = 4
SMOKE_MAX_EPOCHS = 2


class ExportError(ValueError):
    """The model does not match the fixed architecture."""


@dataclass
class TrainingConfig:
    data_dir: str
    embeddings_path: str
    seed: int = 0
    epochs: int = model_def.DEFAULT_EPOCHS
    vocab_size: int = 20000
    max_sequence_length: int = 400
    smoke: bool = False

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ValueError(f"epochs must be at least 1, got {self.epochs}")
        if self.max_sequence_length < model_def.KERNEL_SIZE:
            raise ValueError(
                f"max_sequence_length must be at least {model_def.KERNEL_SIZE}, "
                f"got {self.max_sequence_length}"
            )


@dataclass
class TrainingResult:
    model: tf.keras.Model
    tokens: list[str]
    max_sequence_length: int
    history: dict = field(repr=False)
    test_loss: float = 0.0
    test_accuracy: float = 0.0
    embedding_coverage: int = 0
    num_train_docs: int = 0
    num_test_docs: int = 0
    parity_texts: list[str] = field(default_factory=list)


def _smoke_subsample(texts: list[str], labels: np.ndarray) -> tuple[list[str], np.ndarray]:
    """Small balanced slice: per label, 1% of documents but at least 4."""
    keep: list[int] = []
    for label in (0, 1):
        rows = np.flatnonzero(labels == label)
        count = max(SMOKE_MIN_PER_LABEL, int(len(rows) * SMOKE_FRACTION))
        keep.extend(rows[:count])
    keep.sort()
    return [texts[i] for i in keep], labels[keep]


def train_imdb(config: TrainingConfig) -> TrainingResult:
    """Train the sentiment classifier on an on-disk review corpus."""
    tf.keras.utils.set_random_seed(config.seed)

    train_texts, train_labels = data.load_split(config.data_dir, "train")
    test_texts, test_labels = data.load_split(config.data_dir, "test")

    # Parity reviews come from the full held-out split, before any smoke
    # subsampling, so the fixture is stable across run modes.
    parity_texts = []
    for label in (1, 0):
        rows = np.flatnonzero(test_labels == label)
        parity_texts.extend(test_texts[i] for i in rows[:PARITY_REVIEWS_PER_LABEL])

    epochs = config.epochs
    if config.smoke:
        train_texts, train_labels = _smoke_subsample(train_texts, train_labels)
        test_texts, test_labels = _smoke_subsample(test_texts, test_labels)
        epochs = min(epochs, SMOKE_MAX_EPOCHS)

    tokens = data.build_vocabulary(train_texts, config.vocab_size)
    matrix, coverage = data.load_embeddings(
        config.embeddings_path, tokens, model_def.EMBEDDING_DIM, config.seed
    )

    x_train = data.encode(train_texts, tokens, config.max_sequence_length)
    x_test = data.encode(test_texts, tokens, config.max_sequence_length)

    # Corpus order is all-neg then all-pos; shuffle before fit so the
    # trailing validation slice sees both labels.
    perm = np.random.default_rng(config.seed).permutation(len(x_train))
    x_train = x_train[perm]
    y_train = train_labels[perm].astype(np.float32)

    net = model_def.build_model(len(tokens), config.max_sequence_length, matrix)
    history = net.fit(
        x_train,
        y_train,
        epochs=epochs,
        batch_size=model_def.BATCH_SIZE,
        validation_split=model_def.VALIDATION_FRACTION,
        verbose=0,
    )
    test_loss, test_accuracy = net.evaluate(
        x_test, test_labels.astype(np.float32), verbose=0
    )
    return TrainingResult(
        model=net,
        tokens=tokens,
        max_sequence_length=config.max_sequence_length,
        history=history.history,
        test_loss=float(test_loss),
        test_accuracy=float(test_accuracy),
        embedding_coverage=coverage,
        num_train_docs=len(x_train),
        num_test_docs=len(x_test),
        parity_texts=parity_texts,
    )


def _layer_types(net: tf.keras.Model) -> list[str]:
    return [type(layer).__name__ for layer in net.layers]


def verify_architecture(net: tf.keras.Model) -> dict[str, np.ndarray]:
    """Check the exact layer stack and shapes; return bundle tensors.

    Raises ``ExportError`` naming the first mismatch, so a refused export
    says what was wrong rather than writing a bundle the runtime would
    reject or, worse, silently mis-run.
    """
    expected = ["Embedding", "Conv1D", "Dropout",
                "GlobalAveragePooling1D", "Dense", "Dropout", "Dense"]
    got = _layer_types(net)
    if got != expected:
        raise ExportError(f"layer stack {got} does not match {expected}")

    embedding, conv, _, _, dense1, _, output = net.layers

    emb_weights = embedding.get_weights()[0]
    if emb_weights.shape[1] != model_def.EMBEDDING_DIM:
        raise ExportError(
            f"embedding dimension {emb_weights.shape[1]} does not match "
            f"{model_def.EMBEDDING_DIM}"
        )

    kernel, conv_bias = conv.get_weights()
    kernel_size, _, num_filters = kernel.shape
    if kernel_size != model_def.KERNEL_SIZE:
        raise ExportError(
            f"conv kernel size {kernel_size} does not match {model_def.KERNEL_SIZE}"
        )
    if num_filters != model_def.NUM_FILTERS:
        raise ExportError(
            f"conv filter count {num_filters} does not match {model_def.NUM_FILTERS}"
        )
    if conv.padding != "same":
        raise ExportError(f"conv padding {conv.padding!r} must be 'same'")

    w1, b1 = dense1.get_weights()
    if w1.shape != (model_def.NUM_FILTERS, model_def.HIDDEN_UNITS):
        raise ExportError(
            f"hidden dense shape {w1.shape} does not match "
            f"{(model_def.NUM_FILTERS, model_def.HIDDEN_UNITS)}"
        )
    w2, b2 = output.get_weights()
    if w2.shape != (model_def.HIDDEN_UNITS, 1):
        raise ExportError(
            f"output dense shape {w2.shape} does not match "
            f"{(model_def.HIDDEN_UNITS, 1)}"
        )

    return {
        "embedding": emb_weights,
        # Framework layout is (kernel, channels, filters); the bundle
        # stores (filters, kernel, channels).
        "conv_filters": kernel.transpose(2, 0, 1),
        "conv_bias": conv_bias,
        "dense1_weights": w1,
        "dense1_bias": b1,
        "output_weights": w2,
        "output_bias": b2,
    }


def export_bundle(
    net: tf.keras.Model,
    tokens: list[str],
    max_sequence_length: int,
    out_path: str | Path,
    parity_texts: list[str] | None = None,
    parity_path: str | Path | None = None,
) -> Path | None:
    """Write the bundle and, given reviews, a parity fixture JSON.

    The fixture holds each review's positive-class probability from the
    training framework, rounded to 6 decimal places; the runtime is
    expected to reproduce them within 1e-4.
    """
    tensors = verify_architecture(net)
    if len(tokens) != tensors["embedding"].shape[0]:
        raise ExportError(
            f"vocabulary size {len(tokens)} does not match embedding rows "
            f"{tensors['embedding'].shape[0]}"
        )
    bundle_io.write_bundle(out_path, tokens, max_sequence_length, tensors)

    if not parity_texts:
        return None
    ids = data.encode(parity_texts, tokens, max_sequence_length)
    probs = net.predict(ids, verbose=0)[:, 0]
    fixture = {
        "tolerance": 1e-4,
        "reviews": [
            {"text": text, "probability_positive": round(float(p), PARITY_DECIMALS)}
            for text, p in zip(parity_texts, probs)
        ],
    }
    if parity_path is None:
        parity_path = Path(out_path).with_suffix(".parity.json")
    Path(parity_path).write_text(json.dumps(fixture, indent=2) + "\n", encoding="utf-8")
    return Path(parity_path)
