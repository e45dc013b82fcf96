"""The fixed classifier architecture.

Every dimension except vocabulary size and sequence length is pinned;
the exporter refuses anything else, so a bundle on disk always means
exactly this network.
"""

from __future__ import annotations

import numpy as np
import tensorflow as tf

EMBEDDING_DIM = 300
NUM_FILTERS = 128
KERNEL_SIZE = 5
HIDDEN_UNITS = 64
DROPOUT_RATE = 0.2
LEARNING_RATE = 2e-4
DEFAULT_EPOCHS = 30
BATCH_SIZE = 32
VALIDATION_FRACTION = 0.15


def build_model(
    vocab_size: int,
    max_sequence_length: int,
    embedding_matrix: np.ndarray | None = None,
) -> tf.keras.Model:
    """Embedding -> 1-D conv -> global average pooling -> dense head.

    ``embedding_matrix`` (vocab_size, 300) seeds the embedding layer,
    which stays trainable so the vectors can adapt to the task.
    """
    if embedding_matrix is not None:
        expected = (vocab_size, EMBEDDING_DIM)
        if embedding_matrix.shape != expected:
            raise ValueError(
                f"embedding matrix shape {embedding_matrix.shape} does not "
                f"match {expected}"
            )
    layers = tf.keras.layers
    embedding = layers.Embedding(
        vocab_size,
        EMBEDDING_DIM,
        embeddings_initializer=(
            tf.keras.initializers.Constant(embedding_matrix)
            if embedding_matrix is not None
            else "uniform"
        ),
    )
    model = tf.keras.Sequential(
        [
            tf.keras.Input(shape=(max_sequence_length,)),
            embedding,
            layers.Conv1D(NUM_FILTERS, KERNEL_SIZE, padding="same", activation="relu"),
            layers.Dropout(DROPOUT_RATE),
            layers.GlobalAveragePooling1D(),
            layers.Dense(HIDDEN_UNITS, activation="relu"),
            layers.Dropout(DROPOUT_RATE),
            layers.Dense(1, activation="sigmoid"),
        ]
    )
    model.compile(
        optimizer=tf.keras.optimizers.Adam(learning_rate=LEARNING_RATE),
        loss="binary_crossentropy",
        metrics=["accuracy"],
    )
    return model
