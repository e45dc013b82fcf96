"""Synthetic model bundles used across the test suite.

Three families:

* ``random_tiny_bundle`` draws a small random architecture from a seed,
  for property-style checks and oracle comparisons.
* ``lexicon_bundle`` is a handcrafted sentiment model whose first two
  filters detect positive and negative words through a dedicated
  embedding channel, so explanations have a known ground truth flavor.
* ``presence_bundle`` predicts class 1 exactly when one designated marker
  word appears anywhere, which pins down faithfulness-curve behavior.
"""

from __future__ import annotations

from functools import cache

import numpy as np

from sidutxt import ModelBundle, TokenSequence, Vocabulary
from sidutxt.runtime import OUTPUT_SIGMOID, OUTPUT_SOFTMAX, PADDING_SAME, PADDING_VALID


def random_tiny_bundle(seed: int, *, padding: str | None = None,
                       output_kind: str | None = None) -> ModelBundle:
    rng = np.random.default_rng(seed)
    max_len = int(rng.integers(4, 17))
    num_filters = int(rng.integers(1, 9))
    embed_dim = int(rng.integers(1, 5))
    hidden = int(rng.integers(1, 5))
    kernel = int(rng.integers(1, min(3, max_len) + 1))
    vocab_size = int(rng.integers(5, 13))
    if padding is None:
        padding = PADDING_SAME if rng.integers(0, 2) else PADDING_VALID
    if output_kind is None:
        output_kind = OUTPUT_SIGMOID if rng.integers(0, 2) else OUTPUT_SOFTMAX
    out_units = 1 if output_kind == OUTPUT_SIGMOID else 2
    tokens = ("<unk>",) + tuple(f"w{i}" for i in range(1, vocab_size))
    return ModelBundle(
        vocabulary=Vocabulary(tokens=tokens, max_sequence_length=max_len),
        embedding=rng.normal(scale=0.8, size=(vocab_size, embed_dim)),
        conv_filters=rng.normal(scale=0.8, size=(num_filters, kernel, embed_dim)),
        conv_bias=rng.normal(scale=0.3, size=num_filters),
        dense1_weights=rng.normal(scale=0.8, size=(num_filters, hidden)),
        dense1_bias=rng.normal(scale=0.3, size=hidden),
        output_weights=rng.normal(scale=0.8, size=(hidden, out_units)),
        output_bias=rng.normal(scale=0.3, size=out_units),
        output_kind=output_kind,
        padding=padding,
    )


def random_sequence(model: ModelBundle, seed: int, *, full_length: bool = False) -> TokenSequence:
    """Random id row for a model; ``full_length`` keeps every position a word."""
    rng = np.random.default_rng(seed)
    length = model.vocabulary.max_sequence_length
    low = 1 if full_length else 0
    ids = rng.integers(low, model.vocabulary.size, size=length)
    if not full_length:
        ids[int(rng.integers(0, length)):] = 0  # give most sequences a padded tail
        if not ids.any():
            ids[0] = 1
    return TokenSequence.from_ids(ids, model.vocabulary)


NEUTRAL_WORDS = (
    "the", "a", "an", "it", "was", "is", "and", "of", "to", "i",
    "this", "that", "movie", "film", "story", "plot", "acting", "cast",
    "scenes", "ending", "watch", "one", "really", "so", "but", "felt",
)
POSITIVE_WORDS = (
    "great", "wonderful", "brilliant", "delightful",
    "superb", "charming", "moving", "perfect",
)
NEGATIVE_WORDS = (
    "awful", "terrible", "boring", "painful",
    "cheap", "dreadful", "clumsy", "dull",
)

LEXICON_MAX_LEN = 48


@cache
def lexicon_bundle() -> ModelBundle:
    """Sentiment model: p(class 1) rises with (positive - negative) word mass.

    Embedding channel 0 carries the sentiment sign, channels 2 and 3 carry
    small per-word patterns so the ten auxiliary filters produce varied
    masks.  Filter 0 fires on positive words, filter 1 on negative ones.
    """
    tokens = ("<unk>",) + NEUTRAL_WORDS + POSITIVE_WORDS + NEGATIVE_WORDS
    vocab = Vocabulary(tokens=tokens, max_sequence_length=LEXICON_MAX_LEN)
    rng = np.random.default_rng(7)
    embedding = np.zeros((vocab.size, 4))
    embedding[1:, 1] = 0.3
    embedding[1:, 2:] = rng.normal(scale=0.5, size=(vocab.size - 1, 2))
    for word in POSITIVE_WORDS:
        embedding[vocab.id_for(word), 0] = 1.0
    for word in NEGATIVE_WORDS:
        embedding[vocab.id_for(word), 0] = -1.0

    num_filters = 12
    conv = np.zeros((num_filters, 1, 4))
    conv[0, 0, 0] = 1.0
    conv[1, 0, 0] = -1.0
    conv[2:, 0, 2:] = rng.normal(scale=0.6, size=(num_filters - 2, 2))
    dense1 = np.zeros((num_filters, 4))
    dense1[0, 0] = 1.0
    dense1[1, 1] = 1.0
    dense1[2:, 2] = 0.05
    output = np.array([[60.0], [-60.0], [0.5], [0.0]])
    return ModelBundle(
        vocabulary=vocab,
        embedding=embedding,
        conv_filters=conv,
        conv_bias=np.zeros(num_filters),
        dense1_weights=dense1,
        dense1_bias=np.zeros(4),
        output_weights=output,
        output_bias=np.zeros(1),
        output_kind=OUTPUT_SIGMOID,
        padding=PADDING_SAME,
    )


PRESENCE_MARKER = "signal"
PRESENCE_FILLERS = ("alpha", "beta", "gamma", "delta", "epsilon", "zeta")
PRESENCE_MAX_LEN = 16


@cache
def presence_bundle() -> ModelBundle:
    """Marker detector: p(class 1) is ~1 iff the marker word is present.

    The logit is 1600 * (marker count / 16) - 50, so one occurrence gives
    +50 and none gives -50; filler words only feed the auxiliary filters.
    """
    tokens = ("<unk>",) + PRESENCE_FILLERS + (PRESENCE_MARKER,)
    vocab = Vocabulary(tokens=tokens, max_sequence_length=PRESENCE_MAX_LEN)
    embedding = np.zeros((vocab.size, 2))
    embedding[1:-1, 1] = 0.2
    embedding[vocab.id_for(PRESENCE_MARKER), 0] = 1.0

    conv = np.zeros((4, 1, 2))
    conv[0, 0, 0] = 1.0
    conv[1, 0, 1] = 0.4
    conv[2, 0, 1] = 0.25
    conv[3, 0, 1] = 0.15
    dense1 = np.array([[1.0, 0.0], [0.0, 0.2], [0.0, 0.2], [0.0, 0.2]])
    return ModelBundle(
        vocabulary=vocab,
        embedding=embedding,
        conv_filters=conv,
        conv_bias=np.zeros(4),
        dense1_weights=dense1,
        dense1_bias=np.zeros(2),
        output_weights=np.array([[1600.0], [0.0]]),
        output_bias=np.array([-50.0]),
        output_kind=OUTPUT_SIGMOID,
        padding=PADDING_SAME,
    )


def presence_document(num_words: int = 12, marker_position: int = 3) -> str:
    """Filler text with the marker word at one position."""
    words = [PRESENCE_FILLERS[i % len(PRESENCE_FILLERS)] for i in range(num_words)]
    words[marker_position] = PRESENCE_MARKER
    return " ".join(words)
