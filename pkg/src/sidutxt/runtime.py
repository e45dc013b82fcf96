"""Bundle I/O, tokenization and the deterministic classifier forward pass.

A model bundle is a single portable file that decouples training from
explanation: it carries the vocabulary, the tokenizer settings and every
tensor of a fixed text classifier with the architecture

    embedding lookup -> 1-D convolution + ReLU -> global average pooling
    -> dense + ReLU -> sigmoid or softmax head

File layout, all multi-byte values little-endian:

    bytes 0..7    magic ``SIDUTXT1`` (ASCII)
    bytes 8..11   uint32 length ``L`` of the metadata block
    bytes 12..    ``L`` bytes of UTF-8 JSON metadata
    remainder     raw tensor data: IEEE-754 float32, row-major, starting at
                  the byte offsets declared by the metadata

The metadata declares the architecture, the padding mode, the tokenizer
spec, the vocabulary as an id-ordered token list (id 0 is reserved for the
unknown/masked token) and, for each tensor, its name, shape and offset
into the data section.  Readers reject unknown magic and validate every
declared offset and length against the file size before touching tensor
bytes.

Tensors are stored float32 but all arithmetic runs in float64 copies built
once at load time, so repeated calls are bitwise reproducible.  The batch
code path evaluates every row with the exact arithmetic of a
single-sequence call (stacked per-slice matmuls, never one big GEMM over
the batch axis), which makes results independent of how rows are grouped.
"""

from __future__ import annotations

import json
import re
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping

import numpy as np

MAGIC = b"SIDUTXT1"
UNKNOWN_TOKEN = "<unk>"
UNKNOWN_ID = 0

OUTPUT_SIGMOID = "sigmoid-scalar"
OUTPUT_SOFTMAX = "softmax-vector"
PADDING_SAME = "same"
PADDING_VALID = "valid"

_WORD_RE = re.compile(r"[a-z0-9]+")

# Recorded in every bundle so any writer can prove it tokenizes the same way.
TOKENIZER_SPEC = {"kind": "lowercase-alnum", "word_pattern": _WORD_RE.pattern}

# Rows per chunk in batched forwards; bounds the float64 embedding gather.
_CHUNK_ROWS = 128


class BundleFormatError(ValueError):
    """A bundle file is malformed or internally inconsistent."""


@dataclass(frozen=True)
class Vocabulary:
    """Id-ordered token list plus the model's fixed input length.

    Id 0 is always the reserved unknown/masked token and is never assigned
    to a real word; ids are dense in ``[0, size)``.
    """

    tokens: tuple[str, ...]
    max_sequence_length: int
    _token_to_id: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not self.tokens or self.tokens[0] != UNKNOWN_TOKEN:
            raise BundleFormatError(
                f"vocabulary: id 0 must be the reserved {UNKNOWN_TOKEN!r} token"
            )
        if self.max_sequence_length < 1:
            raise BundleFormatError("vocabulary: max_sequence_length must be positive")
        mapping: dict[str, int] = {}
        for idx, token in enumerate(self.tokens[1:], start=1):
            if token == UNKNOWN_TOKEN or token in mapping:
                raise BundleFormatError(f"vocabulary: duplicate token {token!r}")
            mapping[token] = idx
        object.__setattr__(self, "_token_to_id", mapping)

    @property
    def size(self) -> int:
        return len(self.tokens)

    def id_for(self, word: str) -> int:
        """Map a word to its id; unknown words map to id 0."""
        return self._token_to_id.get(word, UNKNOWN_ID)


def extract_words(text: str) -> list[str]:
    """Lowercase a text and split it into alphanumeric word tokens."""
    return _WORD_RE.findall(text.lower())


@dataclass(frozen=True)
class TokenSequence:
    """Fixed-length id vector for one document plus its surface words.

    ``ids`` always has the model's full input length; positions past the
    document's last word hold the unknown id 0.  ``words`` keeps the
    document's lowercased words (one per non-padding position) so heatmaps
    can show text even for out-of-vocabulary tokens.
    """

    ids: np.ndarray
    words: tuple[str, ...]

    def __post_init__(self) -> None:
        ids = np.asarray(self.ids, dtype=np.int64)
        if ids.ndim != 1:
            raise ValueError(f"token ids must be a 1-d vector, got shape {ids.shape}")
        if np.any(ids < 0):
            raise ValueError("token ids must be non-negative")
        if len(self.words) > ids.shape[0]:
            raise ValueError(
                f"{len(self.words)} words do not fit a length-{ids.shape[0]} sequence"
            )
        ids.setflags(write=False)
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "words", tuple(self.words))

    @classmethod
    def from_ids(cls, ids: Iterable[int], vocabulary: Vocabulary) -> "TokenSequence":
        """Rebuild a sequence from raw ids; trailing zeros count as padding."""
        arr = np.asarray(list(ids), dtype=np.int64)
        if arr.ndim != 1 or arr.shape[0] != vocabulary.max_sequence_length:
            raise ValueError(
                f"expected {vocabulary.max_sequence_length} ids, got shape {arr.shape}"
            )
        if arr.size and int(arr.max()) >= vocabulary.size:
            raise ValueError(
                f"id {int(arr.max())} out of range for a {vocabulary.size}-token vocabulary"
            )
        nonzero = np.flatnonzero(arr)
        n_words = int(nonzero[-1]) + 1 if nonzero.size else 0
        words = tuple(vocabulary.tokens[int(i)] for i in arr[:n_words])
        return cls(ids=arr, words=words)

    @property
    def length(self) -> int:
        """Full input length including padding."""
        return int(self.ids.shape[0])

    @property
    def num_words(self) -> int:
        """Number of non-padding positions."""
        return len(self.words)


def tokenize(text: str, vocabulary: Vocabulary) -> TokenSequence:
    """Turn raw text into a fixed-length id sequence.

    Words beyond ``max_sequence_length`` are dropped; missing positions are
    padded with the unknown id 0.  Out-of-vocabulary words also map to 0
    but stay visible in ``words``.
    """
    words = extract_words(text)[: vocabulary.max_sequence_length]
    ids = np.zeros(vocabulary.max_sequence_length, dtype=np.int64)
    for pos, word in enumerate(words):
        ids[pos] = vocabulary.id_for(word)
    return TokenSequence(ids=ids, words=tuple(words))


@dataclass(frozen=True)
class PredictionVector:
    """Two-class probability vector."""

    probs: np.ndarray

    def __post_init__(self) -> None:
        probs = np.asarray(self.probs, dtype=np.float64)
        if probs.shape != (2,):
            raise ValueError(f"expected 2 class probabilities, got shape {probs.shape}")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    @property
    def predicted_class(self) -> int:
        return int(np.argmax(self.probs))


def _as_f32(name: str, value: Any, ndim: int) -> np.ndarray:
    arr = np.asarray(value, dtype=np.float32)
    if arr.ndim != ndim:
        raise BundleFormatError(f"{name}: expected a {ndim}-d tensor, got shape {arr.shape}")
    return np.ascontiguousarray(arr)


@dataclass(frozen=True)
class ModelBundle:
    """A loaded classifier: vocabulary plus all weight tensors.

    Construction validates every inter-tensor shape constraint and raises
    ``BundleFormatError`` naming the offending tensor, so a bundle object
    that exists is always internally consistent.
    """

    vocabulary: Vocabulary
    embedding: np.ndarray       # (vocab, embed_dim)
    conv_filters: np.ndarray    # (num_filters, kernel, embed_dim)
    conv_bias: np.ndarray       # (num_filters,)
    dense1_weights: np.ndarray  # (num_filters, hidden)
    dense1_bias: np.ndarray     # (hidden,)
    output_weights: np.ndarray  # (hidden, output_units)
    output_bias: np.ndarray     # (output_units,)
    output_kind: str = OUTPUT_SIGMOID
    padding: str = PADDING_SAME
    tokenizer_spec: Mapping[str, str] = field(default_factory=lambda: dict(TOKENIZER_SPEC))
    _f64: tuple[np.ndarray, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        emb = _as_f32("embedding", self.embedding, 2)
        conv = _as_f32("conv_filters", self.conv_filters, 3)
        conv_b = _as_f32("conv_bias", self.conv_bias, 1)
        w1 = _as_f32("dense1_weights", self.dense1_weights, 2)
        b1 = _as_f32("dense1_bias", self.dense1_bias, 1)
        w2 = _as_f32("output_weights", self.output_weights, 2)
        b2 = _as_f32("output_bias", self.output_bias, 1)

        vocab_rows, embed_dim = emb.shape
        num_filters, kernel, conv_dim = conv.shape
        if vocab_rows != self.vocabulary.size:
            raise BundleFormatError(
                f"embedding: {vocab_rows} rows but the vocabulary has "
                f"{self.vocabulary.size} tokens"
            )
        if min(num_filters, kernel, embed_dim) < 1:
            raise BundleFormatError("conv_filters: all dimensions must be positive")
        if conv_dim != embed_dim:
            raise BundleFormatError(
                f"conv_filters: embedding dimension {conv_dim} does not match the "
                f"embedding matrix ({embed_dim})"
            )
        if conv_b.shape != (num_filters,):
            raise BundleFormatError(
                f"conv_bias: expected length {num_filters} (one per filter), "
                f"got {conv_b.shape[0]}"
            )
        if w1.shape[0] != num_filters:
            raise BundleFormatError(
                f"dense1_weights: expected {num_filters} input rows, got {w1.shape[0]}"
            )
        hidden = w1.shape[1]
        if b1.shape != (hidden,):
            raise BundleFormatError(
                f"dense1_bias: expected length {hidden}, got {b1.shape[0]}"
            )
        if w2.shape[0] != hidden:
            raise BundleFormatError(
                f"output_weights: expected {hidden} input rows, got {w2.shape[0]}"
            )
        out_units = w2.shape[1]
        if b2.shape != (out_units,):
            raise BundleFormatError(
                f"output_bias: expected length {out_units}, got {b2.shape[0]}"
            )
        if self.output_kind == OUTPUT_SIGMOID:
            if out_units != 1:
                raise BundleFormatError(
                    f"output_weights: {self.output_kind} head needs 1 output unit, "
                    f"got {out_units}"
                )
        elif self.output_kind == OUTPUT_SOFTMAX:
            if out_units != 2:
                raise BundleFormatError(
                    f"output_weights: {self.output_kind} head needs 2 output units, "
                    f"got {out_units}"
                )
        else:
            raise BundleFormatError(
                f"output_kind: expected {OUTPUT_SIGMOID!r} or {OUTPUT_SOFTMAX!r}, "
                f"got {self.output_kind!r}"
            )
        if self.padding not in (PADDING_SAME, PADDING_VALID):
            raise BundleFormatError(
                f"padding: expected {PADDING_SAME!r} or {PADDING_VALID!r}, "
                f"got {self.padding!r}"
            )
        if self.padding == PADDING_VALID and kernel > self.vocabulary.max_sequence_length:
            raise BundleFormatError(
                f"conv_filters: kernel size {kernel} exceeds max_sequence_length "
                f"{self.vocabulary.max_sequence_length} under valid padding"
            )

        for name, arr in (
            ("embedding", emb), ("conv_filters", conv), ("conv_bias", conv_b),
            ("dense1_weights", w1), ("dense1_bias", b1),
            ("output_weights", w2), ("output_bias", b2),
        ):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "tokenizer_spec", dict(self.tokenizer_spec))
        object.__setattr__(
            self, "_f64",
            tuple(a.astype(np.float64) for a in (emb, conv, conv_b, w1, b1, w2, b2)),
        )

    @property
    def embedding_dim(self) -> int:
        return int(self.embedding.shape[1])

    @property
    def num_filters(self) -> int:
        return int(self.conv_filters.shape[0])

    @property
    def kernel_size(self) -> int:
        return int(self.conv_filters.shape[1])

    @property
    def hidden_units(self) -> int:
        return int(self.dense1_weights.shape[1])

    @property
    def conv_output_length(self) -> int:
        """Positions produced by the convolution for a full-length input."""
        t = self.vocabulary.max_sequence_length
        return t if self.padding == PADDING_SAME else t - self.kernel_size + 1


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _forward_chunk(model: ModelBundle, ids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    emb64, conv64, conv_b64, w1_64, b1_64, w2_64, b2_64 = model._f64
    batch, length = ids.shape
    kernel = model.kernel_size
    x = emb64[ids]  # (batch, length, dim)
    if model.padding == PADDING_SAME:
        left = (kernel - 1) // 2
        x = np.pad(x, ((0, 0), (left, kernel - 1 - left), (0, 0)))
        n_out = length
    else:
        n_out = length - kernel + 1
    # Per-slice stacked matmuls keep each row's arithmetic identical to a
    # batch-of-one call; a single GEMM over the batch axis would not.
    acc = np.zeros((batch, n_out, model.num_filters))
    for offset in range(kernel):
        acc += x[:, offset : offset + n_out, :] @ conv64[:, offset, :].T
    feature_maps = np.maximum(acc + conv_b64, 0.0)
    pooled = feature_maps.mean(axis=1)
    hidden = np.maximum((pooled[:, None, :] @ w1_64)[:, 0, :] + b1_64, 0.0)
    logits = (hidden[:, None, :] @ w2_64)[:, 0, :] + b2_64
    if model.output_kind == OUTPUT_SIGMOID:
        p = _sigmoid(logits[:, 0])
        probs = np.stack([1.0 - p, p], axis=1)
    else:
        shifted = logits - logits.max(axis=1, keepdims=True)
        exp = np.exp(shifted)
        probs = exp / exp.sum(axis=1, keepdims=True)
    return probs, feature_maps


def forward_many(model: ModelBundle, ids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Run the classifier on a batch of id rows.

    Returns ``(probs, feature_maps)`` with shapes ``(batch, 2)`` and
    ``(batch, n, num_filters)``.  Rows are processed in bounded chunks and
    each row's result is bitwise identical to a single-row call.
    """
    ids = np.asarray(ids, dtype=np.int64)
    if ids.ndim == 1:
        ids = ids[None, :]
    if ids.ndim != 2:
        raise ValueError(f"expected a (batch, length) id matrix, got shape {ids.shape}")
    length = model.vocabulary.max_sequence_length
    if ids.shape[1] != length:
        raise ValueError(
            f"sequence length {ids.shape[1]} does not match the model's "
            f"max_sequence_length {length}"
        )
    if ids.size and (int(ids.min()) < 0 or int(ids.max()) >= model.vocabulary.size):
        raise ValueError(
            f"token ids must lie in [0, {model.vocabulary.size}), "
            f"got range [{int(ids.min())}, {int(ids.max())}]"
        )
    probs_parts: list[np.ndarray] = []
    fm_parts: list[np.ndarray] = []
    for start in range(0, ids.shape[0], _CHUNK_ROWS):
        p, f = _forward_chunk(model, ids[start : start + _CHUNK_ROWS])
        probs_parts.append(p)
        fm_parts.append(f)
    return np.concatenate(probs_parts), np.concatenate(fm_parts)


def forward(model: ModelBundle, seq: TokenSequence) -> tuple[PredictionVector, np.ndarray]:
    """Run the classifier on one sequence.

    Returns the class probabilities and the post-ReLU convolution feature
    maps with shape ``(n, num_filters)``.
    """
    probs, feature_maps = forward_many(model, seq.ids)
    return PredictionVector(probs=probs[0]), feature_maps[0]


# Canonical tensor order inside the data section.
_TENSOR_FIELDS = (
    "embedding", "conv_filters", "conv_bias",
    "dense1_weights", "dense1_bias", "output_weights", "output_bias",
)


def save_bundle(model: ModelBundle, path: str | Path) -> None:
    """Write a bundle file; byte output is a pure function of the model."""
    entries = []
    blobs = []
    offset = 0
    for name in _TENSOR_FIELDS:
        arr = getattr(model, name).astype("<f4")
        blob = arr.tobytes(order="C")
        entries.append({"name": name, "shape": list(arr.shape), "offset": offset})
        blobs.append(blob)
        offset += len(blob)
    meta = {
        "architecture": {
            "embedding_dim": model.embedding_dim,
            "num_filters": model.num_filters,
            "kernel_size": model.kernel_size,
            "hidden_units": model.hidden_units,
            "output_units": int(model.output_weights.shape[1]),
            "output_kind": model.output_kind,
            "padding": model.padding,
            "max_sequence_length": model.vocabulary.max_sequence_length,
        },
        "tokenizer": dict(model.tokenizer_spec),
        "tensors": entries,
        "vocabulary": list(model.vocabulary.tokens),
    }
    meta_bytes = json.dumps(meta, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(meta_bytes)))
        fh.write(meta_bytes)
        for blob in blobs:
            fh.write(blob)


def read_metadata(path: str | Path) -> dict[str, Any]:
    """Read and validate just the header and metadata block of a bundle."""
    blob = Path(path).read_bytes()
    if len(blob) < 12:
        raise BundleFormatError(
            f"malformed header: file is {len(blob)} bytes, need at least 12"
        )
    if blob[:8] != MAGIC:
        raise BundleFormatError(f"malformed header: bad magic {blob[:8]!r}")
    (meta_len,) = struct.unpack_from("<I", blob, 8)
    if 12 + meta_len > len(blob):
        raise BundleFormatError(
            f"malformed header: metadata length {meta_len} exceeds file size {len(blob)}"
        )
    try:
        meta = json.loads(blob[12 : 12 + meta_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise BundleFormatError(f"malformed metadata: {exc}") from None
    if not isinstance(meta, dict):
        raise BundleFormatError("malformed metadata: expected a JSON object")
    return meta


def _meta_get(mapping: Mapping[str, Any], key: str, kind: type, where: str) -> Any:
    if key not in mapping:
        raise BundleFormatError(f"malformed metadata: missing {where}{key}")
    value = mapping[key]
    if kind is int and isinstance(value, bool):
        raise BundleFormatError(f"malformed metadata: {where}{key} must be an integer")
    if not isinstance(value, kind):
        raise BundleFormatError(
            f"malformed metadata: {where}{key} must be {kind.__name__}"
        )
    return value


def load_bundle(path: str | Path) -> ModelBundle:
    """Load and validate a bundle file.

    Raises ``BundleFormatError`` for bad magic, truncated or malformed
    metadata, tensor offsets outside the file, and any shape inconsistency;
    messages name the offending tensor or metadata field.
    """
    meta = read_metadata(path)
    blob = Path(path).read_bytes()
    (meta_len,) = struct.unpack_from("<I", blob, 8)
    data = blob[12 + meta_len :]

    arch = _meta_get(meta, "architecture", dict, "")
    vocab_list = _meta_get(meta, "vocabulary", list, "")
    tokenizer = _meta_get(meta, "tokenizer", dict, "")
    tensor_entries = _meta_get(meta, "tensors", list, "")

    for token in vocab_list:
        if not isinstance(token, str):
            raise BundleFormatError("malformed metadata: vocabulary entries must be strings")
    max_len = _meta_get(arch, "max_sequence_length", int, "architecture.")
    vocabulary = Vocabulary(tokens=tuple(vocab_list), max_sequence_length=max_len)

    declared: dict[str, tuple[list[int], int]] = {}
    for entry in tensor_entries:
        if not isinstance(entry, dict):
            raise BundleFormatError("malformed metadata: tensor entries must be objects")
        name = _meta_get(entry, "name", str, "tensor.")
        shape = _meta_get(entry, "shape", list, f"tensor {name}: ")
        offset = _meta_get(entry, "offset", int, f"tensor {name}: ")
        if not shape or not all(isinstance(s, int) and s > 0 for s in shape):
            raise BundleFormatError(f"tensor {name}: shape must be positive integers")
        declared[name] = (shape, offset)

    arrays: dict[str, np.ndarray] = {}
    for name in _TENSOR_FIELDS:
        if name not in declared:
            raise BundleFormatError(f"missing tensor {name}")
        shape, offset = declared[name]
        count = int(np.prod(shape))
        end = offset + 4 * count
        if offset < 0 or end > len(data):
            raise BundleFormatError(
                f"truncated tensor blob: {name} needs data bytes [{offset}, {end}) "
                f"but the data section has {len(data)}"
            )
        arrays[name] = np.frombuffer(data, dtype="<f4", count=count, offset=offset).reshape(shape)

    # Cross-check declared shapes against the architecture block before the
    # inter-tensor validation so errors name the right field.
    expects = {
        "embedding": (len(vocab_list), _meta_get(arch, "embedding_dim", int, "architecture.")),
        "conv_filters": (
            _meta_get(arch, "num_filters", int, "architecture."),
            _meta_get(arch, "kernel_size", int, "architecture."),
            arch["embedding_dim"],
        ),
        "conv_bias": (arch["num_filters"],),
        "dense1_weights": (arch["num_filters"], _meta_get(arch, "hidden_units", int, "architecture.")),
        "dense1_bias": (arch["hidden_units"],),
        "output_weights": (arch["hidden_units"], _meta_get(arch, "output_units", int, "architecture.")),
        "output_bias": (arch["output_units"],),
    }
    for name, want in expects.items():
        if arrays[name].shape != tuple(want):
            raise BundleFormatError(
                f"{name}: declared shape {list(arrays[name].shape)} does not match "
                f"the architecture block (expected {list(want)})"
            )

    return ModelBundle(
        vocabulary=vocabulary,
        output_kind=_meta_get(arch, "output_kind", str, "architecture."),
        padding=_meta_get(arch, "padding", str, "architecture."),
        tokenizer_spec=tokenizer,
        **arrays,
    )
