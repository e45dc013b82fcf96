"""Writer (and verifying reader) for the model bundle wire format.

Layout: 8 magic bytes, a little-endian uint32 metadata length, a UTF-8
JSON metadata object, then all tensors as little-endian float32 in
row-major order at the offsets the metadata declares. This module is
deliberately independent of the inference package: the format itself is
the contract between the two.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"SIDUTXT1"

TOKENIZER_SPEC = {"kind": "lowercase-alnum", "word_pattern": "[a-z0-9]+"}

OUTPUT_SIGMOID = "sigmoid-scalar"
PADDING_SAME = "same"

TENSOR_ORDER = (
    "embedding", "conv_filters", "conv_bias",
    "dense1_weights", "dense1_bias", "output_weights", "output_bias",
)


def write_bundle(
    path: str | Path,
    tokens: list[str],
    max_sequence_length: int,
    tensors: dict[str, np.ndarray],
) -> None:
    """Write a sigmoid-head same-padding bundle; bytes are deterministic."""
    missing = [name for name in TENSOR_ORDER if name not in tensors]
    if missing:
        raise ValueError(f"missing tensors: {', '.join(missing)}")

    entries = []
    blobs = []
    offset = 0
    for name in TENSOR_ORDER:
        arr = np.ascontiguousarray(tensors[name], dtype="<f4")
        blob = arr.tobytes(order="C")
        entries.append({"name": name, "shape": list(arr.shape), "offset": offset})
        blobs.append(blob)
        offset += len(blob)

    num_filters, kernel_size, embedding_dim = tensors["conv_filters"].shape
    meta = {
        "architecture": {
            "embedding_dim": int(embedding_dim),
            "num_filters": int(num_filters),
            "kernel_size": int(kernel_size),
            "hidden_units": int(tensors["dense1_weights"].shape[1]),
            "output_units": int(tensors["output_weights"].shape[1]),
            "output_kind": OUTPUT_SIGMOID,
            "padding": PADDING_SAME,
            "max_sequence_length": int(max_sequence_length),
        },
        "tokenizer": dict(TOKENIZER_SPEC),
        "tensors": entries,
        "vocabulary": list(tokens),
    }
    meta_bytes = json.dumps(meta, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(meta_bytes)))
        fh.write(meta_bytes)
        for blob in blobs:
            fh.write(blob)


def read_bundle(path: str | Path) -> tuple[dict, dict[str, np.ndarray]]:
    """Read back metadata and tensors, for round-trip verification."""
    blob = Path(path).read_bytes()
    if blob[:8] != MAGIC:
        raise ValueError(f"bad magic {blob[:8]!r}")
    (meta_len,) = struct.unpack_from("<I", blob, 8)
    meta = json.loads(blob[12 : 12 + meta_len].decode("utf-8"))
    data = blob[12 + meta_len :]
    tensors = {}
    for entry in meta["tensors"]:
        count = int(np.prod(entry["shape"]))
        tensors[entry["name"]] = np.frombuffer(
            data, dtype="<f4", count=count, offset=entry["offset"]
        ).reshape(entry["shape"])
    return meta, tensors
