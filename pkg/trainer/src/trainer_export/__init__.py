"""Training and export pipeline for the sidutxt model bundle format."""

from .bundle_io import MAGIC, TENSOR_ORDER, TOKENIZER_SPEC, read_bundle, write_bundle
from .data import (
    DatasetError,
    EmbeddingError,
    build_vocabulary,
    encode,
    extract_words,
    load_embeddings,
    load_split,
)
from .model import (
    BATCH_SIZE,
    DEFAULT_EPOCHS,
    EMBEDDING_DIM,
    HIDDEN_UNITS,
    KERNEL_SIZE,
    LEARNING_RATE,
    NUM_FILTERS,
    VALIDATION_FRACTION,
    build_model,
)
from .train import (
    ExportError,
    TrainingConfig,
    TrainingResult,
    export_bundle,
    train_imdb,
    verify_architecture,
)

__version__ = "0.1.0"

__all__ = [
    "MAGIC", "TENSOR_ORDER", "TOKENIZER_SPEC", "read_bundle", "write_bundle",
    "DatasetError", "EmbeddingError", "build_vocabulary", "encode",
    "extract_words", "load_embeddings", "load_split",
    "BATCH_SIZE", "DEFAULT_EPOCHS", "EMBEDDING_DIM", "HIDDEN_UNITS",
    "KERNEL_SIZE", "LEARNING_RATE", "NUM_FILTERS", "VALIDATION_FRACTION",
    "build_model",
    "ExportError", "TrainingConfig", "TrainingResult", "export_bundle",
    "train_imdb", "verify_architecture",
    "__version__",
]
