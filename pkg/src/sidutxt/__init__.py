"""Heatmap explanations for 1-D convolutional text classifiers.

The package explains a fixed classifier (shipped as a self-contained
bundle file) with a feature-activation masking method plus two baselines,
and evaluates the resulting heatmaps two ways: faithfulness to the model
(insertion/deletion probability curves) and agreement with human
rationale annotations (word-level Jaccard sweeps and sentence-level
precision/recall/F1).
"""

from .baselines import (
    GRADCAM_METHOD,
    LIME_METHOD,
    LimeConfig,
    feature_map_gradient,
    gradcam_explain,
    head_score,
    lime_explain,
)
from .faithfulness import (
    METHOD_NAMES,
    EmptyDocumentError,
    auc,
    deletion_curve,
    evaluate_corpus,
    explain_document,
    faithfulness_table,
    insertion_curve,
)
from .heatmap import ExplanationHeatmap
from .human_eval import (
    AnnotationError,
    AnnotationRecord,
    jaccard,
    load_annotations,
    parse_annotation,
    sentence_eval,
    sentence_scores,
    split_sentences,
    token_sweep,
    union_annotations,
    xai_word_set,
)
from .render import render_ansi, render_html
from .runtime import (
    MAGIC,
    UNKNOWN_ID,
    UNKNOWN_TOKEN,
    BundleFormatError,
    ModelBundle,
    PredictionVector,
    TokenSequence,
    Vocabulary,
    extract_words,
    forward,
    forward_many,
    load_bundle,
    read_metadata,
    save_bundle,
    tokenize,
)
from .sidu import (
    METHOD_NAME as SIDU_METHOD,
    ConfigError,
    MaskSet,
    SiduConfig,
    SiduWeights,
    apply_mask,
    explain,
    fuse_masks,
    generate_masks,
    mask_weights,
    similarity_difference,
    uniqueness,
    upsample_linear,
)

__version__ = "0.1.0"

__all__ = [
    "AnnotationError",
    "AnnotationRecord",
    "BundleFormatError",
    "ConfigError",
    "EmptyDocumentError",
    "ExplanationHeatmap",
    "GRADCAM_METHOD",
    "LIME_METHOD",
    "LimeConfig",
    "MAGIC",
    "MaskSet",
    "METHOD_NAMES",
    "ModelBundle",
    "PredictionVector",
    "SIDU_METHOD",
    "SiduConfig",
    "SiduWeights",
    "TokenSequence",
    "UNKNOWN_ID",
    "UNKNOWN_TOKEN",
    "Vocabulary",
    "apply_mask",
    "auc",
    "deletion_curve",
    "evaluate_corpus",
    "explain",
    "explain_document",
    "extract_words",
    "faithfulness_table",
    "feature_map_gradient",
    "forward",
    "forward_many",
    "fuse_masks",
    "generate_masks",
    "gradcam_explain",
    "head_score",
    "insertion_curve",
    "jaccard",
    "lime_explain",
    "load_annotations",
    "load_bundle",
    "mask_weights",
    "parse_annotation",
    "read_metadata",
    "render_ansi",
    "render_html",
    "save_bundle",
    "sentence_eval",
    "sentence_scores",
    "similarity_difference",
    "split_sentences",
    "token_sweep",
    "tokenize",
    "union_annotations",
    "uniqueness",
    "upsample_linear",
    "xai_word_set",
]
