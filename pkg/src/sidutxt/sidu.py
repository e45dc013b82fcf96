"""Similarity-difference and uniqueness mask explainer.

The method reads the convolution layer's post-ReLU activations, binarizes
each filter's activation profile into a coarse mask, resamples the mask to
token resolution, then probes the model: each mask keeps only its tokens
and the rest of the input is blanked to the unknown id.  A mask is scored
by how far its prediction stays from the unmasked one (similarity
difference) and by how distinctive it is against every other masked
prediction (uniqueness).  The top-K masks by combined weight are averaged
into one per-token heatmap, normalized so the hottest token scores 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .heatmap import ExplanationHeatmap
from .runtime import (
    UNKNOWN_ID,
    ModelBundle,
    PredictionVector,
    TokenSequence,
    forward,
    forward_many,
)

METHOD_NAME = "sidu"

DEFAULT_TAU = 0.5
DEFAULT_SIGMA = 0.25
DEFAULT_TOP_K = 10


class ConfigError(ValueError):
    """An explainer hyperparameter is out of range or incompatible."""


@dataclass(frozen=True)
class SiduConfig:
    """Hyperparameters of the mask explainer.

    tau: binarization threshold in (0, 1).
    sigma: bandwidth of the similarity kernel.
    top_k: number of masks fused into the heatmap.
    normalize_activations: threshold each filter against tau times its own
        peak activation instead of against the raw value tau, so filters
        with different dynamic ranges contribute comparable masks.
    """

    tau: float = DEFAULT_TAU
    sigma: float = DEFAULT_SIGMA
    top_k: int = DEFAULT_TOP_K
    normalize_activations: bool = True

    def __post_init__(self) -> None:
        if not 0.0 < self.tau < 1.0:
            raise ConfigError(f"tau must lie in (0, 1), got {self.tau}")
        if self.sigma <= 0.0:
            raise ConfigError(f"sigma must be positive, got {self.sigma}")
        if self.top_k < 1:
            raise ConfigError(f"top_k must be at least 1, got {self.top_k}")

    def as_dict(self) -> dict:
        return {
            "tau": self.tau,
            "sigma": self.sigma,
            "top_k": self.top_k,
            "normalize_activations": self.normalize_activations,
        }


@dataclass(frozen=True)
class MaskSet:
    """Per-filter masks at the three stages of construction.

    coarse: (num_filters, n) binary masks at convolution resolution.
    continuous: (num_filters, seq_len) linear resampling of ``coarse``.
    binary: (num_filters, seq_len) re-threshold of ``continuous`` at tau.
    """

    coarse: np.ndarray
    continuous: np.ndarray
    binary: np.ndarray


def upsample_linear(values: Sequence[float] | np.ndarray, length: int) -> np.ndarray:
    """Endpoint-aligned linear resampling of a 1-d profile.

    Output position t reads the source at coordinate t*(n-1)/(length-1),
    so the first and last samples are preserved.  A single-sample source
    broadcasts to a constant profile.
    """
    src = np.asarray(values, dtype=np.float64)
    if src.ndim != 1 or src.shape[0] < 1:
        raise ValueError(f"expected a non-empty 1-d profile, got shape {src.shape}")
    if length < 1:
        raise ValueError(f"target length must be positive, got {length}")
    n = src.shape[0]
    if length == n:
        return src.copy()
    if n == 1:
        return np.full(length, src[0], dtype=np.float64)
    if length == 1:
        return src[:1].copy()
    positions = np.arange(length, dtype=np.float64) * ((n - 1) / (length - 1))
    return np.interp(positions, np.arange(n, dtype=np.float64), src)


def generate_masks(
    feature_maps: np.ndarray, seq_len: int, config: SiduConfig = SiduConfig()
) -> MaskSet:
    """Binarize each filter's activation profile and resample to token length.

    ``feature_maps`` is the (n, num_filters) post-ReLU activation matrix.
    A filter that never activates yields all-zero masks at every stage.
    """
    fm = np.asarray(feature_maps, dtype=np.float64)
    if fm.ndim != 2:
        raise ValueError(f"feature maps must be 2-d (n, num_filters), got shape {fm.shape}")
    if np.any(fm < 0):
        raise ValueError("feature maps must be non-negative (post-ReLU)")
    if seq_len < fm.shape[0]:
        raise ValueError(
            f"sequence length {seq_len} is shorter than the {fm.shape[0]}-step "
            "activation profile"
        )
    profiles = fm.T  # (num_filters, n)
    if config.normalize_activations:
        thresholds = config.tau * profiles.max(axis=1, keepdims=True)
    else:
        thresholds = np.full((profiles.shape[0], 1), config.tau)
    coarse = (profiles > thresholds).astype(np.float64)
    continuous = np.stack([upsample_linear(row, seq_len) for row in coarse])
    binary = (continuous > config.tau).astype(np.float64)
    return MaskSet(coarse=coarse, continuous=continuous, binary=binary)


def apply_mask(seq: TokenSequence, token_mask: np.ndarray) -> TokenSequence:
    """Blank every position where the mask is 0 by writing the unknown id."""
    mask = np.asarray(token_mask)
    if mask.shape != seq.ids.shape:
        raise ValueError(
            f"mask length {mask.shape} does not match sequence length {seq.ids.shape}"
        )
    ids = np.where(mask > 0, seq.ids, UNKNOWN_ID)
    return TokenSequence(ids=ids, words=seq.words)


def _probs_of(p: PredictionVector | np.ndarray) -> np.ndarray:
    return p.probs if isinstance(p, PredictionVector) else np.asarray(p, dtype=np.float64)


def similarity_difference(
    p_org: PredictionVector | np.ndarray,
    p_masked: PredictionVector | np.ndarray,
    sigma: float = DEFAULT_SIGMA,
) -> float:
    """Kernel similarity between the unmasked and one masked prediction.

    Computes exp(-d / (2 sigma^2)) where d is the euclidean distance
    between the two probability vectors: 1 exactly when they coincide,
    strictly decreasing as the masked prediction drifts away.
    """
    if sigma <= 0.0:
        raise ConfigError(f"sigma must be positive, got {sigma}")
    dist = float(np.linalg.norm(_probs_of(p_org) - _probs_of(p_masked)))
    return math.exp(-dist / (2.0 * sigma * sigma))


def uniqueness(predictions: Iterable[PredictionVector | np.ndarray]) -> np.ndarray:
    """Sum of pairwise distances: U[i] = sum_j ||p_i - p_j||.

    Zero for every entry when all predictions coincide; symmetric in the
    input order.
    """
    rows = [_probs_of(p) for p in predictions]
    if not rows:
        raise ValueError("uniqueness needs at least one prediction")
    stacked = np.stack(rows)
    return _pairwise_distance_sums(stacked)


def _pairwise_distance_sums(probs: np.ndarray) -> np.ndarray:
    diff = probs[:, None, :] - probs[None, :, :]
    return np.sqrt((diff ** 2).sum(axis=-1)).sum(axis=1)


@dataclass(frozen=True)
class SiduWeights:
    """Per-mask scores and the fused selection.

    top_indices holds the top_k mask indices by weight (ties keep the
    smaller index) in ascending index order.
    """

    sid: np.ndarray
    uniqueness: np.ndarray
    weights: np.ndarray
    top_indices: np.ndarray


def mask_weights(
    original_probs: np.ndarray,
    masked_probs: np.ndarray,
    config: SiduConfig = SiduConfig(),
) -> SiduWeights:
    """Score every mask and select the top_k by combined weight."""
    p0 = np.asarray(original_probs, dtype=np.float64)
    probs = np.asarray(masked_probs, dtype=np.float64)
    if probs.ndim != 2 or probs.shape[1] != 2:
        raise ValueError(f"masked predictions must be (num_masks, 2), got {probs.shape}")
    num_masks = probs.shape[0]
    if config.top_k > num_masks:
        raise ConfigError(
            f"top_k={config.top_k} exceeds the number of masks ({num_masks})"
        )
    dist = np.sqrt(((p0[None, :] - probs) ** 2).sum(axis=1))
    sid = np.exp(-dist / (2.0 * config.sigma * config.sigma))
    uniq = _pairwise_distance_sums(probs)
    weights = sid * uniq
    order = np.lexsort((np.arange(num_masks), -weights))
    top = np.sort(order[: config.top_k])
    return SiduWeights(sid=sid, uniqueness=uniq, weights=weights, top_indices=top)


def fuse_masks(
    weights: np.ndarray, token_masks: np.ndarray, top_indices: np.ndarray
) -> np.ndarray:
    """Average the selected masks, each scaled by its weight."""
    idx = np.asarray(top_indices, dtype=np.int64)
    if idx.size == 0:
        raise ValueError("at least one mask index is required")
    w = np.asarray(weights, dtype=np.float64)
    masks = np.asarray(token_masks, dtype=np.float64)
    return (w[idx, None] * masks[idx]).sum(axis=0) / idx.size


def explain(
    model: ModelBundle, seq: TokenSequence, config: SiduConfig = SiduConfig()
) -> ExplanationHeatmap:
    """Produce the fused mask heatmap for one tokenized document.

    The heatmap is normalized by its peak before padding positions are
    dropped, so scores stay in [0, 1].  When every fused weight is zero
    (for example a document of only unknown tokens) the scores are all
    zero and the heatmap's ``all_zero`` flag reports it.
    """
    if config.top_k > model.num_filters:
        raise ConfigError(
            f"top_k={config.top_k} exceeds the model's filter count "
            f"({model.num_filters})"
        )
    p_org, feature_maps = forward(model, seq)
    masks = generate_masks(feature_maps, seq.length, config)
    masked_ids = np.where(masks.binary > 0, seq.ids[None, :], UNKNOWN_ID)
    masked_probs, _ = forward_many(model, masked_ids)
    scored = mask_weights(p_org.probs, masked_probs, config)
    fused = fuse_masks(scored.weights, masks.binary, scored.top_indices)
    peak = float(fused.max())
    scores = fused / peak if peak > 0 else np.zeros_like(fused)
    return ExplanationHeatmap(
        method=METHOD_NAME,
        tokens=seq.words,
        scores=scores[: seq.num_words],
        predicted_class=p_org.predicted_class,
        class_probs=p_org.probs,
        config=config.as_dict(),
    )
