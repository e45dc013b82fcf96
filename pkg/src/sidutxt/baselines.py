"""Gradient and surrogate-regression baseline explainers.

Both baselines share the heatmap contract of the mask explainer: scores
align with the document's words and the hottest token scores 1.  The
gradient baseline is unsigned; the surrogate regression keeps coefficient
signs so tokens that argue against the predicted class show up negative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .heatmap import ExplanationHeatmap
from .runtime import (
    OUTPUT_SIGMOID,
    UNKNOWN_ID,
    ModelBundle,
    TokenSequence,
    forward,
    forward_many,
)
from .sidu import ConfigError, upsample_linear

GRADCAM_METHOD = "gradcam"
LIME_METHOD = "lime"


def head_score(model: ModelBundle, feature_maps: np.ndarray, class_index: int) -> float:
    """Pre-activation score of one class as a function of the feature maps.

    Runs pooling, the hidden dense layer and the output layer only.  For
    the sigmoid head the class-1 score is the logit and the class-0 score
    is its negation, so increasing either score increases that class's
    probability.
    """
    if class_index not in (0, 1):
        raise ValueError(f"class index must be 0 or 1, got {class_index}")
    _, _, _, w1, b1, w2, b2 = model._f64
    fm = np.asarray(feature_maps, dtype=np.float64)
    pooled = fm.mean(axis=0)
    hidden = np.maximum(pooled @ w1 + b1, 0.0)
    logits = hidden @ w2 + b2
    if model.output_kind == OUTPUT_SIGMOID:
        return float(logits[0]) if class_index == 1 else float(-logits[0])
    return float(logits[class_index])


def feature_map_gradient(
    model: ModelBundle, feature_maps: np.ndarray, class_index: int
) -> np.ndarray:
    """Analytic gradient of ``head_score`` with respect to the feature maps.

    Returns an (n, num_filters) matrix; rows are identical because average
    pooling spreads each filter's contribution evenly over positions.
    """
    if class_index not in (0, 1):
        raise ValueError(f"class index must be 0 or 1, got {class_index}")
    _, _, _, w1, b1, w2, b2 = model._f64
    fm = np.asarray(feature_maps, dtype=np.float64)
    pooled = fm.mean(axis=0)
    pre = pooled @ w1 + b1
    active = (pre > 0).astype(np.float64)
    if model.output_kind == OUTPUT_SIGMOID:
        coef = w2[:, 0] * (1.0 if class_index == 1 else -1.0)
    else:
        coef = w2[:, class_index]
    grad_pooled = w1 @ (coef * active)
    n = fm.shape[0]
    return np.tile(grad_pooled / n, (n, 1))


def gradcam_explain(model: ModelBundle, seq: TokenSequence) -> ExplanationHeatmap:
    """Gradient-weighted activation heatmap for the predicted class.

    Filter importances are the position-averaged gradients of the class
    score; the weighted activation profile is rectified, resampled to
    token resolution and peak-normalized.
    """
    p_org, feature_maps = forward(model, seq)
    grads = feature_map_gradient(model, feature_maps, p_org.predicted_class)
    alpha = grads.mean(axis=0)
    cam = np.maximum(feature_maps @ alpha, 0.0)
    profile = upsample_linear(cam, seq.length)
    peak = float(profile.max())
    scores = profile / peak if peak > 0 else np.zeros_like(profile)
    return ExplanationHeatmap(
        method=GRADCAM_METHOD,
        tokens=seq.words,
        scores=scores[: seq.num_words],
        predicted_class=p_org.predicted_class,
        class_probs=p_org.probs,
        config={},
    )


@dataclass(frozen=True)
class LimeConfig:
    """Surrogate-regression settings.

    num_samples: perturbed sequences drawn per explanation.
    kernel_width: proximity kernel bandwidth; None resolves to
        0.75 * sqrt(max_sequence_length) when the explainer runs.
    ridge_lambda: L2 penalty on the surrogate coefficients (the intercept
        is never penalized).
    rng_seed: seed for the perturbation sampler.
    """

    num_samples: int = 1000
    kernel_width: float | None = None
    ridge_lambda: float = 1e-3
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.num_samples < 10:
            raise ConfigError(f"num_samples must be at least 10, got {self.num_samples}")
        if self.kernel_width is not None and self.kernel_width <= 0:
            raise ConfigError(f"kernel_width must be positive, got {self.kernel_width}")
        if self.ridge_lambda < 0:
            raise ConfigError(f"ridge_lambda must be non-negative, got {self.ridge_lambda}")


def _weighted_ridge(
    design: np.ndarray, targets: np.ndarray, sample_weights: np.ndarray, lam: float
) -> np.ndarray:
    """Ridge coefficients with an unpenalized intercept column appended."""
    rows = design.shape[0]
    sw = np.sqrt(sample_weights)
    a = np.concatenate([design, np.ones((rows, 1))], axis=1) * sw[:, None]
    b = targets * sw
    gram = a.T @ a
    gram[np.arange(design.shape[1]), np.arange(design.shape[1])] += lam
    rhs = a.T @ b
    try:
        beta = np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError:
        beta = np.linalg.lstsq(gram, rhs, rcond=None)[0]
    return beta


def lime_explain(
    model: ModelBundle, seq: TokenSequence, config: LimeConfig = LimeConfig()
) -> ExplanationHeatmap:
    """Local surrogate-regression heatmap over the document's words.

    Draws keep/drop masks over the non-padding positions (each word kept
    with probability one half), scores each perturbed sequence with the
    model, weights samples by a cosine-proximity kernel and fits a ridge
    regression.  Coefficients are normalized by the largest magnitude, so
    scores land in [-1, 1] with the sign kept.
    """
    p_org, _ = forward(model, seq)
    target_class = p_org.predicted_class
    m = seq.num_words
    if m == 0:
        return ExplanationHeatmap(
            method=LIME_METHOD,
            tokens=(),
            scores=np.zeros(0),
            predicted_class=target_class,
            class_probs=p_org.probs,
            config=_lime_config_dict(config, seq),
            signed=True,
        )
    rng = np.random.default_rng(config.rng_seed)
    keep = rng.integers(0, 2, size=(config.num_samples, m)).astype(np.float64)
    ids = np.tile(seq.ids, (config.num_samples, 1))
    ids[:, :m] = np.where(keep > 0, seq.ids[:m][None, :], UNKNOWN_ID)
    probs, _ = forward_many(model, ids)
    targets = probs[:, target_class]

    kept_counts = keep.sum(axis=1)
    cosine = np.sqrt(kept_counts / m)  # cosine(mask, all-ones) for binary masks
    width = config.kernel_width if config.kernel_width is not None else 0.75 * math.sqrt(seq.length)
    sample_weights = np.exp(-((1.0 - cosine) ** 2) / (width * width))

    beta = _weighted_ridge(keep, targets, sample_weights, config.ridge_lambda)
    coefs = beta[:-1]
    peak = float(np.abs(coefs).max())
    scores = coefs / peak if peak > 0 else np.zeros_like(coefs)
    return ExplanationHeatmap(
        method=LIME_METHOD,
        tokens=seq.words,
        scores=scores,
        predicted_class=target_class,
        class_probs=p_org.probs,
        config=_lime_config_dict(config, seq),
        signed=True,
    )


def _lime_config_dict(config: LimeConfig, seq: TokenSequence) -> dict:
    width = config.kernel_width if config.kernel_width is not None else 0.75 * math.sqrt(seq.length)
    return {
        "num_samples": config.num_samples,
        "kernel_width": width,
        "ridge_lambda": config.ridge_lambda,
        "rng_seed": config.rng_seed,
    }
