"""Insertion and deletion faithfulness curves and corpus-level reports.

A faithful heatmap ranks the words the model actually relies on first:
deleting them early should collapse the predicted-class probability
(small deletion AUC) and restoring them early into an empty document
should recover it fast (large insertion AUC).
"""

from __future__ import annotations

import numpy as np

from . import baselines, sidu
from .heatmap import ExplanationHeatmap
from .runtime import UNKNOWN_ID, ModelBundle, TokenSequence, forward_many, tokenize

METHOD_NAMES = (sidu.METHOD_NAME, baselines.GRADCAM_METHOD, baselines.LIME_METHOD)


class EmptyDocumentError(ValueError):
    """The document has no words to perturb."""


def explain_document(
    model: ModelBundle,
    seq: TokenSequence,
    method: str,
    *,
    sidu_config: sidu.SiduConfig | None = None,
    lime_config: baselines.LimeConfig | None = None,
) -> ExplanationHeatmap:
    """Run one explanation method by name."""
    if method == sidu.METHOD_NAME:
        return sidu.explain(model, seq, sidu_config or sidu.SiduConfig())
    if method == baselines.GRADCAM_METHOD:
        return baselines.gradcam_explain(model, seq)
    if method == baselines.LIME_METHOD:
        return baselines.lime_explain(model, seq, lime_config or baselines.LimeConfig())
    raise ValueError(f"unknown method {method!r}, expected one of {', '.join(METHOD_NAMES)}")


def _ranked_positions(heatmap: ExplanationHeatmap) -> list[int]:
    # Descending raw score; ties go to the earlier position.
    scores = heatmap.scores
    return sorted(range(scores.shape[0]), key=lambda pos: (-scores[pos], pos))


def _check_alignment(seq: TokenSequence, heatmap: ExplanationHeatmap) -> int:
    m = seq.num_words
    if m == 0:
        raise EmptyDocumentError("document has no words to perturb")
    if len(heatmap.tokens) != m:
        raise ValueError(
            f"heatmap covers {len(heatmap.tokens)} tokens but the sequence has {m} words"
        )
    return m


def deletion_curve(
    model: ModelBundle, seq: TokenSequence, heatmap: ExplanationHeatmap
) -> np.ndarray:
    """Probability trace while words are removed in descending-score order.

    Returns an (m+1, 2) array of (fraction deleted, P(predicted class))
    points, starting from the intact document and ending with every word
    blanked to the unknown id.
    """
    m = _check_alignment(seq, heatmap)
    order = _ranked_positions(heatmap)
    rows = np.tile(seq.ids, (m + 1, 1))
    for step, pos in enumerate(order, start=1):
        rows[step:, pos] = UNKNOWN_ID
    probs, _ = forward_many(model, rows)
    xs = np.arange(m + 1, dtype=np.float64) / m
    return np.column_stack([xs, probs[:, heatmap.predicted_class]])


def insertion_curve(
    model: ModelBundle, seq: TokenSequence, heatmap: ExplanationHeatmap
) -> np.ndarray:
    """Probability trace while words are restored in descending-score order.

    Starts from an all-unknown sequence and ends at the original document,
    so the final point equals the model's original prediction exactly.
    """
    m = _check_alignment(seq, heatmap)
    order = _ranked_positions(heatmap)
    rows = np.zeros((m + 1, seq.length), dtype=np.int64)
    for step, pos in enumerate(order, start=1):
        rows[step:, pos] = seq.ids[pos]
    probs, _ = forward_many(model, rows)
    xs = np.arange(m + 1, dtype=np.float64) / m
    return np.column_stack([xs, probs[:, heatmap.predicted_class]])


def auc(curve: np.ndarray) -> float:
    """Trapezoidal area under an (x, y) point sequence."""
    pts = np.asarray(curve, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
        raise ValueError("a curve needs at least two (x, y) points")
    xs, ys = pts[:, 0], pts[:, 1]
    if np.any(np.diff(xs) <= 0):
        raise ValueError("curve x-coordinates must be strictly increasing")
    return float(((ys[1:] + ys[:-1]) / 2.0 * np.diff(xs)).sum())


def evaluate_corpus(
    model: ModelBundle,
    documents: list[tuple[str, str]],
    method: str,
    sample_size: int,
    rng_seed: int,
    *,
    sidu_config: sidu.SiduConfig | None = None,
    lime_config: baselines.LimeConfig | None = None,
) -> dict:
    """Insertion/deletion AUC summary for one method over a document sample.

    ``documents`` is a list of (doc_id, text) pairs.  A uniform sample of
    ``sample_size`` documents is drawn without replacement from the seeded
    generator and processed in corpus order, so the report is a pure
    function of its inputs.  Standard deviations use the n-1 denominator
    and are 0.0 for a single-document sample.
    """
    docs = list(documents)
    if not 1 <= sample_size <= len(docs):
        raise ValueError(
            f"sample_size must lie in [1, {len(docs)}], got {sample_size}"
        )
    rng = np.random.default_rng(rng_seed)
    picked = np.sort(rng.choice(len(docs), size=sample_size, replace=False))
    per_document = []
    for idx in picked:
        doc_id, text = docs[int(idx)]
        seq = tokenize(text, model.vocabulary)
        if seq.num_words == 0:
            raise EmptyDocumentError(f"document {doc_id!r} has no words")
        heatmap = explain_document(
            model, seq, method, sidu_config=sidu_config, lime_config=lime_config
        )
        per_document.append(
            {
                "doc_id": doc_id,
                "num_words": seq.num_words,
                "insertion_auc": auc(insertion_curve(model, seq, heatmap)),
                "deletion_auc": auc(deletion_curve(model, seq, heatmap)),
            }
        )
    ins = np.array([d["insertion_auc"] for d in per_document])
    dele = np.array([d["deletion_auc"] for d in per_document])

    def _sd(values: np.ndarray) -> float:
        return float(values.std(ddof=1)) if values.size > 1 else 0.0

    return {
        "method": method,
        "sample_size": sample_size,
        "rng_seed": rng_seed,
        "mean_insertion_auc": float(ins.mean()),
        "sd_insertion_auc": _sd(ins),
        "mean_deletion_auc": float(dele.mean()),
        "sd_deletion_auc": _sd(dele),
        "per_document": per_document,
    }


def faithfulness_table(reports: list[dict]) -> str:
    """Aligned plain-text summary, one row per method report."""
    header = ("method", "insertion auc", "deletion auc")
    rows = [
        (
            r["method"],
            f"{r['mean_insertion_auc']:.4f} +/- {r['sd_insertion_auc']:.4f}",
            f"{r['mean_deletion_auc']:.4f} +/- {r['sd_deletion_auc']:.4f}",
        )
        for r in reports
    ]
    widths = [max(len(header[i]), *(len(row[i]) for row in rows)) if rows else len(header[i])
              for i in range(3)]
    lines = [
        "  ".join(h.ljust(widths[i]) for i, h in enumerate(header)).rstrip(),
        "  ".join("-" * widths[i] for i in range(3)),
    ]
    for row in rows:
        lines.append("  ".join(row[i].ljust(widths[i]) for i in range(3)).rstrip())
    return "\n".join(lines)
