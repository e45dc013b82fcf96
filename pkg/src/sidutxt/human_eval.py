"""Agreement between explanation heatmaps and human rationale annotations.

Annotators mark, per review, the influential words (up to 10) and the
influential sentences (up to 5, as 0-based indices into the review's
sentence segmentation).  Reviews carry multiple annotators; evaluation
runs against the per-review union.  Word-level agreement is a Jaccard
index swept over score thresholds; sentence-level agreement is
precision/recall/F1 of the top-scoring sentences against the annotated
ones.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .heatmap import ExplanationHeatmap
from .runtime import extract_words

LABELS = ("positive", "negative")

_SENTENCE_SPLIT_RE = re.compile(r"(?<=[.!?])\s+")

MAX_ANNOTATED_WORDS = 10
MAX_ANNOTATED_SENTENCES = 5


class AnnotationError(ValueError):
    """An annotation record is malformed or inconsistent with its review."""


@dataclass(frozen=True)
class AnnotationRecord:
    """One annotator's (or one union's) rationale for one review.

    ``words`` holds lowercased single words; multi-word phrases from the
    raw input are split with the model tokenizer so word sets stay
    comparable with heatmap tokens.  ``sentences`` holds 0-based indices
    into ``split_sentences(text)``.
    """

    review_id: str
    text: str
    label: str
    words: tuple[str, ...]
    sentences: tuple[int, ...]


def split_sentences(text: str) -> list[str]:
    """Split on sentence-final punctuation followed by whitespace."""
    parts = _SENTENCE_SPLIT_RE.split(text.strip())
    return [p for p in parts if p.strip()]


def parse_annotation(record: Mapping, index: int) -> AnnotationRecord:
    """Validate one raw annotation object.

    Error messages carry the record index and review id so a bad entry in
    a large file can be found without a debugger.
    """
    where = f"annotation record {index}"
    if not isinstance(record, Mapping):
        raise AnnotationError(f"{where}: expected an object")
    review_id = record.get("review_id")
    if not isinstance(review_id, str) or not review_id:
        raise AnnotationError(f"{where}: review_id must be a non-empty string")
    where = f"{where} (review {review_id!r})"
    text = record.get("text")
    if not isinstance(text, str) or not text.strip():
        raise AnnotationError(f"{where}: text must be a non-empty string")
    label = record.get("label")
    if label not in LABELS:
        raise AnnotationError(
            f"{where}: label must be one of {', '.join(LABELS)}, got {label!r}"
        )
    raw_words = record.get("words")
    if not isinstance(raw_words, list) or not raw_words:
        raise AnnotationError(f"{where}: words must be a non-empty list")
    if len(raw_words) > MAX_ANNOTATED_WORDS:
        raise AnnotationError(
            f"{where}: at most {MAX_ANNOTATED_WORDS} word entries allowed, "
            f"got {len(raw_words)}"
        )
    text_words = set(extract_words(text))
    words: list[str] = []
    for entry in raw_words:
        if not isinstance(entry, str):
            raise AnnotationError(f"{where}: word entries must be strings")
        pieces = extract_words(entry)
        if not pieces:
            raise AnnotationError(f"{where}: word entry {entry!r} contains no words")
        for piece in pieces:
            if piece not in text_words:
                raise AnnotationError(
                    f"{where}: annotated word {piece!r} does not appear in the review text"
                )
            if piece not in words:
                words.append(piece)
    raw_sentences = record.get("sentences", [])
    if not isinstance(raw_sentences, list):
        raise AnnotationError(f"{where}: sentences must be a list of indices")
    if len(raw_sentences) > MAX_ANNOTATED_SENTENCES:
        raise AnnotationError(
            f"{where}: at most {MAX_ANNOTATED_SENTENCES} sentence indices allowed, "
            f"got {len(raw_sentences)}"
        )
    n_sentences = len(split_sentences(text))
    sentences: list[int] = []
    for entry in raw_sentences:
        if not isinstance(entry, int) or isinstance(entry, bool):
            raise AnnotationError(f"{where}: sentence indices must be integers")
        if not 0 <= entry < n_sentences:
            raise AnnotationError(
                f"{where}: sentence index {entry} out of range, the review has "
                f"{n_sentences} sentences"
            )
        if entry not in sentences:
            sentences.append(entry)
    return AnnotationRecord(
        review_id=review_id,
        text=text,
        label=label,
        words=tuple(words),
        sentences=tuple(sorted(sentences)),
    )


def load_annotations(records: Iterable[Mapping]) -> dict[str, list[AnnotationRecord]]:
    """Parse and group raw annotation objects by review id.

    All records of one review must carry the identical text.
    """
    grouped: dict[str, list[AnnotationRecord]] = {}
    for index, raw in enumerate(records):
        record = parse_annotation(raw, index)
        bucket = grouped.setdefault(record.review_id, [])
        if bucket and bucket[0].text != record.text:
            raise AnnotationError(
                f"annotation record {index} (review {record.review_id!r}): "
                "text differs from an earlier record of the same review"
            )
        bucket.append(record)
    if not grouped:
        raise AnnotationError("no annotation records found")
    return grouped


def union_annotations(records: Sequence[AnnotationRecord]) -> AnnotationRecord:
    """Merge one review's annotators: word/sentence unions, majority label.

    An even label split is ambiguous and raises, naming the review.
    """
    if not records:
        raise AnnotationError("cannot merge an empty annotation list")
    review_id = records[0].review_id
    for rec in records[1:]:
        if rec.review_id != review_id or rec.text != records[0].text:
            raise AnnotationError(
                f"review {review_id!r}: cannot merge annotations of different reviews"
            )
    words: list[str] = []
    for rec in records:
        for word in rec.words:
            if word not in words:
                words.append(word)
    sentences = sorted({s for rec in records for s in rec.sentences})
    votes = sum(1 if rec.label == LABELS[0] else -1 for rec in records)
    if votes == 0:
        raise AnnotationError(
            f"review {review_id!r}: annotators are split evenly between labels"
        )
    label = LABELS[0] if votes > 0 else LABELS[1]
    return AnnotationRecord(
        review_id=review_id,
        text=records[0].text,
        label=label,
        words=tuple(words),
        sentences=tuple(sentences),
    )


def jaccard(a: Iterable, b: Iterable) -> float:
    """Set overlap |a & b| / |a | b|; two empty sets count as agreement 1."""
    sa, sb = set(a), set(b)
    if not sa and not sb:
        return 1.0
    return len(sa & sb) / len(sa | sb)


def word_scores(heatmap: ExplanationHeatmap) -> dict[str, float]:
    """Best score magnitude per distinct word in the heatmap."""
    best: dict[str, float] = {}
    for token, mag in zip(heatmap.tokens, heatmap.magnitudes()):
        if mag > best.get(token, -1.0):
            best[token] = float(mag)
    return best


def xai_word_set(heatmap: ExplanationHeatmap, threshold: float) -> set[str]:
    """Words the method selects at a threshold.

    A word is selected when its best score magnitude is nonzero and at
    least ``threshold``; at threshold 0 this is exactly the set of words
    the method scored at all.
    """
    return {
        word for word, mag in word_scores(heatmap).items()
        if mag > 0.0 and mag >= threshold
    }


def token_sweep(
    heatmaps: Mapping[str, ExplanationHeatmap],
    annotations: Mapping[str, AnnotationRecord],
    thresholds: Sequence[float],
    *,
    restrict_to_human: bool = False,
) -> list[float]:
    """Mean word-level Jaccard against the human sets, per threshold.

    ``annotations`` maps review ids to the per-review union record;
    ``heatmaps`` must cover every annotated review.  With
    ``restrict_to_human`` the method's word set is intersected with the
    human set before scoring, which isolates ranking quality from
    vocabulary coverage.
    """
    review_ids = sorted(annotations)
    for review_id in review_ids:
        if review_id not in heatmaps:
            raise AnnotationError(f"review {review_id!r} has no heatmap")
    means: list[float] = []
    for threshold in thresholds:
        values = []
        for review_id in review_ids:
            human = set(annotations[review_id].words)
            selected = xai_word_set(heatmaps[review_id], threshold)
            if restrict_to_human:
                selected &= human
            values.append(jaccard(selected, human))
        means.append(float(np.mean(values)))
    return means


def sentence_scores(
    text: str, heatmap: ExplanationHeatmap, aggregate: str = "mean"
) -> np.ndarray:
    """Score each sentence from its words' heatmap magnitudes.

    Sentence boundaries never split an alphanumeric run, so the
    concatenated per-sentence word lists line up with the heatmap tokens
    by offset.  Sentences whose words all fall past the model's input
    length (or that contain no words) score 0.
    """
    if aggregate not in ("mean", "max"):
        raise ValueError(f"aggregate must be 'mean' or 'max', got {aggregate!r}")
    sentences = split_sentences(text)
    if not sentences:
        raise AnnotationError("text has no sentences")
    doc_words = extract_words(text)
    if list(heatmap.tokens) != doc_words[: len(heatmap.tokens)]:
        raise AnnotationError("heatmap tokens do not match the review text")
    mags = heatmap.magnitudes()
    out = []
    offset = 0
    for sentence in sentences:
        count = len(extract_words(sentence))
        span = mags[offset : offset + count]
        if span.size == 0:
            out.append(0.0)
        elif aggregate == "mean":
            out.append(float(span.mean()))
        else:
            out.append(float(span.max()))
        offset += count
    return np.array(out, dtype=np.float64)


def sentence_eval(
    heatmaps: Mapping[str, ExplanationHeatmap],
    annotations: Mapping[str, AnnotationRecord],
    *,
    top_sentences: int = MAX_ANNOTATED_SENTENCES,
    aggregate: str = "mean",
) -> dict:
    """Precision/recall/F1 of top-scoring sentences against the human ones.

    Per review the ``top_sentences`` best-scoring sentences are predicted
    (ties keep the earlier sentence; short reviews predict every
    sentence).  F1 is defined as 0 when precision and recall are both 0.
    """
    if top_sentences < 1:
        raise ValueError(f"top_sentences must be at least 1, got {top_sentences}")
    review_ids = sorted(annotations)
    per_review = []
    for review_id in review_ids:
        if review_id not in heatmaps:
            raise AnnotationError(f"review {review_id!r} has no heatmap")
        record = annotations[review_id]
        scores = sentence_scores(record.text, heatmaps[review_id], aggregate)
        n = scores.shape[0]
        keep = min(top_sentences, n)
        ranked = sorted(range(n), key=lambda s: (-scores[s], s))
        predicted = set(ranked[:keep])
        human = set(record.sentences)
        hits = len(predicted & human)
        precision = hits / len(predicted)
        recall = hits / len(human) if human else 0.0
        f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
        per_review.append(
            {
                "review_id": review_id,
                "precision": precision,
                "recall": recall,
                "f1": f1,
                "predicted": sorted(predicted),
                "annotated": sorted(human),
            }
        )
    return {
        "top_sentences": top_sentences,
        "aggregate": aggregate,
        "mean_precision": float(np.mean([r["precision"] for r in per_review])),
        "mean_recall": float(np.mean([r["recall"] for r in per_review])),
        "mean_f1": float(np.mean([r["f1"] for r in per_review])),
        "per_review": per_review,
    }


def sentence_table(results: Mapping[str, dict]) -> str:
    """Aligned plain-text summary of sentence metrics, one row per method."""
    header = ("method", "precision", "recall", "f1")
    rows = [
        (
            method,
            f"{res['mean_precision']:.4f}",
            f"{res['mean_recall']:.4f}",
            f"{res['mean_f1']:.4f}",
        )
        for method, res in results.items()
    ]
    widths = [max(len(header[i]), *(len(row[i]) for row in rows)) if rows else len(header[i])
              for i in range(4)]
    lines = [
        "  ".join(h.ljust(widths[i]) for i, h in enumerate(header)).rstrip(),
        "  ".join("-" * widths[i] for i in range(4)),
    ]
    for row in rows:
        lines.append("  ".join(row[i].ljust(widths[i]) for i in range(4)).rstrip())
    return "\n".join(lines)
