"""Straight-line reference implementation of the mask explainer.

Everything here is plain Python loops and scalar math so the production
code's vectorized path has something independent to agree with.  Only the
model forward pass is shared, and the oracle always calls it one sequence
at a time.
"""

from __future__ import annotations

import math

import numpy as np

from sidutxt import ModelBundle, TokenSequence
from sidutxt.runtime import forward


def _interp(row: list[float], length: int) -> list[float]:
    n = len(row)
    if length == n:
        return list(row)
    if n == 1:
        return [row[0]] * length
    if length == 1:
        return [row[0]]
    out = []
    for t in range(length):
        x = t * (n - 1) / (length - 1)
        lo = math.floor(x)
        hi = min(lo + 1, n - 1)
        frac = x - lo
        out.append(row[lo] * (1.0 - frac) + row[hi] * frac)
    return out


def _dist(a: list[float], b: list[float]) -> float:
    return math.sqrt(sum((x - y) ** 2 for x, y in zip(a, b)))


def oracle_heatmap(
    model: ModelBundle,
    seq: TokenSequence,
    tau: float,
    sigma: float,
    top_k: int,
    normalize: bool,
) -> list[float]:
    """Reference scores for the document's words (padding dropped)."""
    p_org, fm = forward(model, seq)
    n, num_filters = fm.shape
    length = seq.length

    coarse = []
    for i in range(num_filters):
        profile = [float(fm[j, i]) for j in range(n)]
        threshold = tau * max(profile) if normalize else tau
        coarse.append([1.0 if v > threshold else 0.0 for v in profile])

    binary = [
        [1.0 if v > tau else 0.0 for v in _interp(row, length)]
        for row in coarse
    ]

    org = [float(p_org.probs[0]), float(p_org.probs[1])]
    masked = []
    for i in range(num_filters):
        ids = [int(seq.ids[t]) if binary[i][t] else 0 for t in range(length)]
        pred, _ = forward(model, TokenSequence(ids=np.array(ids), words=seq.words))
        masked.append([float(pred.probs[0]), float(pred.probs[1])])

    sid = [math.exp(-_dist(org, masked[i]) / (2.0 * sigma * sigma)) for i in range(num_filters)]
    uniq = [sum(_dist(masked[i], masked[j]) for j in range(num_filters))
            for i in range(num_filters)]
    weights = [sid[i] * uniq[i] for i in range(num_filters)]

    chosen = sorted(range(num_filters), key=lambda i: (-weights[i], i))[:top_k]
    fused = [
        sum(weights[i] * binary[i][t] for i in chosen) / top_k
        for t in range(length)
    ]
    peak = max(fused)
    scores = [v / peak for v in fused] if peak > 0 else [0.0] * length
    return scores[: seq.num_words]
