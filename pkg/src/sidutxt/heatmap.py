"""Per-token relevance container shared by every explanation method."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np


@dataclass(frozen=True)
class ExplanationHeatmap:
    """Normalized per-token relevance scores plus prediction metadata.

    ``scores`` aligns 1:1 with ``tokens``; padding positions are never
    included.  Unsigned methods produce scores in [0, 1].  Signed methods
    set ``signed`` and produce scores in [-1, 1] whose sign marks whether a
    token pushed toward or away from the predicted class.  ``config``
    records every hyperparameter the method used.
    """

    method: str
    tokens: tuple[str, ...]
    scores: np.ndarray
    predicted_class: int
    class_probs: np.ndarray
    config: Mapping[str, Any] = field(default_factory=dict)
    signed: bool = False

    def __post_init__(self) -> None:
        scores = np.asarray(self.scores, dtype=np.float64)
        if scores.ndim != 1:
            raise ValueError(f"scores must be a 1-d vector, got shape {scores.shape}")
        if scores.shape[0] != len(self.tokens):
            raise ValueError(
                f"{scores.shape[0]} scores do not align with {len(self.tokens)} tokens"
            )
        probs = np.asarray(self.class_probs, dtype=np.float64)
        if probs.shape != (2,):
            raise ValueError(f"expected 2 class probabilities, got shape {probs.shape}")
        scores.setflags(write=False)
        probs.setflags(write=False)
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "class_probs", probs)
        object.__setattr__(self, "config", dict(self.config))

    @property
    def all_zero(self) -> bool:
        """True when no token received any relevance at all."""
        return bool(np.all(self.scores == 0.0))

    def magnitudes(self) -> np.ndarray:
        """Absolute scores; identical to ``scores`` for unsigned methods."""
        return np.abs(self.scores)

    def to_json_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "method": self.method,
            "predicted_class": self.predicted_class,
            "class_probs": [float(p) for p in self.class_probs],
            "tokens": list(self.tokens),
            "scores": [float(s) for s in self.scores],
            "config": dict(self.config),
        }
        if self.signed:
            out["signed"] = True
        if self.all_zero:
            out["all_zero"] = True
        return out

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_json_dict(), indent=indent)
