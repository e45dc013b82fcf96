"""HTML and terminal rendering of per-token heatmaps.

Scores are bucketed into ten fixed deciles: a positive score s falls in
bucket d exactly when d/10 < s <= (d+1)/10, scores above 1 clamp into the
deepest bucket, and scores at or below 0 stay unshaded.  Supporting
scores use the orange ramp; opposing scores of signed heatmaps use the
blue ramp at the magnitude's decile.  Rendering never alters the text:
stripping markup from either output leaves the document's words joined by
single spaces.
"""

from __future__ import annotations

import html

from .heatmap import ExplanationHeatmap

# Decile fill colors, bucket 0 (faintest) to bucket 9 (deepest).
ORANGE_HEX = (
    "#fff3e6", "#ffe7cc", "#ffd9ad", "#fec98a", "#fdb566",
    "#fb9d43", "#f28225", "#e16610", "#c84f06", "#a63e03",
)
BLUE_HEX = (
    "#eaf3fb", "#d4e7f7", "#bcd9f1", "#a0c8ea", "#81b4e0",
    "#609dd3", "#4184c2", "#2a6aae", "#175295", "#0a3d78",
)

# Matching xterm-256 background codes, same ordering.
ORANGE_256 = (230, 223, 222, 216, 215, 214, 208, 202, 166, 130)
BLUE_256 = (195, 153, 117, 111, 75, 69, 33, 27, 20, 18)

_ANSI_RESET = "\x1b[0m"
_ANSI_FG_BLACK = "\x1b[30m"
_ANSI_FG_WHITE = "\x1b[97m"

# Deep backgrounds need a light foreground to stay readable.
_DARK_BUCKETS = range(6, 10)


def shade_bucket(score: float) -> int | None:
    """Decile bucket of a positive score, None when nothing should be shaded.

    The boundaries are compared directly instead of scaling by 10 so a
    score sitting exactly on d/10 never drifts across buckets through
    float multiplication.
    """
    if score <= 0.0:
        return None
    for bucket in range(10):
        if score <= (bucket + 1) / 10:
            return bucket
    return 9


def _shaded_positions(heatmap: ExplanationHeatmap, top_n: int | None) -> set[int]:
    mags = heatmap.magnitudes()
    positions = [pos for pos in range(mags.shape[0]) if mags[pos] > 0.0]
    if top_n is not None:
        if top_n < 1:
            raise ValueError(f"top_n must be at least 1, got {top_n}")
        positions.sort(key=lambda pos: (-mags[pos], pos))
        positions = positions[:top_n]
    return set(positions)


def _token_shades(
    heatmap: ExplanationHeatmap, top_n: int | None
) -> list[tuple[str, int | None, bool]]:
    """Per token: (word, bucket or None, opposes_predicted_class)."""
    shaded = _shaded_positions(heatmap, top_n)
    out = []
    for pos, (token, score) in enumerate(zip(heatmap.tokens, heatmap.scores)):
        bucket = shade_bucket(abs(float(score))) if pos in shaded else None
        out.append((token, bucket, heatmap.signed and score < 0))
    return out


def render_html(heatmap: ExplanationHeatmap, *, top_n: int | None = None) -> str:
    """Standalone HTML page: legend, prediction header and the shaded text."""
    css_rules = ["body { font-family: sans-serif; margin: 2em; color: #1a1a1a; }"]
    for bucket, color in enumerate(ORANGE_HEX):
        fg = "#ffffff" if bucket in _DARK_BUCKETS else "#1a1a1a"
        css_rules.append(f".p{bucket} {{ background-color: {color}; color: {fg}; }}")
    for bucket, color in enumerate(BLUE_HEX):
        fg = "#ffffff" if bucket in _DARK_BUCKETS else "#1a1a1a"
        css_rules.append(f".n{bucket} {{ background-color: {color}; color: {fg}; }}")
    css_rules.append(".tok { padding: 0 2px; border-radius: 2px; }")
    css_rules.append(".legend span { display: inline-block; width: 3.2em; "
                     "text-align: center; padding: 2px 0; }")
    css_rules.append(".text { line-height: 1.8; max-width: 60em; }")

    def legend_row(prefix: str, title: str) -> str:
        cells = "".join(
            f'<span class="{prefix}{bucket}">{bucket / 10:.1f}+</span>'
            for bucket in range(10)
        )
        return f"<div class=\"legend\"><strong>{title}</strong> {cells}</div>"

    legends = [legend_row("p", "supports")]
    if heatmap.signed:
        legends.append(legend_row("n", "opposes"))

    spans = []
    for token, bucket, opposes in _token_shades(heatmap, top_n):
        word = html.escape(token)
        if bucket is None:
            spans.append(f'<span class="tok">{word}</span>')
        else:
            cls = f"n{bucket}" if opposes else f"p{bucket}"
            spans.append(f'<span class="tok {cls}">{word}</span>')
    probs = ", ".join(f"{p:.4f}" for p in heatmap.class_probs)
    header = (
        f"<p>method: {html.escape(heatmap.method)} | predicted class: "
        f"{heatmap.predicted_class} | class probabilities: [{probs}]</p>"
    )
    return (
        "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n"
        f"<title>heatmap: {html.escape(heatmap.method)}</title>\n"
        "<style>\n" + "\n".join(css_rules) + "\n</style>\n</head>\n<body>\n"
        + header + "\n" + "\n".join(legends) + "\n"
        + '<p class="text">' + " ".join(spans) + "</p>\n</body>\n</html>\n"
    )


def render_ansi(heatmap: ExplanationHeatmap, *, top_n: int | None = None) -> str:
    """One-line 256-color terminal rendering of the shaded text."""
    pieces = []
    for token, bucket, opposes in _token_shades(heatmap, top_n):
        if bucket is None:
            pieces.append(token)
            continue
        code = (BLUE_256 if opposes else ORANGE_256)[bucket]
        fg = _ANSI_FG_WHITE if bucket in _DARK_BUCKETS else _ANSI_FG_BLACK
        pieces.append(f"\x1b[48;5;{code}m{fg}{token}{_ANSI_RESET}")
    return " ".join(pieces)
