"""Command line interface.

Subcommands: ``explain`` one text, ``eval-faithfulness`` over a corpus
directory, ``eval-human`` against an annotation file, and ``model-info``.
Hyperparameters may come from a ``key = value`` config file; explicit
flags always win over the file, the file wins over built-in defaults.
Output is a pure function of the inputs: no timestamps, no environment
lookups, stable key order everywhere.  Diagnostics go to stderr with a
nonzero exit; data goes to stdout or to the requested output files.
"""

from __future__ import annotations

import argparse
import io
import csv
import json
import sys
from pathlib import Path
from typing import Any, Callable

from .baselines import LimeConfig
from .faithfulness import (
    METHOD_NAMES,
    evaluate_corpus,
    explain_document,
    faithfulness_table,
)
from .human_eval import (
    load_annotations,
    sentence_eval,
    sentence_table,
    token_sweep,
    union_annotations,
)
from .render import render_ansi, render_html
from .runtime import load_bundle, read_metadata, tokenize
from .sidu import SiduConfig

FORMATS = ("json", "html", "ansi")

# Options a config file may supply, with their converters and defaults.
# Flags (store_true options) are command line only.
_CONFIG_OPTIONS: dict[str, tuple[Callable[[str], Any], Any]] = {
    "model": (str, None),
    "method": (str, None),
    "methods": (str, ",".join(METHOD_NAMES)),
    "format": (str, "json"),
    "tau": (float, 0.5),
    "sigma": (float, 0.25),
    "top_k": (int, 10),
    "seed": (int, 0),
    "num_samples": (int, 1000),
    "kernel_width": (float, None),
    "ridge_lambda": (float, 1e-3),
    "sample": (int, None),
    "thresholds": (str, None),
    "top_sentences": (int, 5),
    "sentence_agg": (str, "mean"),
    "top_n": (int, None),
}


def _read_config_file(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config file {path}, line {lineno}: expected key = value")
        key, _, value = line.partition("=")
        key = key.strip().replace("-", "_")
        if key not in _CONFIG_OPTIONS:
            raise ValueError(f"config file {path}, line {lineno}: unknown key {key!r}")
        values[key] = value.strip()
    return values


def _resolve_options(args: argparse.Namespace) -> None:
    """Fill unset options from the config file, then from defaults."""
    file_values: dict[str, str] = {}
    if getattr(args, "config", None):
        file_values = _read_config_file(args.config)
    for key, (convert, default) in _CONFIG_OPTIONS.items():
        if not hasattr(args, key):
            continue
        if getattr(args, key) is not None:
            continue
        if key in file_values:
            try:
                setattr(args, key, convert(file_values[key]))
            except ValueError:
                raise ValueError(
                    f"config file value for {key!r} is not a valid "
                    f"{convert.__name__}: {file_values[key]!r}"
                ) from None
        else:
            setattr(args, key, default)


def _require(args: argparse.Namespace, key: str, flag: str) -> Any:
    value = getattr(args, key, None)
    if value is None:
        raise ValueError(f"{flag} is required (flag or config file)")
    return value


def _parse_methods(raw: str) -> list[str]:
    methods = []
    for piece in raw.split(","):
        name = piece.strip()
        if not name:
            continue
        if name not in METHOD_NAMES:
            raise ValueError(
                f"unknown method {name!r}, expected one of {', '.join(METHOD_NAMES)}"
            )
        if name not in methods:
            methods.append(name)
    if not methods:
        raise ValueError("no methods selected")
    return methods


def _parse_thresholds(raw: str | None) -> list[float]:
    if raw is None:
        return [bucket / 10 for bucket in range(10)]
    try:
        values = [float(piece) for piece in raw.split(",") if piece.strip()]
    except ValueError:
        raise ValueError(f"invalid threshold list {raw!r}") from None
    if not values:
        raise ValueError("threshold list is empty")
    return values


def _method_configs(args: argparse.Namespace) -> tuple[SiduConfig, LimeConfig]:
    sidu_config = SiduConfig(
        tau=args.tau,
        sigma=args.sigma,
        top_k=args.top_k,
        normalize_activations=not args.raw_threshold,
    )
    lime_config = LimeConfig(
        num_samples=args.num_samples,
        kernel_width=args.kernel_width,
        ridge_lambda=args.ridge_lambda,
        rng_seed=args.seed,
    )
    return sidu_config, lime_config


def _emit(text: str, out_path: str | None) -> None:
    if out_path:
        Path(out_path).write_text(text)
    else:
        sys.stdout.write(text)


def _add_method_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--tau", type=float, help="mask binarization threshold (default 0.5)")
    parser.add_argument("--sigma", type=float, help="similarity kernel bandwidth (default 0.25)")
    parser.add_argument("--top-k", type=int, dest="top_k",
                        help="masks fused into the heatmap (default 10)")
    parser.add_argument("--raw-threshold", action="store_true", dest="raw_threshold",
                        help="threshold raw activations instead of per-filter peaks")
    parser.add_argument("--num-samples", type=int, dest="num_samples",
                        help="surrogate-regression sample count (default 1000)")
    parser.add_argument("--kernel-width", type=float, dest="kernel_width",
                        help="surrogate proximity kernel width "
                             "(default 0.75 * sqrt(sequence length))")
    parser.add_argument("--ridge-lambda", type=float, dest="ridge_lambda",
                        help="surrogate ridge penalty (default 1e-3)")
    parser.add_argument("--seed", type=int, help="seed for all sampling (default 0)")
    parser.add_argument("--config", help="key = value file with defaults for these options")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sidutxt",
        description="Explain 1-D convolutional text classifiers and evaluate the explanations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_explain = sub.add_parser("explain", help="produce a heatmap for one text")
    p_explain.add_argument("--model", help="path to a model bundle")
    p_explain.add_argument("--method", help=f"one of: {', '.join(METHOD_NAMES)}")
    p_explain.add_argument("--text", help="document text on the command line")
    p_explain.add_argument("--text-file", dest="text_file", help="read the document from a file")
    p_explain.add_argument("--format", help="json, html or ansi (default json)")
    p_explain.add_argument("--out", help="write output here instead of stdout")
    p_explain.add_argument("--top-n", type=int, dest="top_n",
                           help="shade only the n best-scoring tokens in html/ansi output")
    _add_method_options(p_explain)
    p_explain.set_defaults(func=cmd_explain)

    p_faith = sub.add_parser("eval-faithfulness",
                             help="insertion/deletion AUCs over a corpus directory")
    p_faith.add_argument("--model", help="path to a model bundle")
    p_faith.add_argument("--corpus", required=True,
                         help="directory of .txt documents, one document per file")
    p_faith.add_argument("--methods", help="comma-separated method list (default all)")
    p_faith.add_argument("--sample", type=int, help="documents to sample (required)")
    p_faith.add_argument("--out-json", dest="out_json", help="write the full report here")
    _add_method_options(p_faith)
    p_faith.set_defaults(func=cmd_eval_faithfulness)

    p_human = sub.add_parser("eval-human",
                             help="agreement with human annotations")
    p_human.add_argument("--model", help="path to a model bundle")
    p_human.add_argument("--annotations", required=True,
                         help="JSON file with a list of annotation records")
    p_human.add_argument("--methods", help="comma-separated method list (default all)")
    p_human.add_argument("--thresholds",
                         help="comma-separated word-score thresholds (default 0.0..0.9)")
    p_human.add_argument("--top-sentences", type=int, dest="top_sentences",
                         help="sentences predicted per review (default 5)")
    p_human.add_argument("--sentence-agg", dest="sentence_agg",
                         help="sentence score aggregation: mean or max (default mean)")
    p_human.add_argument("--restrict-to-human", action="store_true", dest="restrict_to_human",
                         help="intersect method word sets with the human set before scoring")
    p_human.add_argument("--out-csv", dest="out_csv", help="write the threshold sweep here")
    p_human.add_argument("--out-json", dest="out_json", help="write the full report here")
    _add_method_options(p_human)
    p_human.set_defaults(func=cmd_eval_human)

    p_info = sub.add_parser("model-info", help="print bundle metadata")
    p_info.add_argument("--model", help="path to a model bundle")
    p_info.add_argument("--config", help="key = value file with defaults")
    p_info.set_defaults(func=cmd_model_info)

    return parser


def cmd_explain(args: argparse.Namespace) -> None:
    model = load_bundle(_require(args, "model", "--model"))
    method = _require(args, "method", "--method")
    if method not in METHOD_NAMES:
        raise ValueError(
            f"unknown method {method!r}, expected one of {', '.join(METHOD_NAMES)}"
        )
    if (args.text is None) == (args.text_file is None):
        raise ValueError("provide exactly one of --text or --text-file")
    if args.format not in FORMATS:
        raise ValueError(f"unknown format {args.format!r}, expected one of {', '.join(FORMATS)}")
    text = args.text if args.text is not None else Path(args.text_file).read_text()
    sidu_config, lime_config = _method_configs(args)
    seq = tokenize(text, model.vocabulary)
    heatmap = explain_document(
        model, seq, method, sidu_config=sidu_config, lime_config=lime_config
    )
    if args.format == "json":
        _emit(heatmap.to_json(indent=2) + "\n", args.out)
    elif args.format == "html":
        _emit(render_html(heatmap, top_n=args.top_n), args.out)
    else:
        _emit(render_ansi(heatmap, top_n=args.top_n) + "\n", args.out)


def _load_corpus(corpus_dir: str) -> list[tuple[str, str]]:
    root = Path(corpus_dir)
    if not root.is_dir():
        raise ValueError(f"corpus directory not found: {corpus_dir}")
    files = sorted(root.glob("*.txt"))
    if not files:
        raise ValueError(f"corpus directory {corpus_dir} contains no .txt documents")
    return [(path.stem, path.read_text()) for path in files]


def cmd_eval_faithfulness(args: argparse.Namespace) -> None:
    model = load_bundle(_require(args, "model", "--model"))
    sample = _require(args, "sample", "--sample")
    if sample < 1:
        raise ValueError(f"--sample must be a positive integer, got {sample}")
    methods = _parse_methods(args.methods)
    documents = _load_corpus(args.corpus)
    sidu_config, lime_config = _method_configs(args)
    reports = [
        evaluate_corpus(
            model, documents, method, sample, args.seed,
            sidu_config=sidu_config, lime_config=lime_config,
        )
        for method in methods
    ]
    sys.stdout.write(faithfulness_table(reports) + "\n")
    if args.out_json:
        payload = {
            "corpus_size": len(documents),
            "sample_size": sample,
            "rng_seed": args.seed,
            "reports": reports,
        }
        Path(args.out_json).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _sweep_table(thresholds: list[float], sweeps: dict[str, list[float]]) -> str:
    header = ["threshold"] + list(sweeps)
    rows = []
    for i, threshold in enumerate(thresholds):
        rows.append([f"{threshold:g}"] + [f"{sweeps[m][i]:.4f}" for m in sweeps])
    widths = [max(len(header[c]), *(len(r[c]) for r in rows)) for c in range(len(header))]
    lines = [
        "  ".join(header[c].ljust(widths[c]) for c in range(len(header))).rstrip(),
        "  ".join("-" * widths[c] for c in range(len(header))),
    ]
    for row in rows:
        lines.append("  ".join(row[c].ljust(widths[c]) for c in range(len(header))).rstrip())
    return "\n".join(lines)


def cmd_eval_human(args: argparse.Namespace) -> None:
    model = load_bundle(_require(args, "model", "--model"))
    methods = _parse_methods(args.methods)
    thresholds = _parse_thresholds(args.thresholds)
    if args.sentence_agg not in ("mean", "max"):
        raise ValueError(f"--sentence-agg must be mean or max, got {args.sentence_agg!r}")
    raw = json.loads(Path(args.annotations).read_text())
    if not isinstance(raw, list):
        raise ValueError("annotation file must contain a JSON list of records")
    grouped = load_annotations(raw)
    unions = {rid: union_annotations(records) for rid, records in grouped.items()}

    sidu_config, lime_config = _method_configs(args)
    sweeps: dict[str, list[float]] = {}
    sentences: dict[str, dict] = {}
    for method in methods:
        heatmaps = {}
        for rid in sorted(unions):
            seq = tokenize(unions[rid].text, model.vocabulary)
            heatmaps[rid] = explain_document(
                model, seq, method, sidu_config=sidu_config, lime_config=lime_config
            )
        sweeps[method] = token_sweep(
            heatmaps, unions, thresholds, restrict_to_human=args.restrict_to_human
        )
        sentences[method] = sentence_eval(
            heatmaps, unions,
            top_sentences=args.top_sentences, aggregate=args.sentence_agg,
        )

    sys.stdout.write("word-level jaccard by threshold\n")
    sys.stdout.write(_sweep_table(thresholds, sweeps) + "\n\n")
    sys.stdout.write("sentence-level agreement\n")
    sys.stdout.write(sentence_table(sentences) + "\n")

    if args.out_csv:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["threshold", "method", "mean_jaccard"])
        for method in methods:
            for threshold, value in zip(thresholds, sweeps[method]):
                writer.writerow([f"{threshold:g}", method, f"{value:.6f}"])
        Path(args.out_csv).write_text(buffer.getvalue())
    if args.out_json:
        payload = {
            "thresholds": thresholds,
            "restrict_to_human": args.restrict_to_human,
            "word_jaccard": sweeps,
            "sentence": sentences,
        }
        Path(args.out_json).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def cmd_model_info(args: argparse.Namespace) -> None:
    path = _require(args, "model", "--model")
    meta = read_metadata(path)
    load_bundle(path)  # full validation; errors propagate with field names
    info = {
        "architecture": meta.get("architecture", {}),
        "tokenizer": meta.get("tokenizer", {}),
        "vocabulary_size": len(meta.get("vocabulary", [])),
        "tensors": meta.get("tensors", []),
    }
    sys.stdout.write(json.dumps(info, indent=2, sort_keys=True) + "\n")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _resolve_options(args)
        args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
