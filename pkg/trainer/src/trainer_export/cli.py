"""Command line entry point: train the classifier and export a bundle."""

from __future__ import annotations

import argparse
import os
import sys

# Keep stderr usable for our own error reporting.
os.environ.setdefault("TF_CPP_MIN_LOG_LEVEL", "3")

from . import train as train_mod
from .model import DEFAULT_EPOCHS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sidutxt-train",
        description="Train the movie-review sentiment classifier and export "
                    "it as a model bundle plus a parity fixture.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    te = sub.add_parser("train-export", help="train, evaluate, export")
    te.add_argument("--data", required=True,
                    help="corpus root containing train/ and test/ splits")
    te.add_argument("--embeddings", required=True,
                    help="pre-trained word vector text file (300-d)")
    te.add_argument("--out", required=True, help="bundle output path")
    te.add_argument("--seed", type=int, default=0)
    te.add_argument("--epochs", type=int, default=DEFAULT_EPOCHS)
    te.add_argument("--vocab-size", type=int, default=20000)
    te.add_argument("--max-length", type=int, default=400)
    te.add_argument("--parity-out", default=None,
                    help="parity fixture path (default: <out>.parity.json)")
    te.add_argument("--smoke", action="store_true",
                    help="tiny balanced subsample and at most 2 epochs, "
                         "for pipeline checks")
    return parser


def cmd_train_export(args: argparse.Namespace) -> int:
    config = train_mod.TrainingConfig(
        data_dir=args.data,
        embeddings_path=args.embeddings,
        seed=args.seed,
        epochs=args.epochs,
        vocab_size=args.vocab_size,
        max_sequence_length=args.max_length,
        smoke=args.smoke,
    )
    result = train_mod.train_imdb(config)
    parity_path = train_mod.export_bundle(
        result.model,
        result.tokens,
        result.max_sequence_length,
        args.out,
        parity_texts=result.parity_texts,
        parity_path=args.parity_out,
    )
    print(f"trained on {result.num_train_docs} documents "
          f"({len(result.history['loss'])} epochs)")
    print(f"vocabulary: {len(result.tokens)} tokens, "
          f"{result.embedding_coverage} with pre-trained vectors")
    print(f"test accuracy: {result.test_accuracy:.4f} "
          f"({result.num_test_docs} documents)")
    print(f"bundle: {args.out}")
    if parity_path is not None:
        print(f"parity fixture: {parity_path}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return cmd_train_export(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
