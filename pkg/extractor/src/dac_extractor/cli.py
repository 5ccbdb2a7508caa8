"""Command-line front end: `dac-extract extract` and `dac-extract stats`."""

from __future__ import annotations

import argparse
import sys

from .encoders import EncoderLoadError
from .extract import CorpusError, corpus_stats, extract


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="dac-extract",
        description="export mean-pooled sentence embeddings as DACF feature files",
    )
    sub = parser.add_subparsers(required=True)

    p = sub.add_parser("extract", help="embed a text<TAB>label corpus")
    p.add_argument("corpus", help="UTF-8 TSV corpus file")
    p.add_argument("--model", default="hash:32",
                   help="encoder: hash:<dim> (offline) or a pretrained model name")
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--max-len", type=int, default=64)
    p.add_argument("--out", required=True, help="output prefix (.dacf/.labels appended)")
    p.add_argument("--dump-tokens", default=None,
                   help="debug: also write per-row token matrices to this .npz")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("stats", help="print corpus statistics")
    p.add_argument("corpus")
    p.set_defaults(func=cmd_stats)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CorpusError, EncoderLoadError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def cmd_extract(args) -> int:
    feature_path, label_path = extract(
        args.corpus,
        args.model,
        args.out,
        batch_size=args.batch_size,
        max_len=args.max_len,
        dump_tokens=args.dump_tokens,
    )
    print(f"wrote {feature_path} and {label_path}")
    return 0


def cmd_stats(args) -> int:
    print(corpus_stats(args.corpus))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
