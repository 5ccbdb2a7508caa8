"""Corpus parsing, feature extraction, and corpus statistics.

Input corpora are UTF-8 TSV files with exactly two fields per line:
``text<TAB>label``.  Output follows the DACF + label-file layout that the
clustering package consumes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dacf import write_features, write_labels
from .encoders import get_encoder, tokenize


class CorpusError(Exception):
    """Malformed or empty corpus input."""


def read_corpus(path) -> list[tuple[str, str]]:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    if text == "":
        raise CorpusError(f"{path}: corpus is empty")
    rows = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        parts = line.split("\t")
        if len(parts) != 2:
            raise CorpusError(
                f"{path}:{lineno}: expected exactly one tab (text<TAB>label), got {len(parts) - 1}"
            )
        text_field, label = parts
        if text_field.strip() == "":
            raise CorpusError(f"{path}:{lineno}: empty text field")
        if label.strip() == "":
            raise CorpusError(f"{path}:{lineno}: empty label field")
        rows.append((text_field, label))
    return rows


def extract(
    corpus_path,
    model_name: str,
    out_prefix,
    batch_size: int = 32,
    max_len: int = 64,
    dump_tokens=None,
) -> tuple[str, str]:
    """Write ``{out_prefix}.dacf`` and ``{out_prefix}.labels`` for a corpus.

    One feature row per corpus row, in corpus order: the mean over the
    classification token and every real token vector of the last layer.
    ``dump_tokens`` (debug) additionally writes the per-row token
    matrices to an ``.npz`` archive for pooling verification.
    """
    rows = read_corpus(corpus_path)
    encoder = get_encoder(model_name, max_len=max_len)
    if batch_size < 1:
        raise ValueError("batch_size must be at least 1")

    pooled = []
    dumps = {}
    for lo in range(0, len(rows), batch_size):
        batch = rows[lo : lo + batch_size]
        matrices = encoder.encode_batch([text for text, _ in batch])
        for offset, mat in enumerate(matrices):
            pooled.append(mat.mean(axis=0))
            if dump_tokens is not None:
                dumps[f"row_{lo + offset:05d}"] = mat

    features = np.stack(pooled)
    feature_path = f"{out_prefix}.dacf"
    label_path = f"{out_prefix}.labels"
    write_features(features, feature_path)
    write_labels([label for _, label in rows], label_path)
    if dump_tokens is not None:
        np.savez(dump_tokens, **dumps)
    return feature_path, label_path


@dataclass(frozen=True)
class CorpusStats:
    n_classes: int
    n_rows: int
    vocabulary: int
    max_tokens: int
    mean_tokens: float

    def __str__(self):
        return (
            f"classes {self.n_classes}, rows {self.n_rows}, "
            f"vocabulary {self.vocabulary}, "
            f"length max/mean {self.max_tokens} / {self.mean_tokens:.2f}"
        )


def corpus_stats(corpus_path) -> CorpusStats:
    rows = read_corpus(corpus_path)
    vocab = set()
    lengths = []
    labels = set()
    for text, label in rows:
        tokens = tokenize(text)
        vocab.update(tokens)
        lengths.append(len(tokens))
        labels.add(label)
    return CorpusStats(
        n_classes=len(labels),
        n_rows=len(rows),
        vocabulary=len(vocab),
        max_tokens=max(lengths),
        mean_tokens=float(np.mean(lengths)),
    )
