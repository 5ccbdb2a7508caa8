"""Writers for the DACF feature format and newline label files.

DACF (little-endian): magic ``DACF``, u32 version = 1, u64 n_samples,
u64 dim, then n_samples * dim IEEE-754 float32 values row-major.
"""

from __future__ import annotations

import struct

import numpy as np

_HEADER = struct.Struct("<4sIQQ")


def write_features(matrix: np.ndarray, path) -> None:
    m = np.ascontiguousarray(matrix, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise ValueError(f"expected a non-empty 2-D matrix, got shape {m.shape}")
    stored = m.astype("<f4")
    if not np.all(np.isfinite(stored)):
        raise ValueError("matrix has non-finite entries")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(b"DACF", 1, m.shape[0], m.shape[1]))
        fh.write(stored.tobytes())


def write_labels(labels: list[str], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for label in labels:
            fh.write(f"{label}\n")
