"""Turn a labeled text corpus into DACF feature + label files.

Sentence vectors are the mean over all last-layer token vectors
(classification token included, padding excluded).  The encoder backend
is chosen by model name: ``hash:<dim>`` is a deterministic offline
stand-in; any other name loads a pretrained transformer.
"""

from .encoders import EncoderLoadError, HashEncoder, get_encoder
from .extract import CorpusError, CorpusStats, corpus_stats, extract, read_corpus

__version__ = "0.1.0"

__all__ = [
    "CorpusError",
    "CorpusStats",
    "EncoderLoadError",
    "HashEncoder",
    "corpus_stats",
    "extract",
    "get_encoder",
    "read_corpus",
]
