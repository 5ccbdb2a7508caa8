"""Sentence-encoder backends.

Every backend returns, per input text, the matrix of last-layer token
vectors with a leading classification-token vector; pooling happens in
the caller.  ``hash:<dim>`` gives a deterministic offline encoder whose
token vectors are seeded from a stable digest of the token string, for
tests and air-gapped environments.  Any other model name is loaded with
the transformers library.
"""

from __future__ import annotations

import hashlib

import numpy as np

CLS_TOKEN = "[CLS]"


class EncoderLoadError(RuntimeError):
    """The requested pretrained encoder could not be loaded."""


def get_encoder(model_name: str, max_len: int = 64):
    if model_name.startswith("hash:"):
        try:
            dim = int(model_name.split(":", 1)[1])
        except ValueError:
            raise EncoderLoadError(f"bad hash encoder spec {model_name!r}, want hash:<dim>")
        return HashEncoder(dim=dim, max_len=max_len)
    return TransformersEncoder(model_name, max_len=max_len)


class HashEncoder:
    """Deterministic token embeddings from a stable hash of the token."""

    def __init__(self, dim: int = 32, max_len: int = 64):
        if dim < 1:
            raise EncoderLoadError("hash encoder dim must be positive")
        self.dim = dim
        self.max_len = max_len
        self._cache: dict[str, np.ndarray] = {}

    def _vector(self, token: str) -> np.ndarray:
        vec = self._cache.get(token)
        if vec is None:
            digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
            seed = int.from_bytes(digest, "little")
            vec = np.random.default_rng(seed).standard_normal(self.dim)
            self._cache[token] = vec
        return vec

    def token_matrix(self, text: str) -> np.ndarray:
        tokens = tokenize(text)[: self.max_len]
        return np.stack([self._vector(t) for t in [CLS_TOKEN, *tokens]])

    def encode_batch(self, texts: list[str]) -> list[np.ndarray]:
        return [self.token_matrix(t) for t in texts]


class TransformersEncoder:
    """Frozen pretrained transformer; last hidden layer, eval mode."""

    def __init__(self, model_name: str, max_len: int = 64):
        try:
            import torch
            from transformers import AutoModel, AutoTokenizer
        except ImportError as exc:
            raise EncoderLoadError(
                "the transformers backend needs the optional [transformers] extra"
            ) from exc
        try:
            self.tokenizer = AutoTokenizer.from_pretrained(model_name)
            self.model = AutoModel.from_pretrained(model_name)
        except Exception as exc:
            raise EncoderLoadError(f"failed to load pretrained encoder {model_name!r}: {exc}") from exc
        self.model.eval()
        self.max_len = max_len
        self._torch = torch

    def encode_batch(self, texts: list[str]) -> list[np.ndarray]:
        torch = self._torch
        enc = self.tokenizer(
            texts,
            padding=True,
            truncation=True,
            max_length=self.max_len,
            return_tensors="pt",
        )
        with torch.no_grad():
            hidden = self.model(**enc).last_hidden_state
        out = []
        mask = enc["attention_mask"].bool()
        for i in range(hidden.shape[0]):
            out.append(hidden[i][mask[i]].double().numpy())  # padding excluded
        return out


def tokenize(text: str) -> list[str]:
    return text.lower().split()
