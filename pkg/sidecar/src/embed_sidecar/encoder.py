"""Text encoders served by the sidecar.

Two implementations share one contract (``dim`` plus ``encode``):

* :class:`TransformerEncoder` — a pre-trained distilled BERT sentence
  encoder (mean pooling over the final layer, then L2 normalization).
  Requires model weights reachable via network or local cache.
* :class:`CharGramEncoder` — a deterministic character-trigram hashing
  encoder with no external weights, selectable by the explicit model name
  ``char-gram-test``. It exists so the server and protocol can be
  exercised in offline environments; it is never a silent fallback.
"""

from __future__ import annotations

import hashlib
from typing import Protocol, Sequence

import numpy as np


class ModelLoadError(RuntimeError):
    """The requested model could not be loaded; the server must not start."""


class Encoder(Protocol):
    dim: int

    def encode(self, texts: Sequence[str]) -> np.ndarray: ...


class CharGramEncoder:
    """Hashing bag of character trigrams and words, mean-free and L2-normed.

    Deterministic across processes and platforms: features are hashed with
    blake2b into sign/bucket pairs, accumulated in float64, normalized.
    Shares no weights with the transformer path but honors the same
    contract (constant dim, unit-norm rows, order-preserving batches).
    """

    MODEL_NAME = "char-gram-test"

    def __init__(self, dim: int = 384):
        if dim < 8:
            raise ValueError(f"dim must be >= 8, got {dim}")
        self.dim = dim

    def _features(self, text: str):
        for token in text.lower().split():
            yield "w:" + token
            padded = f"<{token}>"
            for i in range(len(padded) - 2):
                yield "g:" + padded[i : i + 3]

    def encode(self, texts: Sequence[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.dim), dtype=np.float64)
        for row, text in enumerate(texts):
            for feature in self._features(text):
                digest = hashlib.blake2b(
                    feature.encode("utf-8"), digest_size=8
                ).digest()
                idx = int.from_bytes(digest[:4], "little") % self.dim
                sign = 1.0 if digest[4] & 1 else -1.0
                out[row, idx] += sign
            norm = np.linalg.norm(out[row])
            if norm == 0.0:
                raise ValueError(f"text at index {row} produced no features")
            out[row] /= norm
        return out


class TransformerEncoder:
    """Pre-trained transformer sentence encoder (mean pooling + L2 norm)."""

    def __init__(self, model_name: str):
        try:
            import torch  # noqa: F401
            from transformers import AutoModel, AutoTokenizer
        except ImportError as exc:
            raise ModelLoadError(
                f"transformer dependencies unavailable: {exc}"
            ) from exc
        try:
            self._tokenizer = AutoTokenizer.from_pretrained(model_name)
            self._model = AutoModel.from_pretrained(model_name)
        except Exception as exc:  # transformers raises a mix of OSError/ValueError
            raise ModelLoadError(
                f"cannot load model {model_name!r}: {exc}"
            ) from exc
        self._model.eval()
        self.dim = int(self._model.config.hidden_size)

    def encode(self, texts: Sequence[str]) -> np.ndarray:
        import torch

        batch = self._tokenizer(
            list(texts), padding=True, truncation=True, return_tensors="pt"
        )
        with torch.no_grad():
            hidden = self._model(**batch).last_hidden_state
        mask = batch["attention_mask"].unsqueeze(-1).to(hidden.dtype)
        summed = (hidden * mask).sum(dim=1)
        counts = mask.sum(dim=1).clamp(min=1)
        pooled = (summed / counts).numpy().astype(np.float64)
        norms = np.linalg.norm(pooled, axis=1, keepdims=True)
        if np.any(norms == 0.0):
            raise ValueError("a text produced a zero vector")
        return pooled / norms


def load_encoder(model_name: str) -> Encoder:
    """Resolve a model name to an encoder; raises ModelLoadError on failure.

    The offline test encoder is only used when asked for by its exact
    name; any other name goes through the transformer loader.
    """
    if model_name == CharGramEncoder.MODEL_NAME:
        return CharGramEncoder()
    return TransformerEncoder(model_name)
