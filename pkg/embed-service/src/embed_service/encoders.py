"""Deterministic sentence encoders behind the embed endpoint.

Each encoder maps a sentence to a fixed-dimension unit vector with the
hashing trick: word tokens and character trigrams are hashed into signed
buckets keyed by the checkpoint identifier, accumulated, and
L2-normalized. Texts sharing many substrings land in many common
buckets, so lexical overlap surfaces as cosine similarity, which is
enough structure to exercise every consumer contract. The serving
behavior (registered dimension, per-process determinism, order
preservation) is exactly what a real checkpoint-backed encoder must
provide; swapping one in means replacing this class only.
"""
from __future__ import annotations

import hashlib
import math
import unicodedata

#: Hash width per feature: 4 bucket bytes plus 1 sign byte.
_DIGEST_SIZE = 5


def text_features(text: str) -> dict[str, float]:
    """Word tokens plus padded character trigrams, with occurrence counts.

    Case and Unicode composition are folded first so visually identical
    inputs share features. Whitespace-only text has no features.
    """
    normalized = unicodedata.normalize("NFC", text).casefold()
    words = normalized.split()
    counts: dict[str, float] = {}
    for word in words:
        key = "w:" + word
        counts[key] = counts.get(key, 0.0) + 1.0
    padded = " " + " ".join(words) + " "
    for i in range(len(padded) - 2):
        key = "c:" + padded[i : i + 3]
        counts[key] = counts.get(key, 0.0) + 1.0
    return counts


class HashedNgramEncoder:
    """Feature-hashing encoder for one model id at one checkpoint."""

    def __init__(self, model_id: str, dim: int, checkpoint: str):
        if dim <= 0:
            raise ValueError(f"dim must be positive, got {dim}")
        self.model_id = model_id
        self.dim = dim
        self.checkpoint = checkpoint
        # The key makes bucket assignment a function of the checkpoint,
        # so distinct checkpoints produce unrelated embedding spaces.
        self._key = hashlib.sha256(
            f"{model_id}:{checkpoint}".encode("utf-8")
        ).digest()[:32]

    def encode(self, text: str) -> list[float]:
        """Embed one sentence; all-zero output only for featureless text."""
        vec = [0.0] * self.dim
        for feature, weight in text_features(text).items():
            h = hashlib.blake2b(
                feature.encode("utf-8"), digest_size=_DIGEST_SIZE, key=self._key
            ).digest()
            bucket = int.from_bytes(h[:4], "big") % self.dim
            sign = 1.0 if h[4] & 1 else -1.0
            vec[bucket] += sign * weight
        norm = math.sqrt(sum(v * v for v in vec))
        if norm > 0.0:
            vec = [v / norm for v in vec]
        return vec

    def encode_batch(self, sentences) -> list[list[float]]:
        """Embed sentences in order; output index i belongs to input i."""
        return [self.encode(s) for s in sentences]
