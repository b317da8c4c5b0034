"""Shared fixtures and data builders."""
from __future__ import annotations

import json
import random

import pytest

from rtqe.util import sentence_key

# Words guaranteed absent from the stopword list, so every generated
# sentence keeps at least one token after stopword removal.
CONTENT_WORDS = (
    "river", "mountain", "engine", "garden", "window", "teacher", "bridge",
    "market", "signal", "harbor", "copper", "violin", "meadow", "lantern",
    "pepper", "stadium", "blanket", "curtain", "pencil", "hammer", "valley",
    "castle", "throat", "sister", "winter", "summer", "bottle", "camera",
    "forest", "island", "jacket", "kitten", "ladder", "mirror", "needle",
    "orange", "puzzle", "rocket", "saddle", "tunnel", "anchor", "basket",
)

FILLER_WORDS = ("the", "a", "is", "was", "of", "and", "to", "it", "that", "this")


def random_sentence(rng: random.Random, min_words: int = 1, max_words: int = 12) -> str:
    """A sentence with at least one non-stopword content token."""
    count = rng.randint(min_words, max_words)
    words = [rng.choice(CONTENT_WORDS + FILLER_WORDS) for _ in range(count - 1)]
    words.insert(rng.randint(0, len(words)), rng.choice(CONTENT_WORDS))
    return " ".join(words)


def record_line(original: str, translation: str, scores, z_scores) -> str:
    """One dataset TSV row with consistent mean fields."""
    mean = sum(scores) / len(scores)
    z_mean = sum(z_scores) / len(z_scores)
    fmt = lambda vs: "[" + ", ".join(repr(float(v)) for v in vs) + "]"
    return "\t".join(
        (original, translation, fmt(scores), repr(float(mean)),
         fmt(z_scores), repr(float(z_mean)))
    )


def write_dataset(path, rows: list[str], header: bool = True) -> None:
    lines = ["original\ttranslation\tscores\tmean\tz_scores\tz_mean"] if header else []
    lines += rows
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_store(path, sentences, dim: int = 8, model: str = "use", constant=None) -> None:
    """A JSONL embedding store covering the given sentences.

    Vectors are one-hot (exact unit norm) unless a constant vector is
    supplied; either way self-cosine through the store is exactly 1.
    """
    with open(path, "w", encoding="utf-8") as fh:
        seen = set()
        for i, text in enumerate(sentences):
            key = sentence_key(text)
            if key in seen:
                continue
            seen.add(key)
            if constant is not None:
                values = list(constant)
            else:
                values = [0.0] * dim
                values[i % dim] = 1.0
            fh.write(json.dumps(
                {"key": key, "model": model, "dim": len(values), "values": values}
            ) + "\n")


@pytest.fixture
def rng() -> random.Random:
    return random.Random(0xC0FFEE)
