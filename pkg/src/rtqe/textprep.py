"""Deterministic text normalization primitives shared by all similarity metrics.

Everything here is a pure function: tokenization, stopword filtering,
character n-grams, joint term-frequency vectors, and Unicode script
detection. All operations apply NFC normalization first so results are
stable across input sources.
"""
from __future__ import annotations

import unicodedata
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

SCHEMES = ("simple", "char")


@dataclass(frozen=True)
class TokenSequence:
    """An ordered token list plus the name of the scheme that produced it."""

    tokens: tuple[str, ...]
    scheme: str

    def __post_init__(self):
        for tok in self.tokens:
            if not tok:
                raise ValueError("empty token")
            if any(ch.isspace() for ch in tok):
                raise ValueError(f"token contains whitespace: {tok!r}")

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)


@dataclass(frozen=True)
class TermVector:
    """Joint-vocabulary raw term counts for a sentence pair.

    The vocabulary is ordered by first appearance in sentence a, then in
    sentence b, and both count vectors are indexed against it.
    """

    vocabulary: tuple[str, ...]
    counts_a: tuple[int, ...]
    counts_b: tuple[int, ...]

    def __post_init__(self):
        if not (len(self.vocabulary) == len(self.counts_a) == len(self.counts_b)):
            raise ValueError("vocabulary and count vectors must have equal length")


@dataclass(frozen=True)
class ScriptProfile:
    """Unicode scripts present in a text, ignoring Common/Inherited characters."""

    scripts: frozenset[str]
    dominant: str | None
    mixed: bool


def tokenize(text: str, scheme: str = "simple") -> TokenSequence:
    """Split text into tokens under a named scheme.

    scheme "simple": lowercase, drop punctuation (Unicode category P*),
    split on whitespace. scheme "char": the character sequence with all
    whitespace removed (the unit used by character n-gram metrics).
    Deterministic; empty text yields an empty sequence.
    """
    if scheme not in SCHEMES:
        raise ValueError(f"unknown tokenization scheme: {scheme!r}")
    text = unicodedata.normalize("NFC", text)
    if scheme == "char":
        return TokenSequence(tuple(ch for ch in text if not ch.isspace()), "char")
    lowered = text.lower()
    stripped = "".join(
        ch for ch in lowered if not unicodedata.category(ch).startswith("P")
    )
    return TokenSequence(tuple(stripped.split()), "simple")


@lru_cache(maxsize=1)
def english_stopwords() -> frozenset[str]:
    """The pinned English stopword list shipped with the package."""
    data = resources.files("rtqe.data").joinpath("stopwords_en.txt").read_text("utf-8")
    return frozenset(line.strip() for line in data.splitlines() if line.strip())


def remove_stopwords(
    ts: TokenSequence, stopwords: frozenset[str] | None = None
) -> TokenSequence:
    """Drop stopword tokens, preserving the order of the survivors."""
    if stopwords is None:
        stopwords = english_stopwords()
    return TokenSequence(
        tuple(tok for tok in ts.tokens if tok not in stopwords), ts.scheme
    )


def term_vectors(a: TokenSequence, b: TokenSequence) -> TermVector:
    """Raw term-frequency vectors for two (already stopword-filtered) sentences."""
    vocab: list[str] = []
    seen: set[str] = set()
    for tok in list(a.tokens) + list(b.tokens):
        if tok not in seen:
            seen.add(tok)
            vocab.append(tok)
    ca = Counter(a.tokens)
    cb = Counter(b.tokens)
    return TermVector(
        vocabulary=tuple(vocab),
        counts_a=tuple(ca[t] for t in vocab),
        counts_b=tuple(cb[t] for t in vocab),
    )


def char_ngrams(text: str, n: int) -> Counter:
    """All contiguous length-n character windows, with multiplicity.

    Whitespace is removed before windowing; text shorter than n yields an
    empty multiset.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    text = unicodedata.normalize("NFC", text)
    chars = "".join(text.split())
    return Counter(chars[i : i + n] for i in range(len(chars) - n + 1))


# Unicode script classification keyed on the first word of each character's
# Unicode name. Only alphabetic characters are classified, so digits and
# punctuation (script Common) never contribute. Compound first words such as
# KATAKANA-HIRAGANA, and modifier letters, are deliberately absent: those
# characters carry script Common/Inherited and must not count.
_NAME_PREFIX_SCRIPTS = {
    "LATIN": "Latin",
    "CYRILLIC": "Cyrillic",
    "GREEK": "Greek",
    "COPTIC": "Coptic",
    "ARMENIAN": "Armenian",
    "GEORGIAN": "Georgian",
    "HEBREW": "Hebrew",
    "ARABIC": "Arabic",
    "SYRIAC": "Syriac",
    "THAANA": "Thaana",
    "DEVANAGARI": "Devanagari",
    "BENGALI": "Bengali",
    "GURMUKHI": "Gurmukhi",
    "GUJARATI": "Gujarati",
    "ORIYA": "Oriya",
    "TAMIL": "Tamil",
    "TELUGU": "Telugu",
    "KANNADA": "Kannada",
    "MALAYALAM": "Malayalam",
    "SINHALA": "Sinhala",
    "THAI": "Thai",
    "LAO": "Lao",
    "TIBETAN": "Tibetan",
    "MYANMAR": "Myanmar",
    "ETHIOPIC": "Ethiopic",
    "CHEROKEE": "Cherokee",
    "MONGOLIAN": "Mongolian",
    "KHMER": "Khmer",
    "HANGUL": "Hangul",
    "HIRAGANA": "Hiragana",
    "KATAKANA": "Katakana",
    "BOPOMOFO": "Bopomofo",
    "CJK": "Han",
    "YI": "Yi",
    "VAI": "Vai",
    "GLAGOLITIC": "Glagolitic",
    "TIFINAGH": "Tifinagh",
    "RUNIC": "Runic",
    "OGHAM": "Ogham",
}


def _char_script(ch: str) -> str | None:
    """Script of one character, or None when it should not count."""
    if not ch.isalpha():
        return None
    name = unicodedata.name(ch, "")
    if not name:
        return None
    first = name.split(" ", 1)[0]
    if first in ("FULLWIDTH", "HALFWIDTH"):
        parts = name.split(" ")
        first = parts[1] if len(parts) > 1 else first
    return _NAME_PREFIX_SCRIPTS.get(first)


def detect_scripts(text: str) -> ScriptProfile:
    """Classify the alphabetic characters of a text by Unicode script.

    Characters of script Common or Inherited (digits, punctuation,
    modifier letters) are ignored. `mixed` is true exactly when at least
    two distinct scripts are present.
    """
    text = unicodedata.normalize("NFC", text)
    counts: dict[str, int] = {}
    first_seen: dict[str, int] = {}
    for idx, ch in enumerate(text):
        script = _char_script(ch)
        if script is None:
            continue
        if script not in counts:
            counts[script] = 0
            first_seen[script] = idx
        counts[script] += 1
    if not counts:
        return ScriptProfile(frozenset(), None, False)
    dominant = max(counts, key=lambda s: (counts[s], -first_seen[s]))
    return ScriptProfile(frozenset(counts), dominant, len(counts) >= 2)
