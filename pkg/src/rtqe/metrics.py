"""Traditional sentence-similarity metrics, implemented from scratch.

Sentence-level BLEU, chrF, TER (with a greedy block-shift phase), and the
term-frequency cosine over a joint vocabulary after stopword removal. All
scorers are pure functions returning a MetricScore that records its scale
and a hash of the configuration that produced it.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache

from .textprep import TokenSequence, char_ngrams, remove_stopwords, term_vectors, tokenize
from .util import canonical_hash

SCALE_UNIT = "unit_interval"
SCALE_SIGNED = "signed_unit"
SCALE_PERCENT = "percent"

_SCALE_BOUNDS = {
    SCALE_UNIT: (0.0, 1.0),
    SCALE_SIGNED: (-1.0, 1.0),
    SCALE_PERCENT: (0.0, 100.0),
}

SMOOTHING_NONE = "none"
SMOOTHING_ADD_ONE = "add_one_higher_order"

WARN_EMPTY_HYPOTHESIS = "empty_hypothesis"
WARN_EMPTY_REFERENCE = "empty_reference"
WARN_BOTH_EMPTY = "both_empty"


@dataclass(frozen=True)
class BleuConfig:
    """Sentence BLEU parameters.

    With add_one_higher_order smoothing, the numerator and denominator of
    every precision of order >= 2 get +1, which keeps short sentences from
    collapsing to zero. With no smoothing, any zero precision zeroes the
    whole score.
    """

    max_n: int = 4
    smoothing: str = SMOOTHING_ADD_ONE

    def __post_init__(self):
        if not 1 <= self.max_n <= 9:
            raise ValueError(f"max_n must be in [1, 9], got {self.max_n}")
        if self.smoothing not in (SMOOTHING_NONE, SMOOTHING_ADD_ONE):
            raise ValueError(f"unknown smoothing: {self.smoothing!r}")


@dataclass(frozen=True)
class ChrfConfig:
    """Character n-gram F-score parameters (defaults: order 6, beta 2)."""

    max_n: int = 6
    beta: float = 2.0

    def __post_init__(self):
        if self.max_n < 1:
            raise ValueError(f"max_n must be >= 1, got {self.max_n}")
        if self.beta <= 0:
            raise ValueError(f"beta must be > 0, got {self.beta}")


DEFAULT_BLEU = BleuConfig()
DEFAULT_CHRF = ChrfConfig()


@lru_cache(maxsize=None)
def _bleu_hash(cfg: BleuConfig) -> str:
    return canonical_hash({"metric": "bleu", "max_n": cfg.max_n, "smoothing": cfg.smoothing})


@lru_cache(maxsize=None)
def _chrf_hash(cfg: ChrfConfig) -> str:
    return canonical_hash({"metric": "chrf", "max_n": cfg.max_n, "beta": cfg.beta})


_TER_HASH = canonical_hash({"metric": "ter", "shift": "greedy"})
_TF_COSINE_HASH = canonical_hash({"metric": "tf_cosine"})


def metric_config_hashes(
    bleu_cfg: BleuConfig = DEFAULT_BLEU, chrf_cfg: ChrfConfig = DEFAULT_CHRF
) -> dict[str, str]:
    """Configuration hashes of all four lexical metrics, for run manifests."""
    return {
        "bleu": _bleu_hash(bleu_cfg),
        "chrf": _chrf_hash(chrf_cfg),
        "ter": _TER_HASH,
        "tf_cosine": _TF_COSINE_HASH,
    }


@dataclass(frozen=True)
class MetricScore:
    """A named similarity value with its scale and configuration provenance."""

    metric_id: str
    value: float
    scale: str
    config_hash: str
    warnings: tuple[str, ...] = ()
    unbounded_above: bool = False

    def __post_init__(self):
        lo, hi = _SCALE_BOUNDS[self.scale]
        if self.value < lo or (not self.unbounded_above and self.value > hi):
            raise ValueError(
                f"{self.metric_id}: value {self.value} outside scale {self.scale}"
            )


def _ngram_counts(tokens: tuple[str, ...], n: int) -> Counter:
    return Counter(tokens[i : i + n] for i in range(len(tokens) - n + 1))


def sentence_bleu(
    hyp: TokenSequence, ref: TokenSequence, cfg: BleuConfig = DEFAULT_BLEU
) -> MetricScore:
    """Sentence BLEU on the 0-100 scale.

    Geometric mean of clipped n-gram precisions for n = 1..max_n, times the
    brevity penalty min(1, exp(1 - |ref|/|hyp|)). Empty hypothesis or
    reference scores 0 with a warning rather than failing.
    """
    warnings = []
    if len(hyp) == 0:
        warnings.append(WARN_EMPTY_HYPOTHESIS)
    if len(ref) == 0:
        warnings.append(WARN_EMPTY_REFERENCE)
    if warnings:
        return MetricScore("bleu", 0.0, SCALE_PERCENT, _bleu_hash(cfg), tuple(warnings))

    log_sum = 0.0
    for n in range(1, cfg.max_n + 1):
        hyp_grams = _ngram_counts(hyp.tokens, n)
        ref_grams = _ngram_counts(ref.tokens, n)
        matched = sum(min(c, ref_grams[g]) for g, c in hyp_grams.items())
        total = sum(hyp_grams.values())
        if cfg.smoothing == SMOOTHING_ADD_ONE and n >= 2:
            matched += 1
            total += 1
        if matched == 0:
            return MetricScore("bleu", 0.0, SCALE_PERCENT, _bleu_hash(cfg))
        log_sum += math.log(matched / total)

    brevity = min(1.0, math.exp(1.0 - len(ref) / len(hyp)))
    score = 100.0 * math.exp(log_sum / cfg.max_n) * brevity
    return MetricScore("bleu", min(score, 100.0), SCALE_PERCENT, _bleu_hash(cfg))


def chrf(hyp_text: str, ref_text: str, cfg: ChrfConfig = DEFAULT_CHRF) -> MetricScore:
    """Character n-gram F-beta score on the 0-100 scale.

    Precision and recall are computed per order from multiset overlap and
    macro-averaged over orders, skipping orders where neither side has any
    n-grams. Two empty texts are a vacuous perfect match (100, flagged).
    """
    hyp_stripped = "".join(hyp_text.split())
    ref_stripped = "".join(ref_text.split())
    if not hyp_stripped and not ref_stripped:
        return MetricScore(
            "chrf", 100.0, SCALE_PERCENT, _chrf_hash(cfg), (WARN_BOTH_EMPTY,)
        )

    precisions = []
    recalls = []
    for n in range(1, cfg.max_n + 1):
        hyp_grams = char_ngrams(hyp_text, n)
        ref_grams = char_ngrams(ref_text, n)
        hyp_total = sum(hyp_grams.values())
        ref_total = sum(ref_grams.values())
        if hyp_total == 0 and ref_total == 0:
            continue
        overlap = sum(min(c, ref_grams[g]) for g, c in hyp_grams.items())
        precisions.append(overlap / hyp_total if hyp_total else 0.0)
        recalls.append(overlap / ref_total if ref_total else 0.0)

    precision = sum(precisions) / len(precisions)
    recall = sum(recalls) / len(recalls)
    if precision + recall == 0.0:
        return MetricScore("chrf", 0.0, SCALE_PERCENT, _chrf_hash(cfg))
    beta_sq = cfg.beta * cfg.beta
    f_score = (1 + beta_sq) * precision * recall / (beta_sq * precision + recall)
    return MetricScore("chrf", min(100.0 * f_score, 100.0), SCALE_PERCENT, _chrf_hash(cfg))


def _levenshtein(a, b) -> int:
    """Uniform-cost insert/delete/substitute edit distance."""
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    row = list(range(len(b) + 1))
    for i, x in enumerate(a, start=1):
        prev = row[0]
        row[0] = i
        for j, y in enumerate(b, start=1):
            cur = row[j]
            row[j] = min(cur + 1, row[j - 1] + 1, prev + (x != y))
            prev = cur
    return row[-1]


def _best_shift(hyp: list, ref: tuple, base: int):
    """Best-improving single block shift, or None when no shift helps.

    Among equally improving shifts: longest block first, then leftmost
    origin, then leftmost insertion point. Achieved by scan order plus a
    strictly-better replacement rule.
    """
    best_dist = base
    best_seq = None
    n = len(hyp)
    for length in range(n, 0, -1):
        for start in range(0, n - length + 1):
            block = hyp[start : start + length]
            rest = hyp[:start] + hyp[start + length :]
            for target in range(0, len(rest) + 1):
                if target == start:
                    continue
                candidate = rest[:target] + block + rest[target:]
                dist = _levenshtein(candidate, ref)
                if dist < best_dist:
                    best_dist = dist
                    best_seq = candidate
    if best_seq is None:
        return None
    return best_dist, best_seq


def ter(hyp: TokenSequence, ref: TokenSequence) -> MetricScore:
    """Translation error rate: edit operations divided by reference length.

    Edits are counted as one per applied block shift plus the remaining
    Levenshtein distance. The shift phase is greedy: repeatedly apply the
    single shift that most reduces the remaining edit distance, stopping
    when no shift strictly reduces it. An empty reference against a
    non-empty hypothesis is scored as edits/1 and flagged. The result can
    exceed 1.
    """
    warnings = []
    ref_tokens = ref.tokens
    current = list(hyp.tokens)
    distance = _levenshtein(current, ref_tokens)
    shifts = 0
    while distance > 0:
        improved = _best_shift(current, ref_tokens, distance)
        if improved is None:
            break
        distance, current = improved
        shifts += 1
    edits = shifts + distance

    if len(ref_tokens) == 0:
        denom = 1
        if len(hyp) > 0:
            warnings.append(WARN_EMPTY_REFERENCE)
    else:
        denom = len(ref_tokens)
    return MetricScore(
        "ter", edits / denom, SCALE_UNIT, _TER_HASH, tuple(warnings),
        unbounded_above=True,
    )


def tf_cosine(a_text: str, b_text: str) -> MetricScore:
    """Cosine of raw term-count vectors after stopword removal.

    Fixed pipeline: simple tokenization, stopword filtering, joint
    vocabulary term vectors, then the cosine of the two count vectors.
    Two empty vectors give 0 with a warning; one empty vector gives 0.
    """
    a = remove_stopwords(tokenize(a_text, "simple"))
    b = remove_stopwords(tokenize(b_text, "simple"))
    tv = term_vectors(a, b)
    sq_a = sum(c * c for c in tv.counts_a)
    sq_b = sum(c * c for c in tv.counts_b)
    if sq_a == 0 and sq_b == 0:
        return MetricScore(
            "tf_cosine", 0.0, SCALE_UNIT, _TF_COSINE_HASH, (WARN_BOTH_EMPTY,)
        )
    if sq_a == 0 or sq_b == 0:
        return MetricScore("tf_cosine", 0.0, SCALE_UNIT, _TF_COSINE_HASH)
    dot = 0.0
    for ca, cb in zip(tv.counts_a, tv.counts_b):
        dot += ca * cb
    # sqrt of the product (not product of sqrts) so identical inputs give
    # dot/sqrt(dot^2), which is exactly 1.
    value = min(max(dot / math.sqrt(sq_a * sq_b), 0.0), 1.0)
    return MetricScore("tf_cosine", value, SCALE_UNIT, _TF_COSINE_HASH)
