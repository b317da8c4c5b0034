"""Statistics over similarity scores: z-normalization, Pearson correlation,
correlation matrices, and the two failure-mode detectors (forward-copy
detection by BLEU threshold, code-switch detection by script mixing).
"""
from __future__ import annotations

import json
import math
import statistics
from dataclasses import dataclass

from .dataset import QEDataset
from .errors import DataError
from .metrics import DEFAULT_BLEU, sentence_bleu
from .textprep import detect_scripts, tokenize

WARN_CONSTANT_INPUT = "constant_input"

FAILED_FORWARD_BLEU_THRESHOLD = 95.0

HISTOGRAM_BIN_WIDTH = 0.25

UNDEFINED_CELL = "n/a"

HUMAN_COLUMN = "human"


class TooFewValues(DataError):
    pass


class LengthMismatch(DataError):
    pass


class ConstantSeries(DataError):
    pass


@dataclass(frozen=True)
class ZSeries:
    """A z-normalized series together with the moments used to produce it."""

    values: tuple[float, ...]
    mean_used: float
    std_used: float
    warnings: tuple[str, ...] = ()


def z_normalize(xs) -> ZSeries:
    """Center and scale by the population standard deviation.

    Constant input has no scale; it maps to all zeros with a warning
    rather than dividing by zero.
    """
    n = len(xs)
    if n < 2:
        raise TooFewValues(f"need at least 2 values, got {n}")
    # min == max catches constant input exactly; sum(xs)/n can land an ulp
    # away from the shared value, leaving a spurious nonzero std.
    if min(xs) == max(xs):
        return ZSeries((0.0,) * n, xs[0], 0.0, (WARN_CONSTANT_INPUT,))
    mean = sum(xs) / n
    std = math.sqrt(sum((x - mean) ** 2 for x in xs) / n)
    if std == 0.0:
        return ZSeries((0.0,) * n, mean, 0.0, (WARN_CONSTANT_INPUT,))
    return ZSeries(tuple((x - mean) / std for x in xs), mean, std)


def pearson_r(xs, ys) -> float:
    """Product-moment correlation, clamped to [-1, 1]."""
    if len(xs) != len(ys):
        raise LengthMismatch(f"{len(xs)} vs {len(ys)} values")
    n = len(xs)
    if n < 2:
        raise TooFewValues(f"need at least 2 pairs, got {n}")
    if min(xs) == max(xs) or min(ys) == max(ys):
        raise ConstantSeries("correlation undefined for a constant series")
    mean_x = sum(xs) / n
    mean_y = sum(ys) / n
    cov = 0.0
    var_x = 0.0
    var_y = 0.0
    for x, y in zip(xs, ys):
        dx = x - mean_x
        dy = y - mean_y
        cov += dx * dy
        var_x += dx * dx
        var_y += dy * dy
    if var_x == 0.0 or var_y == 0.0:
        raise ConstantSeries("correlation undefined for a constant series")
    # sqrt of the product keeps pearson_r(x, x) exactly 1: the denominator
    # becomes sqrt(cov^2).
    return max(-1.0, min(1.0, cov / math.sqrt(var_x * var_y)))


def detect_failed_forward(original: str, translation: str) -> tuple[bool, float]:
    """Flag forward translations that just copied the source.

    A copied (or near-copied) forward translation leaves the two sides
    almost identical, so their cross-lingual BLEU is implausibly high.
    Returns the flag and the BLEU value that triggered it.
    """
    score = sentence_bleu(
        tokenize(translation, "simple"), tokenize(original, "simple"), DEFAULT_BLEU
    )
    return score.value > FAILED_FORWARD_BLEU_THRESHOLD, score.value


def detect_code_switch(text: str) -> tuple[bool, frozenset[str]]:
    """Flag sentences that mix writing scripts, returning the scripts seen."""
    profile = detect_scripts(text)
    return profile.mixed, profile.scripts


@dataclass(frozen=True)
class FailureFlags:
    """Both failure-mode flags for one record, with their trigger values."""

    record_id: int
    failed_forward: bool
    code_switched: bool
    bleu_src_vs_mt: float
    scripts: frozenset[str]


def failure_flags(record_id: int, original: str, translation: str) -> FailureFlags:
    """Run both detectors on one record.

    The copy detector compares the original with the forward translation;
    the code-switch detector inspects the original sentence, where mixed
    input defeats a monolingual round trip.
    """
    failed, bleu = detect_failed_forward(original, translation)
    switched, scripts = detect_code_switch(original)
    return FailureFlags(record_id, failed, switched, bleu, scripts)


@dataclass(frozen=True)
class CorrelationReport:
    """Pairwise Pearson r over the human column and every metric column.

    Cells where the correlation is undefined (constant series, too few
    overlapping values) hold None and serialize as a marked cell rather
    than a number. `excluded` counts records dropped pairwise against the
    human column because the metric value was missing.
    """

    labels: tuple[str, ...]
    matrix: tuple[tuple[float | None, ...], ...]
    per_metric: dict[str, float | None]
    excluded: dict[str, int]
    n: int

    def to_json(self) -> str:
        payload = {
            "n": self.n,
            "labels": list(self.labels),
            "per_metric": self.per_metric,
            "excluded": self.excluded,
            "matrix": [list(row) for row in self.matrix],
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"

    def to_tsv(self) -> str:
        def cell(value: float | None) -> str:
            return UNDEFINED_CELL if value is None else f"{value:.6f}"

        lines = ["\t".join(["metric"] + list(self.labels))]
        for label, row in zip(self.labels, self.matrix):
            lines.append("\t".join([label] + [cell(v) for v in row]))
        return "\n".join(lines) + "\n"


def correlate(ds: QEDataset, metric_columns: dict[str, list[float | None]]) -> CorrelationReport:
    """Correlate every metric column against human z-means and each other.

    Columns must be record-aligned. Missing values (None) are excluded
    pairwise per cell; a cell whose correlation is undefined is recorded
    as None instead of failing the report.
    """
    n = len(ds.records)
    for metric_id, column in metric_columns.items():
        if len(column) != n:
            raise LengthMismatch(f"column {metric_id}: {len(column)} values for {n} records")

    columns: dict[str, list[float | None]] = {
        HUMAN_COLUMN: [r.z_mean for r in ds.records]
    }
    columns.update(metric_columns)
    labels = tuple(columns)

    def pairwise(a: list[float | None], b: list[float | None]) -> float | None:
        xs = []
        ys = []
        for x, y in zip(a, b):
            if x is None or y is None:
                continue
            xs.append(x)
            ys.append(y)
        try:
            return pearson_r(xs, ys)
        except (TooFewValues, ConstantSeries):
            return None

    size = len(labels)
    grid: list[list[float | None]] = [[None] * size for _ in range(size)]
    for i in range(size):
        for j in range(i, size):
            r = pairwise(columns[labels[i]], columns[labels[j]])
            grid[i][j] = r
            grid[j][i] = r

    human = columns[HUMAN_COLUMN]
    per_metric = {}
    excluded = {}
    for metric_id in metric_columns:
        idx = labels.index(metric_id)
        per_metric[metric_id] = grid[0][idx]
        excluded[metric_id] = sum(
            1 for x, y in zip(human, columns[metric_id]) if x is None or y is None
        )

    return CorrelationReport(
        labels=labels,
        matrix=tuple(tuple(row) for row in grid),
        per_metric=per_metric,
        excluded=excluded,
        n=n,
    )


@dataclass(frozen=True)
class GroupSummary:
    """Descriptive statistics for one flag group; None marks undefined."""

    count: int
    mean: float | None
    std: float | None
    q1: float | None
    median: float | None
    q3: float | None


@dataclass(frozen=True)
class HistogramBin:
    left: float
    flagged: int
    unflagged: int


@dataclass(frozen=True)
class GroupedDistribution:
    flagged: GroupSummary
    unflagged: GroupSummary
    bin_width: float
    bins: tuple[HistogramBin, ...]

    def to_csv(self) -> str:
        lines = ["bin_left,count_flagged,count_unflagged"]
        for b in self.bins:
            lines.append(f"{b.left:.2f},{b.flagged},{b.unflagged}")
        return "\n".join(lines) + "\n"


def _summarize(values: list[float]) -> GroupSummary:
    count = len(values)
    if count == 0:
        return GroupSummary(0, None, None, None, None, None)
    mean = sum(values) / count
    std = math.sqrt(sum((v - mean) ** 2 for v in values) / count)
    if count == 1:
        only = values[0]
        return GroupSummary(1, mean, 0.0, only, only, only)
    q1, median, q3 = statistics.quantiles(values, n=4, method="inclusive")
    return GroupSummary(count, mean, std, q1, median, q3)


def group_distribution(z: list[float], flags: list[bool]) -> GroupedDistribution:
    """Split a z-score series by flag and summarize both groups.

    The histogram uses shared fixed-width bins over the observed range of
    the whole series so the two groups are directly comparable.
    """
    if len(z) != len(flags):
        raise LengthMismatch(f"{len(z)} values vs {len(flags)} flags")
    flagged_values = [v for v, f in zip(z, flags) if f]
    unflagged_values = [v for v, f in zip(z, flags) if not f]

    bins: list[HistogramBin] = []
    if z:
        width = HISTOGRAM_BIN_WIDTH
        left0 = math.floor(min(z) / width) * width
        bin_count = max(1, math.floor((max(z) - left0) / width) + 1)
        flagged_counts = [0] * bin_count
        unflagged_counts = [0] * bin_count
        for v, f in zip(z, flags):
            idx = min(int((v - left0) / width), bin_count - 1)
            if f:
                flagged_counts[idx] += 1
            else:
                unflagged_counts[idx] += 1
        bins = [
            HistogramBin(left0 + i * width, flagged_counts[i], unflagged_counts[i])
            for i in range(bin_count)
        ]

    return GroupedDistribution(
        flagged=_summarize(flagged_values),
        unflagged=_summarize(unflagged_values),
        bin_width=HISTOGRAM_BIN_WIDTH,
        bins=tuple(bins),
    )
