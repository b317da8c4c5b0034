"""Parsing, validation, and modeling of sentence-level QE datasets.

The on-disk dialect is UTF-8 TSV with six columns per line: original
sentence, forward translation, bracketed list of raw human scores, their
mean, bracketed list of per-annotator z-scores, and the z-score mean,
e.g.::

    Hello\tHallo\t[80, 90]\t85\t[0.5, 0.7]\t0.6

An optional header line is tolerated: a first line whose third column does
not start with ``[`` is skipped. Row indices in errors are 0-based over
data lines (header excluded).
"""
from __future__ import annotations

import io
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import BinaryIO, Iterable

from .errors import DataError

#: Absolute tolerance for the mean-vs-scores consistency checks.
MEAN_TOLERANCE = 1e-6

COLUMNS = ("original", "translation", "scores", "mean", "z_scores", "z_mean")

# Row error kinds, as they appear in validation reports.
KIND_COLUMN_COUNT = "ColumnCount"
KIND_BAD_NUMBER = "BadNumber"
KIND_EMPTY_FIELD = "EmptyField"
KIND_EMPTY_SCORES = "EmptyScores"
KIND_MEAN_MISMATCH = "MeanMismatch"
KIND_ZMEAN_MISMATCH = "ZMeanMismatch"
KIND_LENGTH_MISMATCH = "LengthMismatch"
KIND_ID_SEQUENCE = "IdSequence"


class MalformedRow(DataError):
    """A data row that cannot become a valid record (strict mode)."""

    def __init__(self, index: int, column: str | None, kind: str, message: str):
        super().__init__(f"row {index}: {kind}: {message}")
        self.index = index
        self.column = column
        self.kind = kind

class EncodingError(DataError):
    """Input bytes are not valid UTF-8."""

class EmptyInput(DataError):
    """No data rows found (strict mode)."""


@dataclass(frozen=True)
class QERecord:
    """One dataset row: a sentence pair plus its human assessment scores."""

    id: int
    original: str
    translation: str
    raw_scores: tuple[float, ...]
    mean_score: float
    z_scores: tuple[float, ...]
    z_mean: float

    def check(self) -> list[tuple[str, str]]:
        """Invariant violations as (kind, message) pairs; empty when valid."""
        problems = []
        if not self.original.strip():
            problems.append((KIND_EMPTY_FIELD, "original is empty"))
        if not self.translation.strip():
            problems.append((KIND_EMPTY_FIELD, "translation is empty"))
        if not self.raw_scores:
            problems.append((KIND_EMPTY_SCORES, "raw score list is empty"))
        else:
            mean = sum(self.raw_scores) / len(self.raw_scores)
            if abs(mean - self.mean_score) > MEAN_TOLERANCE:
                problems.append(
                    (KIND_MEAN_MISMATCH,
                     f"mean field {self.mean_score!r} != mean of scores {mean!r}")
                )
        if len(self.z_scores) != len(self.raw_scores):
            problems.append(
                (KIND_LENGTH_MISMATCH,
                 f"{len(self.z_scores)} z-scores vs {len(self.raw_scores)} raw scores")
            )
        elif self.z_scores:
            zmean = sum(self.z_scores) / len(self.z_scores)
            if abs(zmean - self.z_mean) > MEAN_TOLERANCE:
                problems.append(
                    (KIND_ZMEAN_MISMATCH,
                     f"z-mean field {self.z_mean!r} != mean of z-scores {zmean!r}")
                )
        return problems


@dataclass(frozen=True)
class QEDataset:
    """An immutable, ordered collection of records for one language pair."""

    source_lang: str
    target_lang: str
    records: tuple[QERecord, ...]

    @property
    def language_pair(self) -> tuple[str, str]:
        return (self.source_lang, self.target_lang)

    def __len__(self) -> int:
        return len(self.records)


@dataclass(frozen=True)
class RowError:
    row: int
    kind: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    row_errors: tuple[RowError, ...]
    accepted_count: int
    rejected_count: int

    def to_json_lines(self) -> str:
        return "".join(
            json.dumps({"row": e.row, "kind": e.kind, "message": e.message},
                       ensure_ascii=False) + "\n"
            for e in self.row_errors
        )

    def to_text(self) -> str:
        lines = [f"accepted={self.accepted_count} rejected={self.rejected_count}"]
        lines += [f"row {e.row}: {e.kind}: {e.message}" for e in self.row_errors]
        return "\n".join(lines) + "\n"


def _parse_score_list(raw: str, column: str) -> tuple[float, ...]:
    s = raw.strip()
    if not (s.startswith("[") and s.endswith("]")):
        raise ValueError(f"{column}: expected bracketed list, got {raw!r}")
    inner = s[1:-1].strip()
    if not inner:
        return ()
    try:
        return tuple(float(part.strip()) for part in inner.split(","))
    except ValueError:
        raise ValueError(f"{column}: unparseable number in {raw!r}") from None


def _parse_row(line: str, index: int) -> QERecord:
    """Parse one data line into a record with id 0; raises MalformedRow."""
    cols = line.split("\t")
    if len(cols) != len(COLUMNS):
        raise MalformedRow(
            index, None, KIND_COLUMN_COUNT,
            f"expected {len(COLUMNS)} columns, got {len(cols)}",
        )
    try:
        raw_scores = _parse_score_list(cols[2], "scores")
    except ValueError as e:
        raise MalformedRow(index, "scores", KIND_BAD_NUMBER, str(e)) from None
    try:
        z_scores = _parse_score_list(cols[4], "z_scores")
    except ValueError as e:
        raise MalformedRow(index, "z_scores", KIND_BAD_NUMBER, str(e)) from None
    try:
        mean_score = float(cols[3].strip())
    except ValueError:
        raise MalformedRow(
            index, "mean", KIND_BAD_NUMBER, f"unparseable mean {cols[3]!r}"
        ) from None
    try:
        z_mean = float(cols[5].strip())
    except ValueError:
        raise MalformedRow(
            index, "z_mean", KIND_BAD_NUMBER, f"unparseable z-mean {cols[5]!r}"
        ) from None
    return QERecord(
        id=0,
        original=cols[0],
        translation=cols[1],
        raw_scores=raw_scores,
        mean_score=mean_score,
        z_scores=z_scores,
        z_mean=z_mean,
    )


def _looks_like_header(line: str) -> bool:
    cols = line.split("\t")
    return len(cols) < 3 or not cols[2].strip().startswith("[")


def parse_qe_tsv(
    stream: BinaryIO | bytes,
    source_lang: str,
    target_lang: str,
    mode: str = "strict",
) -> tuple[QEDataset, ValidationReport]:
    """Parse a QE TSV byte stream into a dataset plus a validation report.

    Strict mode raises on the first malformed row; lenient mode skips
    malformed rows, recording each in the report. Accepted records are
    re-indexed densely from 0, so the lenient result equals the strict
    result on the same input with the bad rows deleted.
    """
    if mode not in ("strict", "lenient"):
        raise ValueError(f"unknown parse mode: {mode!r}")
    data = stream if isinstance(stream, bytes) else stream.read()
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as e:
        raise EncodingError(f"input is not valid UTF-8: {e}") from e

    lines = text.splitlines()
    if lines and _looks_like_header(lines[0]):
        lines = lines[1:]

    records: list[QERecord] = []
    errors: list[RowError] = []
    seen = 0
    for raw_line in lines:
        if not raw_line:
            continue
        index = seen
        seen += 1
        try:
            record = _parse_row(raw_line, index)
            problems = record.check()
            if problems:
                kind, message = problems[0]
                raise MalformedRow(index, None, kind, message)
        except MalformedRow as e:
            if mode == "strict":
                raise
            errors.append(RowError(e.index, e.kind, str(e)))
            continue
        records.append(replace(record, id=len(records)))

    if seen == 0 and mode == "strict":
        raise EmptyInput("no data rows in input")

    dataset = QEDataset(source_lang, target_lang, tuple(records))
    report = ValidationReport(tuple(errors), len(records), len(errors))
    return dataset, report


def load_qe_tsv(
    path: str | Path, source_lang: str, target_lang: str, mode: str = "strict"
) -> tuple[QEDataset, ValidationReport]:
    with open(path, "rb") as fh:
        return parse_qe_tsv(fh, source_lang, target_lang, mode)


def _format_list(values: Iterable[float]) -> str:
    return "[" + ", ".join(repr(v) for v in values) + "]"


def serialize_qe_tsv(ds: QEDataset) -> str:
    """Render a dataset back to the TSV dialect parse_qe_tsv reads.

    Floats are written with repr so a parse of the output reproduces the
    dataset field for field.
    """
    out = io.StringIO()
    for rec in ds.records:
        for text in (rec.original, rec.translation):
            if "\t" in text or "\n" in text or "\r" in text:
                raise ValueError(
                    f"record {rec.id}: text contains tab or newline, "
                    "not representable in TSV"
                )
        out.write(
            "\t".join(
                (
                    rec.original,
                    rec.translation,
                    _format_list(rec.raw_scores),
                    repr(rec.mean_score),
                    _format_list(rec.z_scores),
                    repr(rec.z_mean),
                )
            )
            + "\n"
        )
    return out.getvalue()


def validate_dataset(ds: QEDataset) -> ValidationReport:
    """Re-check every record invariant on an in-memory dataset.

    Findings are report entries, never exceptions; the call is idempotent.
    """
    errors: list[RowError] = []
    rejected = 0
    for pos, rec in enumerate(ds.records):
        problems = rec.check()
        if rec.id != pos:
            problems.append(
                (KIND_ID_SEQUENCE, f"record id {rec.id} at position {pos}")
            )
        if problems:
            rejected += 1
            errors.extend(RowError(pos, kind, msg) for kind, msg in problems)
    return ValidationReport(tuple(errors), len(ds.records) - rejected, rejected)
