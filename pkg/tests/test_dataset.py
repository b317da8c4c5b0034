import dataclasses
import io

import pytest
from hypothesis import given, strategies as st

from rtqe.dataset import (
    KIND_BAD_NUMBER,
    KIND_COLUMN_COUNT,
    KIND_EMPTY_FIELD,
    KIND_EMPTY_SCORES,
    KIND_LENGTH_MISMATCH,
    KIND_MEAN_MISMATCH,
    KIND_ZMEAN_MISMATCH,
    EmptyInput,
    EncodingError,
    MalformedRow,
    QEDataset,
    parse_qe_tsv,
    serialize_qe_tsv,
    validate_dataset,
)

GOOD_ROW = "Hello\tHallo\t[80, 90]\t85\t[0.5, 0.7]\t0.6"
HEADER = "original\ttranslation\tscores\tmean\tz_scores\tz_mean"


def parse(text: str, mode: str = "strict"):
    return parse_qe_tsv(text.encode("utf-8"), "en", "de", mode)


class TestParsing:
    def test_single_good_row(self):
        ds, report = parse(HEADER + "\n" + GOOD_ROW + "\n")
        assert len(ds) == 1
        rec = ds.records[0]
        assert rec.id == 0
        assert rec.original == "Hello"
        assert rec.translation == "Hallo"
        assert rec.raw_scores == (80.0, 90.0)
        assert rec.mean_score == 85.0
        assert rec.z_scores == (0.5, 0.7)
        assert rec.z_mean == 0.6
        assert report.rejected_count == 0

    def test_language_pair_carried(self):
        ds, _ = parse(GOOD_ROW)
        assert ds.language_pair == ("en", "de")

    def test_header_is_optional(self):
        with_header, _ = parse(HEADER + "\n" + GOOD_ROW)
        without, _ = parse(GOOD_ROW)
        assert with_header.records == without.records

    def test_header_detection_keys_on_third_column(self):
        # A first line whose third column opens a bracketed list is data,
        # whatever the words in it look like.
        data_like = "original\ttranslation\t[1]\t1\t[0.0]\t0"
        ds, _ = parse(data_like)
        assert len(ds) == 1
        assert ds.records[0].original == "original"

    def test_blank_lines_skipped(self):
        ds, _ = parse(GOOD_ROW + "\n\n" + GOOD_ROW + "\n\n")
        assert len(ds) == 2

    def test_ids_are_dense_and_ordered(self):
        ds, _ = parse("\n".join([GOOD_ROW] * 5))
        assert [r.id for r in ds.records] == [0, 1, 2, 3, 4]

    def test_accepts_binary_stream(self):
        ds, _ = parse_qe_tsv(io.BytesIO(GOOD_ROW.encode()), "en", "de")
        assert len(ds) == 1

    def test_unicode_text_fields(self):
        row = "猿狖群嘯兮\tAffen schreien\t[50]\t50\t[-1.0]\t-1.0"
        ds, _ = parse(row)
        assert ds.records[0].original == "猿狖群嘯兮"


class TestStrictErrors:
    @pytest.mark.parametrize(
        "row,kind",
        [
            ("a\tb\t[80]\t80\t[0.1]", KIND_COLUMN_COUNT),
            ("a\tb\t[80]\t80\t[0.1]\t0.1\textra", KIND_COLUMN_COUNT),
            ("a\tb\t[80]\teighty\t[0.1]\t0.1", KIND_BAD_NUMBER),
            ("a\tb\t[80, oops]\t80\t[0.1]\t0.1", KIND_BAD_NUMBER),
            ("a\t \t[80]\t80\t[0.1]\t0.1", KIND_EMPTY_FIELD),
            (" \tb\t[80]\t80\t[0.1]\t0.1", KIND_EMPTY_FIELD),
            ("a\tb\t[]\t0\t[]\t0", KIND_EMPTY_SCORES),
            ("a\tb\t[80, 90]\t90\t[0.1, 0.2]\t0.15", KIND_MEAN_MISMATCH),
            ("a\tb\t[80, 90]\t85\t[0.1]\t0.1", KIND_LENGTH_MISMATCH),
            ("a\tb\t[80, 90]\t85\t[0.1, 0.2]\t0.9", KIND_ZMEAN_MISMATCH),
        ],
    )
    def test_malformed_row_kinds(self, row, kind):
        with pytest.raises(MalformedRow) as err:
            parse(row)
        assert err.value.kind == kind

    def test_mean_tolerance_accepts_tiny_drift(self):
        row = "a\tb\t[80, 90]\t85.0000005\t[0.1, 0.2]\t0.15000000000000002"
        ds, _ = parse(row)
        assert len(ds) == 1

    def test_mean_tolerance_rejects_larger_drift(self):
        row = "a\tb\t[80, 90]\t85.00001\t[0.1, 0.2]\t0.15"
        with pytest.raises(MalformedRow):
            parse(row)

    def test_first_bad_row_reported_with_index(self):
        text = GOOD_ROW + "\n" + "a\tb\tbroken\t1\t[0]\t0"
        with pytest.raises(MalformedRow) as err:
            parse(text)
        assert err.value.index == 1

    def test_invalid_utf8_raises_encoding_error(self):
        with pytest.raises(EncodingError):
            parse_qe_tsv(b"\xff\xfe\x00bad", "en", "de")

    def test_empty_input_raises(self):
        with pytest.raises(EmptyInput):
            parse("")

    def test_header_only_input_raises(self):
        with pytest.raises(EmptyInput):
            parse(HEADER + "\n")


class TestLenientMode:
    def test_bad_rows_skipped_and_reported(self):
        text = "\n".join(
            [GOOD_ROW, "a\tb\tbroken\t1\t[0]\t0", GOOD_ROW, "a\tb\t[1]\t2\t[0]\t0"]
        )
        ds, report = parse(text, mode="lenient")
        assert len(ds) == 2
        assert report.accepted_count == 2
        assert report.rejected_count == 2
        assert [e.row for e in report.row_errors] == [1, 3]
        assert report.row_errors[0].kind == KIND_BAD_NUMBER
        assert report.row_errors[1].kind == KIND_MEAN_MISMATCH

    def test_survivors_reindexed_densely(self):
        text = "\n".join(["bad\trow\t[nope]\t1\t[0]\t0", GOOD_ROW, GOOD_ROW])
        ds, _ = parse(text, mode="lenient")
        assert [r.id for r in ds.records] == [0, 1]

    def test_empty_input_allowed(self):
        ds, report = parse("", mode="lenient")
        assert len(ds) == 0
        assert report.accepted_count == 0

    def test_report_serializations(self):
        _, report = parse("a\tb\t[broken]\t1\t[0]\t0", mode="lenient")
        assert '"kind"' in report.to_json_lines()
        assert "rejected=1" in report.to_text()

    def test_unknown_mode_rejected(self):
        with pytest.raises(ValueError):
            parse(GOOD_ROW, mode="relaxed")


class TestSerialization:
    def test_round_trip_preserves_records(self):
        ds, _ = parse(HEADER + "\n" + GOOD_ROW + "\n" + GOOD_ROW)
        again, _ = parse(serialize_qe_tsv(ds))
        assert again.records == ds.records

    @given(
        st.lists(
            st.tuples(
                st.floats(min_value=0, max_value=100),
                st.floats(min_value=-4, max_value=4),
            ),
            min_size=1,
            max_size=4,
        )
    )
    def test_round_trip_preserves_floats_exactly(self, pairs):
        scores = [s for s, _ in pairs]
        zs = [z for _, z in pairs]
        from conftest import record_line

        ds, _ = parse(record_line("ein satz", "a sentence", scores, zs))
        again, _ = parse(serialize_qe_tsv(ds))
        assert again.records == ds.records

    def test_tab_in_text_rejected(self):
        ds, _ = parse(GOOD_ROW)
        bad = dataclasses.replace(ds.records[0], original="a\tb")
        with pytest.raises(ValueError):
            serialize_qe_tsv(QEDataset("en", "de", (bad,)))


class TestValidateDataset:
    def test_clean_dataset_reports_nothing(self):
        ds, _ = parse(GOOD_ROW)
        report = validate_dataset(ds)
        assert report.row_errors == ()
        assert report.accepted_count == 1

    def test_mutated_empty_translation_yields_one_row_error(self):
        ds, _ = parse(GOOD_ROW)
        mutated = QEDataset(
            "en", "de", (dataclasses.replace(ds.records[0], translation=""),)
        )
        report = validate_dataset(mutated)
        assert len(report.row_errors) == 1
        assert report.row_errors[0].kind == KIND_EMPTY_FIELD

    def test_id_gap_detected(self):
        ds, _ = parse(GOOD_ROW + "\n" + GOOD_ROW)
        shuffled = QEDataset("en", "de", (ds.records[1], ds.records[0]))
        report = validate_dataset(shuffled)
        assert report.rejected_count == 2
