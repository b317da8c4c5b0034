import json
import math

import pytest
from hypothesis import given, strategies as st

from oracle_helpers import oracle_pearson
from rtqe.analysis import (
    ConstantSeries,
    LengthMismatch,
    TooFewValues,
    correlate,
    detect_code_switch,
    detect_failed_forward,
    failure_flags,
    group_distribution,
    pearson_r,
    z_normalize,
)
from rtqe.dataset import QEDataset, QERecord

GOLDEN_MIXED = "Monkeys in chorus cry; Tigers and leopards roar 猿狖群嘯兮虎豹原"

# Values sit on a coarse grid so an affine move cannot absorb the spread
# of a series below float64 resolution (1.0 + 1e-36 == 1.0).
series = st.lists(
    st.floats(min_value=-50.0, max_value=50.0, allow_nan=False).map(
        lambda x: round(x, 4)
    ),
    min_size=3,
    max_size=20,
)


def make_dataset(rows) -> QEDataset:
    """rows: (original, translation, z_mean) triples with dense ids."""
    records = tuple(
        QERecord(i, original, translation, (50.0, 70.0), 60.0, (z, z), z)
        for i, (original, translation, z) in enumerate(rows)
    )
    return QEDataset("en", "de", records)


class TestZNormalize:
    def test_hand_value(self):
        z = z_normalize([1.0, 2.0, 3.0])
        assert z.values[0] == pytest.approx(-1.224744871391589, abs=1e-12)
        assert z.values[1] == 0.0
        assert z.values[2] == pytest.approx(1.224744871391589, abs=1e-12)
        assert z.mean_used == 2.0

    def test_population_std_used(self):
        z = z_normalize([0.0, 10.0])
        assert z.std_used == 5.0
        assert z.values == (-1.0, 1.0)

    def test_constant_input_maps_to_zeros_with_warning(self):
        z = z_normalize([4.0, 4.0, 4.0])
        assert z.values == (0.0, 0.0, 0.0)
        assert z.std_used == 0.0
        assert "constant_input" in z.warnings

    def test_constant_input_detected_despite_mean_rounding(self):
        # sum([5.9062]*3)/3 lands one ulp off 5.9062; naive std comes out
        # tiny but nonzero and every z-score would collapse to the same
        # sign. Constancy must be decided on the raw values.
        z = z_normalize([5.9062, 5.9062, 5.9062])
        assert z.values == (0.0, 0.0, 0.0)
        assert z.mean_used == 5.9062
        assert "constant_input" in z.warnings

    def test_too_few_values(self):
        with pytest.raises(TooFewValues):
            z_normalize([1.0])

    @given(series)
    def test_output_has_zero_mean_unit_std(self, xs):
        z = z_normalize(xs)
        if z.warnings:
            assert set(z.values) == {0.0}
            return
        n = len(z.values)
        mean = sum(z.values) / n
        var = sum(v * v for v in z.values) / n
        assert mean == pytest.approx(0.0, abs=1e-9)
        assert var == pytest.approx(1.0, rel=1e-9)

    @given(series, st.floats(min_value=0.5, max_value=10.0),
           st.floats(min_value=-20.0, max_value=20.0))
    def test_affine_invariance(self, xs, scale, shift):
        base = z_normalize(xs)
        moved = z_normalize([scale * x + shift for x in xs])
        if base.warnings:
            assert moved.warnings == base.warnings
            return
        for a, b in zip(base.values, moved.values):
            assert a == pytest.approx(b, abs=1e-6)


class TestPearson:
    def test_hand_value(self):
        r = pearson_r([1.0, 2.0, 3.0, 4.0], [2.0, 1.0, 4.0, 3.0])
        assert r == pytest.approx(0.6, abs=1e-12)

    def test_perfect_correlation_is_exactly_1(self):
        xs = [0.3, 1.7, 2.9, 4.1]
        assert pearson_r(xs, xs) == 1.0

    def test_perfect_anticorrelation(self):
        xs = [1.0, 2.0, 3.0]
        assert pearson_r(xs, [-x for x in xs]) == -1.0

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            pearson_r([1.0, 2.0], [1.0])

    def test_too_few_pairs(self):
        with pytest.raises(TooFewValues):
            pearson_r([1.0], [2.0])

    def test_constant_series_rejected(self):
        with pytest.raises(ConstantSeries):
            pearson_r([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])

    def test_constant_series_rejected_despite_mean_rounding(self):
        # Mean rounding gives [5.9062]*3 a spurious nonzero variance; the
        # constancy check must not depend on it.
        with pytest.raises(ConstantSeries):
            pearson_r([1.0, 2.0, 3.0], [5.9062, 5.9062, 5.9062])

    @given(series, series)
    def test_matches_direct_formula(self, xs, ys):
        n = min(len(xs), len(ys))
        xs, ys = xs[:n], ys[:n]
        try:
            got = pearson_r(xs, ys)
        except ConstantSeries:
            return
        want = oracle_pearson(xs, ys)
        assert got == pytest.approx(want, abs=1e-9)

    @given(series, series)
    def test_symmetric_and_bounded(self, xs, ys):
        n = min(len(xs), len(ys))
        xs, ys = xs[:n], ys[:n]
        try:
            ab = pearson_r(xs, ys)
        except ConstantSeries:
            return
        assert ab == pearson_r(ys, xs)
        assert -1.0 <= ab <= 1.0


class TestDetectors:
    def test_copied_forward_translation_is_flagged(self):
        flagged, bleu = detect_failed_forward("same text here", "same text here")
        assert flagged
        assert bleu == 100.0

    def test_one_character_difference_is_not_flagged(self):
        original = "a b c d e"
        flagged, bleu = detect_failed_forward(original, "a b c d f")
        assert not flagged
        assert bleu == pytest.approx(75.21206186172788, abs=1e-9)

    def test_genuine_translation_is_not_flagged(self):
        flagged, _ = detect_failed_forward("The cat sat here", "Die Katze sass hier")
        assert not flagged

    def test_mixed_script_sentence_is_flagged(self):
        switched, scripts = detect_code_switch(GOLDEN_MIXED)
        assert switched
        assert scripts == frozenset({"Latin", "Han"})

    def test_single_script_sentence_is_not_flagged(self):
        switched, scripts = detect_code_switch("entirely latin text")
        assert not switched
        assert scripts == frozenset({"Latin"})

    def test_punctuation_and_digits_do_not_count_as_scripts(self):
        switched, _ = detect_code_switch("hello, world 123!")
        assert not switched

    def test_failure_flags_inspects_original_for_scripts(self):
        flags = failure_flags(7, GOLDEN_MIXED, "all latin translation")
        assert flags.record_id == 7
        assert flags.code_switched
        assert not flags.failed_forward

    def test_failure_flags_copy_detector_uses_both_sides(self):
        flags = failure_flags(0, "copied text", "copied text")
        assert flags.failed_forward
        assert flags.bleu_src_vs_mt == 100.0
        assert not flags.code_switched


class TestCorrelate:
    def test_self_correlation_diagonal_is_1(self):
        ds = make_dataset(
            [("a", "b", 0.5), ("c", "d", -0.3), ("e", "f", 1.1), ("g", "h", 0.2)]
        )
        report = correlate(ds, {"bleu": [10.0, 20.0, 15.0, 30.0]})
        for i in range(len(report.labels)):
            assert report.matrix[i][i] == 1.0

    def test_human_column_comes_first(self):
        ds = make_dataset([("a", "b", 0.1), ("c", "d", 0.9), ("e", "f", -0.4)])
        report = correlate(ds, {"bleu": [1.0, 2.0, 3.0], "ter": [3.0, 1.0, 2.0]})
        assert report.labels == ("human", "bleu", "ter")

    def test_matrix_is_symmetric_exactly(self):
        ds = make_dataset(
            [("a", "b", 0.5), ("c", "d", -0.3), ("e", "f", 1.1), ("g", "h", 0.2)]
        )
        report = correlate(
            ds, {"bleu": [10.0, 25.0, 15.0, 30.0], "chrf": [55.0, 60.0, 40.0, 70.0]}
        )
        size = len(report.labels)
        for i in range(size):
            for j in range(size):
                assert report.matrix[i][j] == report.matrix[j][i]

    def test_per_metric_matches_first_row(self):
        ds = make_dataset([("a", "b", 0.1), ("c", "d", 0.9), ("e", "f", -0.4)])
        report = correlate(ds, {"bleu": [1.0, 2.0, 3.0]})
        assert report.per_metric["bleu"] == report.matrix[0][1]

    def test_known_correlation_value(self):
        ds = make_dataset(
            [("a", "b", 1.0), ("c", "d", 2.0), ("e", "f", 3.0), ("g", "h", 4.0)]
        )
        report = correlate(ds, {"m": [2.0, 1.0, 4.0, 3.0]})
        assert report.per_metric["m"] == pytest.approx(0.6, abs=1e-12)

    def test_constant_metric_yields_undefined_cell(self):
        ds = make_dataset([("a", "b", 0.1), ("c", "d", 0.9), ("e", "f", -0.4)])
        report = correlate(ds, {"flat": [5.0, 5.0, 5.0]})
        assert report.per_metric["flat"] is None
        assert report.matrix[0][1] is None

    def test_missing_values_excluded_pairwise(self):
        ds = make_dataset(
            [("a", "b", 1.0), ("c", "d", 2.0), ("e", "f", 3.0), ("g", "h", 4.0)]
        )
        report = correlate(ds, {"m": [1.0, None, 3.0, 4.0]})
        assert report.excluded["m"] == 1
        assert report.per_metric["m"] == 1.0

    def test_all_missing_column_is_undefined_not_fatal(self):
        ds = make_dataset([("a", "b", 0.1), ("c", "d", 0.9), ("e", "f", -0.4)])
        report = correlate(ds, {"m": [None, None, None]})
        assert report.per_metric["m"] is None
        assert report.excluded["m"] == 3

    def test_misaligned_column_rejected(self):
        ds = make_dataset([("a", "b", 0.1), ("c", "d", 0.9)])
        with pytest.raises(LengthMismatch):
            correlate(ds, {"m": [1.0]})

    def test_json_round_trips(self):
        ds = make_dataset([("a", "b", 0.1), ("c", "d", 0.9), ("e", "f", -0.4)])
        report = correlate(ds, {"bleu": [1.0, 2.0, 3.0], "flat": [0.0, 0.0, 0.0]})
        payload = json.loads(report.to_json())
        assert payload["n"] == 3
        assert payload["labels"] == ["human", "bleu", "flat"]
        assert payload["per_metric"]["flat"] is None
        assert payload["matrix"][0][0] == 1.0

    def test_tsv_marks_undefined_cells(self):
        ds = make_dataset([("a", "b", 0.1), ("c", "d", 0.9), ("e", "f", -0.4)])
        report = correlate(ds, {"flat": [0.0, 0.0, 0.0]})
        tsv = report.to_tsv()
        lines = tsv.splitlines()
        assert lines[0] == "metric\thuman\tflat"
        assert "n/a" in lines[1]
        assert lines[1].startswith("human\t1.000000")


class TestGroupDistribution:
    def test_splits_by_flag(self):
        dist = group_distribution([0.0, 1.0, 2.0, 3.0], [True, True, False, False])
        assert dist.flagged.count == 2
        assert dist.unflagged.count == 2
        assert dist.flagged.mean == 0.5
        assert dist.unflagged.mean == 2.5

    def test_empty_group_summarized_as_none(self):
        dist = group_distribution([1.0, 2.0], [False, False])
        assert dist.flagged.count == 0
        assert dist.flagged.mean is None
        assert dist.flagged.median is None

    def test_singleton_group(self):
        dist = group_distribution([1.5, 2.0, 3.0], [True, False, False])
        assert dist.flagged.count == 1
        assert dist.flagged.std == 0.0
        assert dist.flagged.q1 == dist.flagged.median == dist.flagged.q3 == 1.5

    def test_bins_shared_across_groups(self):
        dist = group_distribution(
            [0.1, 0.2, 0.6, 0.7], [True, False, True, False]
        )
        assert dist.bin_width == 0.25
        assert dist.bins[0].left == 0.0
        total_flagged = sum(b.flagged for b in dist.bins)
        total_unflagged = sum(b.unflagged for b in dist.bins)
        assert total_flagged == 2
        assert total_unflagged == 2

    def test_maximum_lands_in_last_bin(self):
        dist = group_distribution([0.0, 0.5], [False, False])
        assert dist.bins[-1].unflagged >= 1
        assert sum(b.unflagged for b in dist.bins) == 2

    def test_negative_values_get_floored_bins(self):
        dist = group_distribution([-0.3, 0.3], [False, True])
        assert dist.bins[0].left == -0.5

    def test_empty_series(self):
        dist = group_distribution([], [])
        assert dist.bins == ()
        assert dist.flagged.count == 0

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            group_distribution([1.0], [True, False])

    def test_csv_shape(self):
        dist = group_distribution([0.0, 0.1, 0.3], [True, False, False])
        lines = dist.to_csv().splitlines()
        assert lines[0] == "bin_left,count_flagged,count_unflagged"
        assert lines[1] == "0.00,1,1"
        assert lines[2] == "0.25,0,1"

    @given(
        st.lists(
            st.tuples(
                st.floats(min_value=-4.0, max_value=4.0, allow_nan=False),
                st.booleans(),
            ),
            min_size=1,
            max_size=40,
        )
    )
    def test_every_value_lands_in_exactly_one_bin(self, pairs):
        z = [v for v, _ in pairs]
        flags = [f for _, f in pairs]
        dist = group_distribution(z, flags)
        binned = sum(b.flagged + b.unflagged for b in dist.bins)
        assert binned == len(z)
        assert dist.flagged.count + dist.unflagged.count == len(z)
