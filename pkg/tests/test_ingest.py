import gzip
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from verbreg import (
    FrequencySeries,
    LoadReport,
    PastTenseCounts,
    Record,
    count_sharded,
    count_stream,
    iter_jsonl_records,
    load_frequency_series,
    merge_scope_maps,
    ngram_counts,
    smooth,
    tokenize,
)
from verbreg.ingest import ngram_weights, read_counts_csv, write_counts_csv

from conftest import write_jsonl


def constant_scope(record):
    return "all"


class TestTokenize:
    def test_casefold_and_punctuation(self):
        assert tokenize("He BURNT it!") == ["he", "burnt", "it"]

    def test_empty(self):
        assert tokenize("") == []

    def test_hyphens_split(self):
        assert tokenize("burnt-out, re-learnt") == ["burnt", "out", "re", "learnt"]

    def test_internal_apostrophe_kept_edges_stripped(self):
        assert tokenize("don't 'burnt'") == ["don't", "burnt"]

    def test_digits_split(self):
        assert tokenize("burnt2burned") == ["burnt", "burned"]


class TestCountStream:
    def test_single_record(self, lexicon):
        records = [Record(text="i burned it and he burnt it")]
        out = count_stream(records, lexicon, constant_scope)
        assert out["all"].get("burn") == (1, 1)

    def test_case_insensitive(self, lexicon):
        out = count_stream([Record(text="BURNED")], lexicon, constant_scope)
        assert out["all"].get("burn") == (1, 0)

    def test_empty_stream(self, lexicon):
        assert count_stream([], lexicon, constant_scope) == {}

    def test_every_occurrence_counts(self, lexicon):
        out = count_stream([Record(text="burnt burnt")], lexicon, constant_scope)
        assert out["all"].get("burn") == (0, 2)

    def test_none_scope_contributes_nothing(self, lexicon):
        out = count_stream([Record(text="burnt")], lexicon, lambda r: None)
        assert out == {}

    def test_report_counts_matched_tokens(self, lexicon):
        report = LoadReport()
        count_stream([Record(text="burnt and burning")], lexicon,
                     constant_scope, report)
        assert report.tokens_matched == 1


@st.composite
def record_batches(draw):
    forms = ["burned", "burnt", "blessed", "blest", "dreamed", "dreamt", "xyz"]
    scopes = ["a", "b", "c"]
    n = draw(st.integers(0, 30))
    records = []
    for _ in range(n):
        words = draw(st.lists(st.sampled_from(forms), min_size=0, max_size=5))
        scope = draw(st.sampled_from(scopes))
        records.append((Record(text=" ".join(words)), scope))
    return records


@given(record_batches(), st.integers(2, 5))
@settings(max_examples=40, deadline=None)
def test_sharding_never_changes_counts(batch, shards):
    from verbreg import load_lexicon

    lexicon = load_lexicon()
    scope_of = {id(r): s for r, s in batch}
    records = [r for r, _ in batch]

    def scoper(record):
        return scope_of[id(record)]

    single = count_stream(records, lexicon, scoper)
    sharded = count_sharded(records, lexicon, scoper, shards=shards)
    assert single == sharded


@given(record_batches())
@settings(max_examples=40, deadline=None)
def test_scope_totals_sum_to_unscoped_tally(batch):
    from verbreg import load_lexicon

    lexicon = load_lexicon()
    scope_of = {id(r): s for r, s in batch}
    records = [r for r, _ in batch]
    scoped = count_stream(records, lexicon, lambda r: scope_of[id(r)])
    unscoped = count_stream(records, lexicon, constant_scope)
    merged = merge_scope_maps([{"all": c} for c in scoped.values()])
    if unscoped:
        assert merged["all"] == unscoped["all"]
    else:
        assert merged == {}


class TestPastTenseCounts:
    def test_negative_rejected(self):
        counts = PastTenseCounts("x")
        with pytest.raises(ValueError):
            counts.add("burn", "regular", -1)

    def test_update_merges_componentwise(self):
        a = PastTenseCounts("x", {"burn": (1, 2)})
        b = PastTenseCounts("y", {"burn": (3, 4), "bless": (1, 0)})
        a.update(b)
        assert a.get("burn") == (4, 6)
        assert a.get("bless") == (1, 0)
        assert a.scope_id == "x"

    def test_csv_round_trip(self, tmp_path):
        scope_map = {
            "10001": PastTenseCounts("10001", {"burn": (5, 2)}),
            "all": PastTenseCounts("all", {"bless": (1, 1), "burn": (0, 3)}),
        }
        path = tmp_path / "counts.csv"
        write_counts_csv(scope_map, path)
        assert read_counts_csv(path) == scope_map


class TestJsonlReading:
    def test_valid_records(self, tmp_path):
        path = write_jsonl(tmp_path / "corpus.jsonl", [
            {"text": "he burnt it", "geo": {"lat": 44.5, "lon": -73.2}},
            {"text": "ok", "user_location": "Burlington, VT", "ts": "2017-01-01T00:00:00Z"},
        ])
        report = LoadReport()
        records = list(iter_jsonl_records(path, report))
        assert report.records_read == 2
        assert report.records_skipped == 0
        assert records[0].geo == (44.5, -73.2)
        assert records[1].user_location == "Burlington, VT"

    def test_malformed_lines_counted_and_skipped(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        path.write_text("\n".join([
            '{"text": "fine"}',
            "not json",
            '{"no_text": 1}',
            '{"text": "bad geo", "geo": {"lat": 95.0, "lon": 0.0}}',
            '{"text": "bad geo2", "geo": [1, 2]}',
            "",
            '{"text": "fine too"}',
        ]) + "\n")
        report = LoadReport()
        records = list(iter_jsonl_records(path, report))
        assert [r.text for r in records] == ["fine", "fine too"]
        assert report.records_read == 2
        assert report.records_skipped == 4

    def test_gzip_transparent(self, tmp_path):
        path = tmp_path / "corpus.jsonl.gz"
        with gzip.open(path, "wt", encoding="utf-8") as fh:
            fh.write(json.dumps({"text": "burnt"}) + "\n")
        records = list(iter_jsonl_records(path))
        assert records[0].text == "burnt"

    def test_missing_file_aborts(self, tmp_path):
        with pytest.raises(OSError):
            list(iter_jsonl_records(tmp_path / "absent.jsonl"))


class TestSmoothing:
    def test_window_mean(self):
        series = FrequencySeries("burned", {1998: 1, 1999: 2, 2000: 3,
                                            2001: 4, 2002: 5})
        assert smooth(series, 1, 2000) == pytest.approx(3.0)

    def test_zero_smoothing_is_identity(self):
        series = FrequencySeries("burned", {2000: 3.5})
        assert smooth(series, 0, 2000) == 3.5

    def test_window_clipped_to_existing_years(self):
        values = {y: float(y - 2000) for y in range(2003, 2009)}
        series = FrequencySeries("burned", values)
        expected = sum(values.values()) / 6  # 2003..2008 only
        assert smooth(series, 5, 2008) == pytest.approx(expected)

    def test_absent_year_errors(self):
        series = FrequencySeries("burned", {2000: 1.0})
        with pytest.raises(ValueError, match="1999"):
            smooth(series, 1, 1999)

    def test_negative_window_errors(self):
        series = FrequencySeries("burned", {2000: 1.0})
        with pytest.raises(ValueError):
            smooth(series, -1, 2000)


class TestNgramCounts:
    def test_single_year_pair(self):
        reg = FrequencySeries("burned", {2000: 0.004321})
        irr = FrequencySeries("burnt", {2000: 0.000954})
        assert ngram_counts(reg, [irr], 3, 2000) == (
            pytest.approx(0.004321), pytest.approx(0.000954))

    def test_irregular_weights_add(self):
        reg = FrequencySeries("r", {2000: 0.5})
        irr1 = FrequencySeries("i1", {2000: 0.001})
        irr2 = FrequencySeries("i2", {2000: 0.002})
        _, irregular = ngram_counts(reg, [irr1, irr2], 0, 2000)
        assert irregular == pytest.approx(0.003)

    def test_ngram_weights_missing_forms_contribute_zero(self, lexicon):
        series = {
            "burned": FrequencySeries("burned", {2008: 0.004}),
            "burnt": FrequencySeries("burnt", {2008: 0.001}),
            "dreamt": FrequencySeries("dreamt", {2008: 0.002}),
        }
        weights = ngram_weights(series, lexicon, 0, 2008)
        assert weights["burn"] == (pytest.approx(0.004), pytest.approx(0.001))
        assert weights["dream"] == (0.0, pytest.approx(0.002))
        assert "bless" not in weights


class TestFrequencySeriesLoading:
    def test_load(self, tmp_path):
        path = tmp_path / "series.csv"
        path.write_text("form,year,relative_frequency_percent\n"
                        "burned,2007,0.004\n"
                        "burned,2008,0.005\n"
                        "burnt,2008,0.001\n")
        series = load_frequency_series(path)
        assert series["burned"].years() == [2007, 2008]
        assert series["burnt"].values[2008] == pytest.approx(0.001)

    def test_duplicate_year_rejected(self, tmp_path):
        path = tmp_path / "series.csv"
        path.write_text("form,year,relative_frequency_percent\n"
                        "burned,2008,0.004\n"
                        "burned,2008,0.005\n")
        with pytest.raises(ValueError, match="duplicate"):
            load_frequency_series(path)

    def test_negative_frequency_rejected(self, tmp_path):
        path = tmp_path / "series.csv"
        path.write_text("form,year,relative_frequency_percent\n"
                        "burned,2008,-0.004\n")
        with pytest.raises(ValueError):
            load_frequency_series(path)
