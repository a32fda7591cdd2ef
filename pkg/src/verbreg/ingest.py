"""Stream corpora and tally past-tense tokens per scope.

Two corpus shapes are supported: tweet-like records as JSON lines
(gzip-transparent) and per-form yearly frequency series exported from an
n-gram viewer as CSV.  Counting is single-pass: memory stays proportional to
the number of scopes times lemmas, never to stream length.
"""

from __future__ import annotations

import gzip
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Iterator, Mapping, Optional

from .lexicon import IRREGULAR, REGULAR, Lexicon

_TOKEN_RE = re.compile(r"[a-z']+")


@dataclass
class Record:
    """One corpus record: text plus optional location metadata."""

    text: str
    geo: Optional[tuple[float, float]] = None          # (lat, lon)
    user_location: Optional[str] = None
    timestamp: Optional[str] = None


@dataclass
class LoadReport:
    """Counters for one ingestion run.

    records_read counts records successfully parsed; records_skipped counts
    malformed lines.  tokens_matched counts tokens actually tallied, so
    records whose scope resolves to none contribute nothing.
    """

    records_read: int = 0
    records_skipped: int = 0
    tokens_matched: int = 0

    def as_dict(self) -> dict:
        return {"records_read": self.records_read,
                "records_skipped": self.records_skipped,
                "tokens_matched": self.tokens_matched}


class PastTenseCounts:
    """Per-lemma (regular, irregular) token tallies for one scope."""

    __slots__ = ("scope_id", "_counts")

    def __init__(self, scope_id: str,
                 counts: Mapping[str, tuple[int, int]] | None = None):
        self.scope_id = scope_id
        self._counts: dict[str, list[int]] = {}
        if counts:
            for lemma, (reg, irr) in counts.items():
                self.add(lemma, REGULAR, reg)
                self.add(lemma, IRREGULAR, irr)

    def add(self, lemma: str, cls: str, n: int = 1) -> None:
        if n < 0:
            raise ValueError("counts are nonnegative")
        pair = self._counts.setdefault(lemma, [0, 0])
        pair[0 if cls == REGULAR else 1] += n

    def get(self, lemma: str) -> tuple[int, int]:
        pair = self._counts.get(lemma, (0, 0))
        return pair[0], pair[1]

    def lemmas(self) -> list[str]:
        return sorted(self._counts)

    def items(self) -> Iterator[tuple[str, tuple[int, int]]]:
        for lemma in sorted(self._counts):
            reg, irr = self._counts[lemma]
            yield lemma, (reg, irr)

    def total_tokens(self) -> int:
        return sum(r + i for r, i in self._counts.values())

    def update(self, other: "PastTenseCounts") -> None:
        """Componentwise addition; the receiving scope_id is kept."""
        for lemma, (reg, irr) in other.items():
            self.add(lemma, REGULAR, reg)
            self.add(lemma, IRREGULAR, irr)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PastTenseCounts):
            return NotImplemented
        return (self.scope_id == other.scope_id
                and dict(self.items()) == dict(other.items()))

    def __repr__(self) -> str:
        return (f"PastTenseCounts({self.scope_id!r}, "
                f"{len(self._counts)} lemmas, {self.total_tokens()} tokens)")


def tokenize(text: str) -> list[str]:
    """Case-fold and split on non-alphabetic characters.

    Internal apostrophes are kept (so "don't" stays one token); apostrophes
    at token edges are stripped.  No listed verb form contains an apostrophe
    or hyphen, so this choice affects token boundaries only, never which
    tokens classify.
    """
    tokens = []
    for match in _TOKEN_RE.findall(text.casefold()):
        token = match.strip("'")
        if token:
            tokens.append(token)
    return tokens


def _tally_record(tallies: dict[str, PastTenseCounts], record: Record,
                  lexicon: Lexicon,
                  scoper: Callable[[Record], Optional[str]],
                  report: LoadReport | None) -> None:
    scope = scoper(record)
    if scope is None:
        return
    counts = tallies.get(scope)
    for token in tokenize(record.text):
        hit = lexicon.classify(token)
        if hit is None:
            continue
        if counts is None:
            counts = tallies.setdefault(scope, PastTenseCounts(scope))
        counts.add(hit[0], hit[1])
        if report is not None:
            report.tokens_matched += 1


def count_stream(records: Iterable[Record], lexicon: Lexicon,
                 scoper: Callable[[Record], Optional[str]],
                 report: LoadReport | None = None,
                 ) -> dict[str, PastTenseCounts]:
    """Tally every classified token into exactly one (scope, lemma, class).

    Records whose scope resolves to none are skipped.  Every occurrence
    counts: "burnt burnt" adds two.
    """
    tallies: dict[str, PastTenseCounts] = {}
    for record in records:
        _tally_record(tallies, record, lexicon, scoper, report)
    return tallies


def count_sharded(records: Iterable[Record], lexicon: Lexicon,
                  scoper: Callable[[Record], Optional[str]],
                  shards: int,
                  report: LoadReport | None = None,
                  ) -> dict[str, PastTenseCounts]:
    """Round-robin the stream over private per-shard tallies, then merge.

    Still single-pass: each record lands in its shard's tally immediately, so
    memory is O(shards x scopes x lemmas).  The merge runs in shard order and
    by construction equals a single-tally pass.
    """
    if shards < 1:
        raise ValueError("shards must be >= 1")
    if shards == 1:
        return count_stream(records, lexicon, scoper, report)
    shard_tallies: list[dict[str, PastTenseCounts]] = [{} for _ in range(shards)]
    for i, record in enumerate(records):
        _tally_record(shard_tallies[i % shards], record, lexicon, scoper,
                      report)
    return merge_scope_maps(shard_tallies)


def merge_scope_maps(maps: Iterable[dict[str, PastTenseCounts]],
                     ) -> dict[str, PastTenseCounts]:
    """Merge per-shard scope maps by componentwise addition."""
    merged: dict[str, PastTenseCounts] = {}
    for scope_map in maps:
        for scope, counts in scope_map.items():
            if scope in merged:
                merged[scope].update(counts)
            else:
                target = PastTenseCounts(scope)
                target.update(counts)
                merged[scope] = target
    return merged


def _open_text(path: str | Path):
    path = Path(path)
    if path.suffix == ".gz":
        return gzip.open(path, "rt", encoding="utf-8")
    return open(path, encoding="utf-8")


def _parse_record(obj) -> Record:
    if not isinstance(obj, dict) or not isinstance(obj.get("text"), str):
        raise ValueError("record needs a string 'text' field")
    geo = None
    if obj.get("geo") is not None:
        raw = obj["geo"]
        if (not isinstance(raw, dict)
                or not isinstance(raw.get("lat"), (int, float))
                or not isinstance(raw.get("lon"), (int, float))):
            raise ValueError("geo must be {lat, lon}")
        lat, lon = float(raw["lat"]), float(raw["lon"])
        if not (-90 <= lat <= 90 and -180 <= lon <= 180
                and math.isfinite(lat) and math.isfinite(lon)):
            raise ValueError("geo coordinates out of range")
        geo = (lat, lon)
    loc = obj.get("user_location")
    if loc is not None and not isinstance(loc, str):
        raise ValueError("user_location must be a string")
    ts = obj.get("ts")
    if ts is not None and not isinstance(ts, str):
        raise ValueError("ts must be a string")
    return Record(text=obj["text"], geo=geo, user_location=loc, timestamp=ts)


def iter_jsonl_records(path: str | Path,
                       report: LoadReport | None = None) -> Iterator[Record]:
    """Yield records from a JSON-lines file (.gz transparent).

    Malformed lines are counted in the report and skipped; blank lines are
    ignored.  A stream-level read failure propagates.
    """
    with _open_text(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            try:
                record = _parse_record(json.loads(line))
            except ValueError:
                if report is not None:
                    report.records_skipped += 1
                continue
            if report is not None:
                report.records_read += 1
            yield record


def write_counts_csv(scope_map: Mapping[str, PastTenseCounts],
                     path: str | Path) -> None:
    """Long-format counts export: scope,lemma,regular,irregular."""
    import csv

    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["scope", "lemma", "regular", "irregular"])
        for scope in sorted(scope_map):
            for lemma, (reg, irr) in scope_map[scope].items():
                writer.writerow([scope, lemma, reg, irr])


def read_counts_csv(path: str | Path) -> dict[str, PastTenseCounts]:
    import csv

    scope_map: dict[str, PastTenseCounts] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        expected = ["scope", "lemma", "regular", "irregular"]
        if reader.fieldnames != expected:
            raise ValueError(f"{path}: expected header {','.join(expected)}")
        for row in reader:
            counts = scope_map.setdefault(row["scope"],
                                          PastTenseCounts(row["scope"]))
            counts.add(row["lemma"], REGULAR, int(row["regular"]))
            counts.add(row["lemma"], IRREGULAR, int(row["irregular"]))
    return scope_map


@dataclass(frozen=True)
class FrequencySeries:
    """Per-year relative frequency (in percent) for one surface form."""

    form: str
    values: Mapping[int, float] = field(default_factory=dict)

    def __post_init__(self):
        for year, freq in self.values.items():
            if not math.isfinite(freq) or freq < 0:
                raise ValueError(
                    f"{self.form}: bad frequency {freq!r} for year {year}")

    def years(self) -> list[int]:
        return sorted(self.values)

    def __contains__(self, year: int) -> bool:
        return year in self.values


def load_frequency_series(path: str | Path) -> dict[str, FrequencySeries]:
    """Read `form,year,relative_frequency_percent` CSV into per-form series."""
    import csv

    raw: dict[str, dict[int, float]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        expected = ["form", "year", "relative_frequency_percent"]
        if reader.fieldnames != expected:
            raise ValueError(f"{path}: expected header {','.join(expected)}")
        for lineno, row in enumerate(reader, start=2):
            form = row["form"].strip()
            year = int(row["year"])
            freq = float(row["relative_frequency_percent"])
            series = raw.setdefault(form, {})
            if year in series:
                raise ValueError(f"{path}:{lineno}: duplicate year {year} "
                                 f"for form {form!r}")
            series[year] = freq
    return {form: FrequencySeries(form, values) for form, values in raw.items()}


def smooth(series: FrequencySeries, s: int, year: int) -> float:
    """Mean frequency over the existing years in [year-s, year+s].

    Mirrors the n-gram viewer's smoothing: the window is clipped to years the
    series actually has, and s=0 returns the raw value.
    """
    if s < 0:
        raise ValueError("smoothing window must be nonnegative")
    if year not in series:
        raise ValueError(f"{series.form}: year {year} not in series")
    window = [series.values[y]
              for y in range(year - s, year + s + 1) if y in series]
    return sum(window) / len(window)


def ngram_counts(regular_series: FrequencySeries | Iterable[FrequencySeries],
                 irregular_series: Iterable[FrequencySeries],
                 s: int, year: int) -> tuple[float, float]:
    """Smoothed (regular_weight, irregular_weight) for one verb.

    Weights are relative frequencies summed over each side's forms; they can
    stand in for token counts when computing regularization fractions.
    """
    if isinstance(regular_series, FrequencySeries):
        regular_series = [regular_series]
    regular_weight = sum(smooth(sr, s, year) for sr in regular_series)
    irregular_weight = sum(smooth(si, s, year) for si in irregular_series)
    return regular_weight, irregular_weight


def ngram_weights(series_by_form: Mapping[str, FrequencySeries],
                  lexicon: Lexicon, s: int, year: int,
                  ) -> dict[str, tuple[float, float]]:
    """Per-lemma (regular, irregular) weights from a bundle of form series.

    Forms without a series contribute zero weight; lemmas with no series at
    all are omitted.  A series that exists but lacks the query year is an
    error (propagated from smoothing).
    """
    weights = {}
    for entry in lexicon.entries:
        regs = [series_by_form[f] for f in sorted(entry.regular_forms)
                if f in series_by_form]
        irrs = [series_by_form[f] for f in sorted(entry.irregular_forms)
                if f in series_by_form]
        if not regs and not irrs:
            continue
        weights[entry.lemma] = ngram_counts(regs, irrs, s, year)
    return weights
