"""Scalar statistics: regularization fractions and tables, paired and
correlation tests, frequency binning.

The regularization fraction of a verb is its regular past-tense weight over
total past-tense weight; weights may be token counts or relative frequencies
interchangeably (the fraction is scale-invariant).  Scope-level averages are
unweighted means over verbs ("average of averages"), so rare verbs count as
much as common ones.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np
from scipy.stats import norm as _norm
from scipy.stats import rankdata as _rankdata
from scipy.stats import t as _t

from .ingest import PastTenseCounts

REGULAR = "regular"
IRREGULAR = "irregular"

# Exact Wilcoxon switches to the normal approximation above this many
# nonzero differences.
WILCOXON_EXACT_CUTOFF = 25


def regularization_fraction(regular: float, irregular: float) -> float:
    """regular / (regular + irregular); requires a positive denominator."""
    if regular < 0 or irregular < 0:
        raise ValueError("weights must be nonnegative")
    total = regular + irregular
    if total <= 0:
        raise ValueError("zero total weight: fraction undefined")
    return regular / total


def classify(fraction: float) -> str:
    """"regular" iff the fraction exceeds 0.5; exactly 0.5 is irregular."""
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"fraction {fraction!r} outside [0, 1]")
    return REGULAR if fraction > 0.5 else IRREGULAR


@dataclass
class RegularizationTable:
    """Per-verb fractions plus their unweighted average for one scope."""

    scope_id: str
    fractions: dict[str, float] = field(default_factory=dict)
    weights: dict[str, tuple[float, float]] = field(default_factory=dict)
    average: Optional[float] = None

    @property
    def verb_count(self) -> int:
        return len(self.fractions)

    def lemmas(self) -> list[str]:
        return sorted(self.fractions)


def build_table(counts: PastTenseCounts | Mapping[str, tuple[float, float]],
                verbs: Optional[Iterable[str]] = None,
                scope_id: Optional[str] = None) -> RegularizationTable:
    """Fractions for every lemma with nonzero total weight, plus the average.

    `verbs` restricts the table to a lemma subset (e.g. the -t verbs).  An
    empty table is allowed; its average is None.
    """
    if isinstance(counts, PastTenseCounts):
        items = counts.items()
        scope_id = counts.scope_id if scope_id is None else scope_id
    else:
        items = sorted(counts.items())
        scope_id = "" if scope_id is None else scope_id
    allowed = None if verbs is None else set(verbs)

    table = RegularizationTable(scope_id=scope_id)
    for lemma, (reg, irr) in items:
        if allowed is not None and lemma not in allowed:
            continue
        if reg + irr <= 0:
            continue
        table.weights[lemma] = (reg, irr)
        table.fractions[lemma] = regularization_fraction(reg, irr)
    if table.fractions:
        table.average = sum(table.fractions.values()) / len(table.fractions)
    return table


def write_table_csv(table: RegularizationTable, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["lemma", "regular", "irregular", "fraction"])
        for lemma in table.lemmas():
            reg, irr = table.weights[lemma]
            writer.writerow([lemma, repr(reg), repr(irr),
                             repr(table.fractions[lemma])])


def read_table_csv(path: str | Path,
                   scope_id: Optional[str] = None) -> RegularizationTable:
    weights: dict[str, tuple[float, float]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        expected = ["lemma", "regular", "irregular", "fraction"]
        if reader.fieldnames != expected:
            raise ValueError(f"{path}: expected header {','.join(expected)}")
        for row in reader:
            weights[row["lemma"]] = (float(row["regular"]),
                                     float(row["irregular"]))
    name = scope_id if scope_id is not None else Path(path).stem
    return build_table(weights, scope_id=name)


def table_to_json(table: RegularizationTable) -> dict:
    return {
        "scope_id": table.scope_id,
        "average": table.average,
        "verb_count": table.verb_count,
        "verbs": {
            lemma: {"regular": table.weights[lemma][0],
                    "irregular": table.weights[lemma][1],
                    "fraction": table.fractions[lemma]}
            for lemma in table.lemmas()
        },
    }


@dataclass
class DifferenceTable:
    """Per-lemma fraction differences (a - b) over the shared lemma set."""

    differences: dict[str, float]
    average: float

    @property
    def verb_count(self) -> int:
        return len(self.differences)


def difference_table(a: RegularizationTable,
                     b: RegularizationTable) -> DifferenceTable:
    shared = sorted(set(a.fractions) & set(b.fractions))
    if not shared:
        raise ValueError("no lemmas shared between the two tables")
    diffs = {lemma: a.fractions[lemma] - b.fractions[lemma] for lemma in shared}
    return DifferenceTable(diffs, sum(diffs.values()) / len(diffs))


@dataclass
class PairedTestResult:
    n_pairs: int
    statistic: float          # W+: rank sum of pairs where x > y
    p_value: float
    n_greater_first: int
    n_greater_second: int

    def as_dict(self) -> dict:
        return {"n_pairs": self.n_pairs, "statistic": self.statistic,
                "p_value": self.p_value,
                "n_greater_first": self.n_greater_first,
                "n_greater_second": self.n_greater_second}


def _exact_wilcoxon_p(ranks2: Sequence[int], w2: int) -> float:
    # Distribution of the doubled positive-rank sum over all 2^n equally
    # likely sign assignments, built by the subset-sum recurrence.  Ranks are
    # doubled so tied mean ranks (multiples of 0.5) stay integral.
    total = sum(ranks2)
    counts = [0] * (total + 1)
    counts[0] = 1
    for r in ranks2:
        for s in range(total, r - 1, -1):
            counts[s] += counts[s - r]
    n_patterns = 1 << len(ranks2)
    p_le = sum(counts[: w2 + 1]) / n_patterns
    p_ge = sum(counts[w2:]) / n_patterns
    return min(1.0, 2.0 * min(p_le, p_ge))


def wilcoxon_signed_rank(pairs: Sequence[tuple[float, float]],
                         exact_cutoff: int = WILCOXON_EXACT_CUTOFF,
                         ) -> PairedTestResult:
    """Two-sided Wilcoxon signed rank test on (x, y) pairs.

    Zero differences are dropped; tied absolute differences get mean ranks.
    The p-value is exact (all sign assignments) when the number of nonzero
    differences is at most `exact_cutoff`, else a normal approximation with
    tie and continuity corrections.
    """
    diffs = [float(x) - float(y) for x, y in pairs]
    nonzero = [d for d in diffs if d != 0.0]
    if not nonzero:
        raise ValueError("all differences are zero")
    n = len(nonzero)
    ranks = _rankdata([abs(d) for d in nonzero])
    w_plus = float(sum(r for r, d in zip(ranks, nonzero) if d > 0))
    n_pos = sum(1 for d in nonzero if d > 0)
    n_neg = n - n_pos

    if n <= exact_cutoff:
        ranks2 = [int(round(2 * r)) for r in ranks]
        p = _exact_wilcoxon_p(ranks2, int(round(2 * w_plus)))
    else:
        mu = n * (n + 1) / 4.0
        tie_sizes = np.unique(ranks, return_counts=True)[1]
        sigma2 = (n * (n + 1) * (2 * n + 1) / 24.0
                  - float(np.sum(tie_sizes ** 3 - tie_sizes)) / 48.0)
        correction = 0.5 * math.copysign(1.0, w_plus - mu) if w_plus != mu else 0.0
        z = (w_plus - mu - correction) / math.sqrt(sigma2)
        p = min(1.0, 2.0 * float(_norm.sf(abs(z))))

    return PairedTestResult(n_pairs=len(pairs), statistic=w_plus, p_value=p,
                            n_greater_first=n_pos, n_greater_second=n_neg)


def pearson(x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    """Product-moment correlation with a two-sided t-distribution p-value."""
    xa = np.asarray(x, dtype=float)
    ya = np.asarray(y, dtype=float)
    if xa.shape != ya.shape or xa.ndim != 1:
        raise ValueError("inputs must be equal-length vectors")
    n = xa.size
    if n < 3:
        raise ValueError("need at least 3 observations")
    xd = xa - xa.mean()
    yd = ya - ya.mean()
    denom = math.sqrt(float(xd @ xd) * float(yd @ yd))
    if denom == 0.0:
        raise ValueError("correlation undefined for a constant vector")
    r = float(xd @ yd) / denom
    r = max(-1.0, min(1.0, r))
    if abs(r) == 1.0:
        return r, 0.0
    t_stat = r * math.sqrt((n - 2) / (1.0 - r * r))
    p = 2.0 * float(_t.sf(abs(t_stat), n - 2))
    return r, min(1.0, p)


def spearman(x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    """Pearson correlation of mean-fractional ranks; p from the t approximation."""
    if len(x) != len(y):
        raise ValueError("inputs must be equal-length vectors")
    return pearson(_rankdata(np.asarray(x, dtype=float)),
                   _rankdata(np.asarray(y, dtype=float)))


@dataclass
class FrequencyBin:
    """One frequency band with its member lemmas.

    `lower` is inclusive; `upper` is inclusive only for the top band.
    """

    label: str
    lower: float
    upper: float
    upper_inclusive: bool
    lemmas: list[str]


_BIN_EDGES = [("high", 1e6, 1e8, True),
              ("mid", 1e4, 1e6, False),
              ("low", 1e2, 1e4, False)]


def bin_verbs(pool_counts: PastTenseCounts | Mapping[str, tuple[float, float]],
              lexicon=None) -> list[FrequencyBin]:
    """Partition lemmas into high/mid/low bands by total past-tense tokens.

    Lemmas with totals outside [1e2, 1e8] stay unbinned.  `lexicon`, when
    given, restricts binning to its lemmas.
    """
    if isinstance(pool_counts, PastTenseCounts):
        items = dict(pool_counts.items())
    else:
        items = dict(pool_counts)
    if lexicon is not None:
        known = set(lexicon.lemmas())
        items = {k: v for k, v in items.items() if k in known}
    bins = []
    for label, lower, upper, upper_inclusive in _BIN_EDGES:
        members = [lemma for lemma, (reg, irr) in sorted(items.items())
                   if lower <= reg + irr and
                   (reg + irr <= upper if upper_inclusive else reg + irr < upper)]
        bins.append(FrequencyBin(label, lower, upper, upper_inclusive, members))
    return bins


def comparison_report(a: RegularizationTable, b: RegularizationTable) -> dict:
    """Scatter data and paired tests for two tables over their shared lemmas.

    Used by the compare command; the Wilcoxon all-ties failure is reported in
    place rather than raised, since identical tables are a legitimate input.
    """
    shared = sorted(set(a.fractions) & set(b.fractions))
    if not shared:
        raise ValueError("no lemmas shared between the two tables")
    fa = [a.fractions[lemma] for lemma in shared]
    fb = [b.fractions[lemma] for lemma in shared]
    report: dict = {
        "scope_a": a.scope_id,
        "scope_b": b.scope_id,
        "n_common": len(shared),
        "n_more_regular_a": sum(1 for x, y in zip(fa, fb) if x > y),
        "n_more_regular_b": sum(1 for x, y in zip(fa, fb) if y > x),
        "average_a": sum(fa) / len(fa),
        "average_b": sum(fb) / len(fb),
        "scatter": [{"lemma": lemma, "fraction_a": x, "fraction_b": y}
                    for lemma, x, y in zip(shared, fa, fb)],
    }
    diff = difference_table(a, b)
    report["difference"] = {"average": diff.average,
                            "per_lemma": diff.differences}
    try:
        report["wilcoxon"] = wilcoxon_signed_rank(list(zip(fa, fb))).as_dict()
    except ValueError as exc:
        report["wilcoxon"] = {"error": str(exc)}
    try:
        rho, p = spearman(fa, fb)
        report["spearman"] = {"rho": rho, "p_value": p}
    except ValueError as exc:
        report["spearman"] = {"error": str(exc)}
    return report


def write_json(obj: dict, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
