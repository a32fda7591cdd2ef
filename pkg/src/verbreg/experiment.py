"""Confound analyses: synthetic-county sampling and demographic partial
correlations.

Small counties produce biased average fractions purely through sampling, so
the synthetic experiment redraws counties of controlled size from the pooled
corpus to expose that trend.  Demographic correlations are residualized
against log10 data volume on both sides before correlating, which strips the
shared population signal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .ingest import PastTenseCounts
from .spatial import CountyPanel, fit_log_volume
from .stats import pearson

ESTIMATE = "Estimate"
PERCENT = "Percent"

DEFAULT_SYNTH_SIZE_RANGE = (10, 10_000_000)
DEFAULT_SYNTH_SIZES = 1000
DEFAULT_SYNTH_REPLICATES = 5


@dataclass
class TokenPool:
    """All (lemma, class) counts pooled over a corpus."""

    counts: dict[str, tuple[int, int]]
    total_tokens: int


def build_pool(counts: PastTenseCounts | Iterable[PastTenseCounts],
               ) -> TokenPool:
    """Aggregate one or many scopes, preserving per-(lemma, class) totals."""
    if isinstance(counts, PastTenseCounts):
        counts = [counts]
    pooled: dict[str, list[int]] = {}
    for scope_counts in counts:
        for lemma, (reg, irr) in scope_counts.items():
            pair = pooled.setdefault(lemma, [0, 0])
            pair[0] += reg
            pair[1] += irr
    total = sum(r + i for r, i in pooled.values())
    if total == 0:
        raise ValueError("pool has no tokens")
    return TokenPool(counts={k: (v[0], v[1]) for k, v in pooled.items()},
                     total_tokens=total)


@dataclass
class SyntheticCounty:
    """One multinomial redraw of a county worth of tokens from the pool."""

    target_size: int
    replicate: int
    counts: dict[str, tuple[int, int]]
    average_fraction: float


def log_spaced_sizes(lo: int = DEFAULT_SYNTH_SIZE_RANGE[0],
                     hi: int = DEFAULT_SYNTH_SIZE_RANGE[1],
                     n: int = DEFAULT_SYNTH_SIZES) -> list[int]:
    """n logarithmically spaced integer sizes from lo to hi inclusive."""
    if lo < 1 or hi < lo or n < 1:
        raise ValueError("need 1 <= lo <= hi and n >= 1")
    if n == 1:
        return [lo]
    return [int(round(v)) for v in np.geomspace(lo, hi, n)]


def _pool_average(counts: Mapping[str, tuple[float, float]]) -> float:
    fractions = [reg / (reg + irr) for reg, irr in counts.values()
                 if reg + irr > 0]
    if not fractions:
        raise ValueError("no lemma has tokens")
    return sum(fractions) / len(fractions)


def sample_synthetic(pool: TokenPool, sizes: Sequence[int],
                     replicates: int = DEFAULT_SYNTH_REPLICATES,
                     seed: int = 0) -> list[SyntheticCounty]:
    """Draw `replicates` multinomial counties at each target size.

    Sampling is with replacement from the pool's (lemma, class) proportions.
    Each size index derives its own generator from (seed, index), so results
    are reproducible regardless of execution order or worker count.  The
    average fraction uses the same rules as scope tables: lemmas whose drawn
    denominator is zero are excluded.
    """
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    lemmas = sorted(pool.counts)
    flat = []
    for lemma in lemmas:
        reg, irr = pool.counts[lemma]
        flat.extend([reg, irr])
    probs = np.asarray(flat, dtype=float)
    probs /= probs.sum()

    out: list[SyntheticCounty] = []
    for index, size in enumerate(sizes):
        if size < 1:
            raise ValueError("synthetic county sizes must be >= 1")
        rng = np.random.default_rng(np.random.SeedSequence((seed, index)))
        for replicate in range(replicates):
            draw = rng.multinomial(int(size), probs)
            counts = {}
            for k, lemma in enumerate(lemmas):
                reg, irr = int(draw[2 * k]), int(draw[2 * k + 1])
                if reg or irr:
                    counts[lemma] = (reg, irr)
            out.append(SyntheticCounty(
                target_size=int(size), replicate=replicate, counts=counts,
                average_fraction=_pool_average(counts)))
    return out


def pool_average_fraction(pool: TokenPool) -> float:
    """The pool's own average of per-lemma fractions (the convergence target)."""
    return _pool_average(pool.counts)


@dataclass
class DemographicVariable:
    """One census column: people counts (Estimate) or percentages (Percent)."""

    id: str
    kind: str
    values: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in (ESTIMATE, PERCENT):
            raise ValueError(f"{self.id}: kind must be Estimate or Percent")


def load_acs_csv(path: str | Path,
                 fips_column: str = "GEO.id2") -> list[DemographicVariable]:
    """Read a wide census CSV: one row per county, one column per variable.

    Variable kind is inferred from the column-name prefix ("Estimate; ..." or
    "Percent; ..."); other columns are ignored.  Blank cells are skipped.
    """
    import csv

    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or fips_column not in reader.fieldnames:
            raise ValueError(f"{path}: missing fips column {fips_column!r}")
        wanted = {}
        for name in reader.fieldnames:
            prefix = name.split(";", 1)[0].strip()
            if prefix in (ESTIMATE, PERCENT):
                wanted[name] = prefix
        variables = {name: DemographicVariable(id=name, kind=kind)
                     for name, kind in wanted.items()}
        for row in reader:
            fips = (row.get(fips_column) or "").strip().zfill(5)
            if not fips or fips == "00000":
                continue
            for name in wanted:
                cell = (row.get(name) or "").strip()
                if not cell:
                    continue
                try:
                    value = float(cell.replace(",", ""))
                except ValueError:
                    continue
                variables[name].values[fips] = value
    return [variables[name] for name in sorted(variables)]


def residualize_demographic(variable: DemographicVariable,
                            d_by_county: Mapping[str, float],
                            ) -> dict[str, float]:
    """Residuals of the (transformed) demographic after removing log-volume.

    Estimate variables are log10-transformed first, and zero-valued counties
    are dropped so the log exists; Percent variables are used raw.
    """
    usable = usable_counties(variable, d_by_county)
    if len(usable) < 3:
        raise ValueError(f"{variable.id}: fewer than 3 usable counties")
    x = transformed_values(variable, usable)
    d = [d_by_county[f] for f in usable]
    fit = fit_log_volume(d, x)
    return {f: xi - (fit.intercept + fit.slope * math.log10(di))
            for f, xi, di in zip(usable, x, d)}


def usable_counties(variable: DemographicVariable,
                    d_by_county: Mapping[str, float]) -> list[str]:
    usable = []
    for fips in sorted(set(variable.values) & set(d_by_county)):
        value = variable.values[fips]
        if not math.isfinite(value):
            continue
        if variable.kind == ESTIMATE and value <= 0:
            continue
        usable.append(fips)
    return usable


def transformed_values(variable: DemographicVariable,
                       fips_order: Sequence[str]) -> list[float]:
    if variable.kind == ESTIMATE:
        return [math.log10(variable.values[f]) for f in fips_order]
    return [variable.values[f] for f in fips_order]


def partial_correlation(r_reg: Sequence[float],
                        r_dem: Sequence[float]) -> tuple[float, float]:
    """Pearson correlation of the two residual vectors."""
    return pearson(r_reg, r_dem)


@dataclass
class RankedVariable:
    id: str
    kind: str
    n: int
    simple_r: Optional[float] = None
    simple_p: Optional[float] = None
    partial_r: Optional[float] = None
    partial_p: Optional[float] = None
    error: Optional[str] = None


def _rank_one(variable: DemographicVariable, rows,
              d_by_county: Mapping[str, float]) -> RankedVariable:
    usable = usable_counties(variable, d_by_county)
    ranked = RankedVariable(id=variable.id, kind=variable.kind, n=len(usable))
    if len(usable) < 3:
        ranked.error = "fewer than 3 usable counties"
        return ranked
    x = transformed_values(variable, usable)
    fractions = [rows[f].avg_fraction for f in usable]
    residuals = [rows[f].residual for f in usable]
    try:
        ranked.simple_r, ranked.simple_p = pearson(x, fractions)
        r_dem = residualize_demographic(variable, d_by_county)
        ranked.partial_r, ranked.partial_p = partial_correlation(
            residuals, [r_dem[f] for f in usable])
    except ValueError as exc:
        ranked.error = str(exc)
    return ranked


def rank_variables(variables: Iterable[DemographicVariable],
                   panel: CountyPanel, workers: int = 1
                   ) -> list[RankedVariable]:
    """Simple and partial correlations per variable, ranked by |partial|.

    Simple correlation pairs the transformed demographic with the county
    average fraction; partial correlation pairs the residuals of both after
    removing log10 volume.  Variables failing preconditions (too few
    counties, constant vectors, volume-determined demographics) are kept in
    the output with the failure reason instead of being dropped.

    Variables are independent, so `workers` > 1 evaluates them in a thread
    pool; results are collected in input order, keeping output deterministic.
    """
    rows = {row.fips: row for row in panel.rows}
    d_by_county = {fips: float(row.tokens) for fips, row in rows.items()}
    variables = list(variables)
    if workers > 1 and len(variables) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(
                lambda v: _rank_one(v, rows, d_by_county), variables))
    else:
        results = [_rank_one(v, rows, d_by_county) for v in variables]

    ok = [r for r in results if r.error is None]
    failed = [r for r in results if r.error is not None]
    ok.sort(key=lambda r: (-abs(r.partial_r), r.id))
    failed.sort(key=lambda r: r.id)
    return ok + failed


def write_partials_csv(ranked: Sequence[RankedVariable], path) -> None:
    import csv

    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["variable", "kind", "simple_r", "partial_r", "n"])
        for r in ranked:
            writer.writerow([
                r.id, r.kind,
                "" if r.simple_r is None else repr(r.simple_r),
                "" if r.partial_r is None else repr(r.partial_r),
                r.n,
            ])


def write_synthetic_csv(synths: Sequence[SyntheticCounty], path) -> None:
    import csv

    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["size", "replicate", "avg_fraction"])
        for synth in synths:
            writer.writerow([synth.target_size, synth.replicate,
                             repr(synth.average_fraction)])
