"""County-level spatial pipeline: volume residuals and Gi* hotspot scores.

Average regularization rises mechanically with a county's data volume (rare
regular verbs only show up in large samples), so county averages are
residualized against log10 volume before spatial analysis.  Local clustering
is scored with the Getis-Ord Gi* statistic over inverse-square-root distance
weights, with inter-county distance floored at 10 miles so no neighbor (or
the county itself) dominates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np
from scipy.stats import norm as _norm

from .geo import County
from .ingest import PastTenseCounts
from .stats import build_table

EARTH_RADIUS_MILES = 3958.7613
MIN_DISTANCE_MILES = 10.0

# Above this many counties the dense n x n weight matrix is skipped and Gi*
# row sums are streamed from the centers directly.
DENSE_MATRIX_LIMIT = 5000

CLUSTER_HIGH = "cluster_high"
CLUSTER_LOW = "cluster_low"
NOT_SIGNIFICANT = "not_significant"

DEFAULT_MIN_TOKENS_COUNTY = 40
DEFAULT_MIN_TOKENS_VERB = 10


@dataclass(frozen=True)
class RegressionFit:
    slope: float
    intercept: float
    n: int


def fit_log_volume(d: Sequence[float], y: Sequence[float]) -> RegressionFit:
    """Ordinary least squares of y on log10(d)."""
    d = np.asarray(d, dtype=float)
    y = np.asarray(y, dtype=float)
    if d.shape != y.shape or d.ndim != 1 or d.size < 2:
        raise ValueError("need two equal-length vectors of at least 2 points")
    if np.any(d <= 0):
        raise ValueError("volumes must be positive to take log10")
    x = np.log10(d)
    xd = x - x.mean()
    sxx = float(xd @ xd)
    if sxx == 0.0:
        raise ValueError("log10 volume is constant; regression undefined")
    slope = float(xd @ (y - y.mean())) / sxx
    intercept = float(y.mean() - slope * x.mean())
    return RegressionFit(slope=slope, intercept=intercept, n=int(d.size))


def residualize(fit: RegressionFit, d_i: float, value: float) -> float:
    """value minus the fit's prediction at log10(d_i)."""
    if d_i <= 0:
        raise ValueError("volume must be positive")
    return value - (fit.intercept + fit.slope * math.log10(d_i))


def great_circle_miles(lat1: float, lon1: float,
                       lat2: float, lon2: float) -> float:
    """Haversine distance on a sphere of mean radius 3958.7613 miles."""
    p1, p2 = math.radians(lat1), math.radians(lat2)
    dp = math.radians(lat2 - lat1)
    dl = math.radians(lon2 - lon1)
    a = math.sin(dp / 2) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dl / 2) ** 2
    return 2.0 * EARTH_RADIUS_MILES * math.asin(min(1.0, math.sqrt(a)))


def distance_matrix(centers: Sequence[tuple[float, float]]) -> np.ndarray:
    """Pairwise great-circle miles, floored at 10 (so the diagonal is 10)."""
    lat = np.radians(np.asarray([c[0] for c in centers], dtype=float))
    lon = np.radians(np.asarray([c[1] for c in centers], dtype=float))
    dp = lat[:, None] - lat[None, :]
    dl = lon[:, None] - lon[None, :]
    a = (np.sin(dp / 2.0) ** 2
         + np.cos(lat)[:, None] * np.cos(lat)[None, :] * np.sin(dl / 2.0) ** 2)
    s = 2.0 * EARTH_RADIUS_MILES * np.arcsin(np.minimum(1.0, np.sqrt(a)))
    return np.maximum(s, MIN_DISTANCE_MILES)


def weight_matrix(s: np.ndarray) -> np.ndarray:
    """Elementwise 1/sqrt(distance); the floor bounds weights by 1/sqrt(10)."""
    s = np.asarray(s, dtype=float)
    if np.any(s < MIN_DISTANCE_MILES):
        raise ValueError(f"distances must be floored at {MIN_DISTANCE_MILES}")
    return 1.0 / np.sqrt(s)


@dataclass
class WeightMatrix:
    """Symmetric positive weights with their companion distance matrix."""

    w: np.ndarray
    s: np.ndarray

    @classmethod
    def from_centers(cls, centers: Sequence[tuple[float, float]]
                     ) -> "WeightMatrix":
        s = distance_matrix(centers)
        return cls(w=weight_matrix(s), s=s)


def gi_star(residuals: Sequence[float],
            weights: WeightMatrix | np.ndarray) -> np.ndarray:
    """Getis-Ord Gi* z-score for every location.

    Sums run over all j including j = i (the distance floor gives the self
    weight 1/sqrt(10)); the spread term is the population standard deviation.
    """
    r = np.asarray(residuals, dtype=float)
    w = weights.w if isinstance(weights, WeightMatrix) else np.asarray(weights, dtype=float)
    n = r.size
    if n < 2:
        raise ValueError("need at least 2 locations")
    if w.shape != (n, n):
        raise ValueError("weight matrix shape does not match residuals")
    rbar = float(r.mean())
    sigma = math.sqrt(max(0.0, float(np.mean(r * r)) - rbar * rbar))
    if sigma == 0.0:
        raise ValueError("residuals are constant; Gi* undefined")
    w_r = w @ r
    w_sum = w.sum(axis=1)
    w_sq = (w * w).sum(axis=1)
    spread = n * w_sq - w_sum ** 2
    if np.any(spread <= 0):
        raise ValueError("degenerate weight rows; Gi* undefined")
    return (w_r - rbar * w_sum) / (sigma * np.sqrt(spread / (n - 1)))


def gi_star_streamed(residuals: Sequence[float],
                     centers: Sequence[tuple[float, float]]) -> np.ndarray:
    """Gi* from centers without materializing the n x n weight matrix.

    Gi* only needs per-row weight sums, so each row of distances is built and
    discarded in turn.  Matches gi_star on a dense matrix exactly.
    """
    r = np.asarray(residuals, dtype=float)
    n = r.size
    if n != len(centers):
        raise ValueError("centers and residuals must align")
    if n < 2:
        raise ValueError("need at least 2 locations")
    rbar = float(r.mean())
    sigma = math.sqrt(max(0.0, float(np.mean(r * r)) - rbar * rbar))
    if sigma == 0.0:
        raise ValueError("residuals are constant; Gi* undefined")
    lat = np.radians(np.asarray([c[0] for c in centers], dtype=float))
    lon = np.radians(np.asarray([c[1] for c in centers], dtype=float))
    z = np.empty(n, dtype=float)
    for i in range(n):
        dp = lat - lat[i]
        dl = lon - lon[i]
        a = (np.sin(dp / 2.0) ** 2
             + math.cos(lat[i]) * np.cos(lat) * np.sin(dl / 2.0) ** 2)
        s_row = np.maximum(2.0 * EARTH_RADIUS_MILES
                           * np.arcsin(np.minimum(1.0, np.sqrt(a))),
                           MIN_DISTANCE_MILES)
        w_row = 1.0 / np.sqrt(s_row)
        w_sum = float(w_row.sum())
        spread = n * float((w_row * w_row).sum()) - w_sum ** 2
        if spread <= 0:
            raise ValueError("degenerate weight row; Gi* undefined")
        z[i] = ((float(w_row @ r) - rbar * w_sum)
                / (sigma * math.sqrt(spread / (n - 1))))
    return z


def significance_threshold(alpha: float, n_tests: int = 1) -> float:
    """Two-tailed |z| cutoff, Bonferroni-divided across n_tests."""
    if n_tests < 1:
        raise ValueError("n_tests must be >= 1")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must be in (0, 1)")
    return float(_norm.ppf(1.0 - alpha / (2.0 * n_tests)))


def significance(z: float, n_tests: int, alpha: float = 0.05
                 ) -> tuple[str, str]:
    """(uncorrected, Bonferroni) cluster labels for a Gi* z-score."""
    labels = []
    for tests in (1, n_tests):
        cutoff = significance_threshold(alpha, tests)
        if z > cutoff:
            labels.append(CLUSTER_HIGH)
        elif z < -cutoff:
            labels.append(CLUSTER_LOW)
        else:
            labels.append(NOT_SIGNIFICANT)
    return labels[0], labels[1]


def combined_significance_label(uncorrected: str, bonferroni: str) -> str:
    if bonferroni != NOT_SIGNIFICANT:
        return f"{bonferroni}_bonferroni"
    return uncorrected


@dataclass
class CountyRow:
    fips: str
    tokens: int
    avg_fraction: float
    residual: Optional[float] = None
    gi_z: Optional[float] = None
    significance: str = ""


@dataclass
class CountyPanel:
    """Qualifying-county rows plus the counties excluded along the way."""

    rows: list[CountyRow] = field(default_factory=list)
    excluded: list[tuple[str, int, str]] = field(default_factory=list)
    fit: Optional[RegressionFit] = None
    alpha: float = 0.05
    min_tokens: int = DEFAULT_MIN_TOKENS_COUNTY

    @property
    def n_tests(self) -> int:
        return len(self.rows)

    def by_fips(self) -> dict[str, CountyRow]:
        return {row.fips: row for row in self.rows}


def _collect_counties(counts_by_county: Mapping[str, PastTenseCounts],
                      min_tokens: int,
                      counties: Optional[Mapping[str, County]],
                      verbs=None, lemma: Optional[str] = None):
    rows: list[CountyRow] = []
    excluded: list[tuple[str, int, str]] = []
    for fips in sorted(counts_by_county):
        counts = counts_by_county[fips]
        if lemma is None:
            tokens = counts.total_tokens()
        else:
            reg, irr = counts.get(lemma)
            tokens = reg + irr
        if tokens < min_tokens:
            excluded.append((fips, tokens, "insufficient data"))
            continue
        if counties is not None and fips not in counties:
            excluded.append((fips, tokens, "no geometry"))
            continue
        if lemma is None:
            table = build_table(counts, verbs=verbs)
            if table.average is None:
                excluded.append((fips, tokens, "no classifiable tokens"))
                continue
            value = table.average
        else:
            reg, irr = counts.get(lemma)
            value = reg / tokens
        rows.append(CountyRow(fips=fips, tokens=tokens, avg_fraction=value))
    return rows, excluded


def _attach_gi(rows: list[CountyRow], values: Sequence[float],
               counties: Mapping[str, County], alpha: float) -> None:
    centers = [counties[row.fips].bbox_center for row in rows]
    if len(rows) <= DENSE_MATRIX_LIMIT:
        z = gi_star(values, WeightMatrix.from_centers(centers))
    else:
        z = gi_star_streamed(values, centers)
    n = len(rows)
    for row, zi in zip(rows, z):
        row.gi_z = float(zi)
        row.significance = combined_significance_label(
            *significance(float(zi), n, alpha))


def county_pipeline(counts_by_county: Mapping[str, PastTenseCounts],
                    counties: Optional[Mapping[str, County]] = None,
                    min_tokens: int = DEFAULT_MIN_TOKENS_COUNTY,
                    alpha: float = 0.05,
                    verbs=None) -> CountyPanel:
    """Volume filter -> average fractions -> log-volume residuals -> Gi*.

    With `counties` omitted the spatial step is skipped (used when only the
    residuals are needed, e.g. for demographic partial correlations).
    """
    rows, excluded = _collect_counties(counts_by_county, min_tokens,
                                       counties, verbs=verbs)
    if len(rows) < 2:
        raise ValueError(f"fewer than 2 counties with at least "
                         f"{min_tokens} tokens")
    fit = fit_log_volume([row.tokens for row in rows],
                         [row.avg_fraction for row in rows])
    for row in rows:
        row.residual = residualize(fit, row.tokens, row.avg_fraction)
    if counties is not None:
        _attach_gi(rows, [row.residual for row in rows], counties, alpha)
    return CountyPanel(rows=rows, excluded=excluded, fit=fit, alpha=alpha,
                       min_tokens=min_tokens)


def verb_pipeline(counts_by_county: Mapping[str, PastTenseCounts],
                  lemma: str,
                  counties: Mapping[str, County],
                  min_tokens: int = DEFAULT_MIN_TOKENS_VERB,
                  alpha: float = 0.05) -> CountyPanel:
    """Per-county fraction for one verb, with Gi* on the raw fractions.

    Single-verb maps skip residualization: the volume skew that motivates it
    comes from averaging verbs of very different frequency, which does not
    apply within one verb.
    """
    rows, excluded = _collect_counties(counts_by_county, min_tokens,
                                       counties, lemma=lemma)
    if len(rows) < 2:
        raise ValueError(f"fewer than 2 counties with at least "
                         f"{min_tokens} tokens of {lemma!r}")
    _attach_gi(rows, [row.avg_fraction for row in rows], counties, alpha)
    return CountyPanel(rows=rows, excluded=excluded, fit=None, alpha=alpha,
                       min_tokens=min_tokens)


def write_panel_csv(panel: CountyPanel, path) -> None:
    """`fips,d,R,residual,gi_z,significance`; excluded counties keep their
    exclusion reason in the significance column with empty value cells."""
    import csv

    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["fips", "d", "R", "residual", "gi_z", "significance"])
        merged = [(row.fips, row) for row in panel.rows]
        merged += [(fips, (fips, tokens, reason))
                   for fips, tokens, reason in panel.excluded]
        for fips, item in sorted(merged, key=lambda kv: kv[0]):
            if isinstance(item, CountyRow):
                writer.writerow([
                    item.fips, item.tokens, repr(item.avg_fraction),
                    "" if item.residual is None else repr(item.residual),
                    "" if item.gi_z is None else repr(item.gi_z),
                    item.significance,
                ])
            else:
                writer.writerow([item[0], item[1], "", "", "", item[2]])


def panel_geojson(panel: CountyPanel, counties: Mapping[str, County]) -> dict:
    """County geometry with panel values joined onto feature properties."""
    features = []
    by_fips = panel.by_fips()
    reasons = {fips: reason for fips, _, reason in panel.excluded}
    for fips in sorted(set(by_fips) | (set(reasons) & set(counties))):
        county = counties.get(fips)
        if county is None:
            continue
        if fips in by_fips:
            row = by_fips[fips]
            props = {"fips": fips, "name": county.name, "d": row.tokens,
                     "R": row.avg_fraction, "residual": row.residual,
                     "gi_z": row.gi_z, "significance": row.significance}
        else:
            props = {"fips": fips, "name": county.name, "d": None, "R": None,
                     "residual": None, "gi_z": None,
                     "significance": reasons[fips]}
        polygons = [[[list(pt) for pt in ring] for ring in rings]
                    for rings in county.polygons]
        geometry = ({"type": "Polygon", "coordinates": polygons[0]}
                    if len(polygons) == 1
                    else {"type": "MultiPolygon", "coordinates": polygons})
        features.append({"type": "Feature", "properties": props,
                         "geometry": geometry})
    return {"type": "FeatureCollection", "features": features}
