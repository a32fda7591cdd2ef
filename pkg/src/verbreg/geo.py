"""Resolve records to geographic scopes.

Two disjoint routes, mirroring how the datasets are built: geotagged
coordinates are tested against region polygons (US/UK), while free-text
profile locations of the form "city, state" go through fuzzy gazetteer
matching and then a point-in-county lookup.  The two routes never consult
each other's fields.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Callable, Mapping, Optional

from .ingest import Record

_FIPS_RE = re.compile(r"[0-9]{5}$")

DEFAULT_FUZZY_CONFIDENCE = 91


@dataclass(frozen=True)
class GazetteerEntry:
    city: str            # lowercase
    state: str           # two-letter code, lowercase
    state_full: str      # lowercase
    lat: float
    lon: float
    county_fips: str
    population: int = 0


class Gazetteer:
    """City/state lookup table indexed by state code and full state name."""

    def __init__(self, entries):
        self.entries = tuple(entries)
        by_state: dict[str, list[GazetteerEntry]] = {}
        for e in self.entries:
            if not _FIPS_RE.match(e.county_fips):
                raise ValueError(f"bad county fips {e.county_fips!r}")
            if not (-90 <= e.lat <= 90 and -180 <= e.lon <= 180):
                raise ValueError(f"{e.city}: coordinates out of range")
            by_state.setdefault(e.state, []).append(e)
            if e.state_full and e.state_full != e.state:
                by_state.setdefault(e.state_full, []).append(e)
        self._by_state = by_state

    def candidates(self, state: str) -> list[GazetteerEntry]:
        return self._by_state.get(state.casefold(), [])


def load_gazetteer(path: str | Path) -> Gazetteer:
    """Read `city,state,state_full,lat,lon,county_fips,population` CSV."""
    import csv

    entries = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        expected = ["city", "state", "state_full", "lat", "lon",
                    "county_fips", "population"]
        if reader.fieldnames != expected:
            raise ValueError(f"{path}: expected header {','.join(expected)}")
        for row in reader:
            entries.append(GazetteerEntry(
                city=row["city"].strip().casefold(),
                state=row["state"].strip().casefold(),
                state_full=row["state_full"].strip().casefold(),
                lat=float(row["lat"]),
                lon=float(row["lon"]),
                county_fips=row["county_fips"].strip(),
                population=int(row["population"] or 0),
            ))
    return Gazetteer(entries)


def levenshtein(a: str, b: str) -> int:
    """Classic edit distance (insert/delete/substitute, unit costs)."""
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        for j, cb in enumerate(b, start=1):
            cost = 0 if ca == cb else 1
            current.append(min(previous[j] + 1,        # delete
                               current[j - 1] + 1,     # insert
                               previous[j - 1] + cost))  # substitute
        previous = current
    return previous[-1]


def similarity(a: str, b: str) -> int:
    """Edit similarity on a 0-100 scale: round(100 * (1 - lev/maxlen)).

    Rounds half away from zero so threshold comparisons are conventional.
    Empty-vs-empty scores 100.
    """
    if not a and not b:
        return 100
    longest = max(len(a), len(b))
    return int(math.floor(100.0 * (1.0 - levenshtein(a, b) / longest) + 0.5))


def parse_city_state(location_text: str) -> Optional[tuple[str, str]]:
    """Accept only "<city>, <state>": exactly two nonempty comma tokens."""
    parts = [p.strip() for p in location_text.split(",")]
    if len(parts) != 2 or not parts[0] or not parts[1]:
        return None
    return parts[0].casefold(), parts[1].casefold()


def fuzzy_match(gazetteer: Gazetteer, city: str, state: str,
                confidence_threshold: int = DEFAULT_FUZZY_CONFIDENCE,
                ) -> Optional[GazetteerEntry]:
    """Best gazetteer entry whose city similarity clears the threshold.

    The state must match exactly (abbreviation or full name, case-folded);
    only the city is fuzzy.  Score ties break by larger population, then
    lexicographic city name, then fips, so matching is deterministic.
    """
    if not 0 <= confidence_threshold <= 100:
        raise ValueError("confidence threshold must be in [0, 100]")
    city = city.casefold()
    best: Optional[tuple[tuple, GazetteerEntry]] = None
    for entry in gazetteer.candidates(state):
        score = similarity(city, entry.city)
        if score < confidence_threshold:
            continue
        key = (-score, -entry.population, entry.city, entry.county_fips)
        if best is None or key < best[0]:
            best = (key, entry)
    return best[1] if best is not None else None


# --- polygon containment -------------------------------------------------
#
# Geometry is stored as multipolygons: a list of polygons, each a list of
# rings, each ring a list of (lon, lat) pairs (GeoJSON axis order).  A point
# on any ring edge counts as contained, which is what lets the shared-border
# tie rule (lowest fips wins) fire deterministically.

def _on_segment(px, py, ax, ay, bx, by, eps=1e-12) -> bool:
    cross = (bx - ax) * (py - ay) - (by - ay) * (px - ax)
    scale = max(abs(bx - ax), abs(by - ay), 1.0)
    if abs(cross) > eps * scale:
        return False
    return (min(ax, bx) - eps <= px <= max(ax, bx) + eps
            and min(ay, by) - eps <= py <= max(ay, by) + eps)


def _polygon_contains(rings, lat: float, lon: float) -> bool:
    x, y = lon, lat
    inside = False
    for ring in rings:
        n = len(ring)
        for i in range(n):
            ax, ay = ring[i]
            bx, by = ring[(i + 1) % n]
            if _on_segment(x, y, ax, ay, bx, by):
                return True
            # even-odd ray cast toward +x; holes flip parity
            if (ay > y) != (by > y):
                x_cross = ax + (y - ay) * (bx - ax) / (by - ay)
                if x < x_cross:
                    inside = not inside
    return inside


def _shape_contains(polygons, lat: float, lon: float) -> bool:
    return any(_polygon_contains(rings, lat, lon) for rings in polygons)


def _normalize_geometry(geometry) -> list:
    gtype = geometry.get("type")
    coords = geometry.get("coordinates")
    if gtype == "Polygon":
        polygons = [coords]
    elif gtype == "MultiPolygon":
        polygons = coords
    else:
        raise ValueError(f"unsupported geometry type {gtype!r}")
    return [[[(float(x), float(y)) for x, y in ring] for ring in rings]
            for rings in polygons]


def _geometry_bbox(polygons) -> tuple[float, float, float, float]:
    xs = [x for rings in polygons for ring in rings for x, _ in ring]
    ys = [y for rings in polygons for ring in rings for _, y in ring]
    return min(ys), min(xs), max(ys), max(xs)   # (minlat, minlon, maxlat, maxlon)


@dataclass
class County:
    fips: str
    name: str
    polygons: list
    bbox: tuple[float, float, float, float]

    @property
    def bbox_center(self) -> tuple[float, float]:
        minlat, minlon, maxlat, maxlon = self.bbox
        return (minlat + maxlat) / 2.0, (minlon + maxlon) / 2.0

    def contains(self, lat: float, lon: float) -> bool:
        minlat, minlon, maxlat, maxlon = self.bbox
        if not (minlat <= lat <= maxlat and minlon <= lon <= maxlon):
            return False
        return _shape_contains(self.polygons, lat, lon)


def load_counties(path: str | Path) -> dict[str, County]:
    """Read county geometry from a GeoJSON FeatureCollection.

    Each feature needs a 5-digit `fips` property; bounding-box centers are
    precomputed at load.
    """
    with open(path, encoding="utf-8") as fh:
        collection = json.load(fh)
    counties: dict[str, County] = {}
    for feature in collection.get("features", []):
        props = feature.get("properties") or {}
        fips = str(props.get("fips", "")).strip()
        if not _FIPS_RE.match(fips):
            raise ValueError(f"{path}: feature with bad fips {fips!r}")
        if fips in counties:
            raise ValueError(f"{path}: duplicate county fips {fips!r}")
        polygons = _normalize_geometry(feature["geometry"])
        counties[fips] = County(
            fips=fips,
            name=str(props.get("name", "")),
            polygons=polygons,
            bbox=_geometry_bbox(polygons),
        )
    if not counties:
        raise ValueError(f"{path}: no county features")
    return counties


def latlon_to_county(counties: Mapping[str, County],
                     lat: float, lon: float) -> Optional[str]:
    """Fips of the county containing the point; lowest fips wins on borders."""
    for fips in sorted(counties):
        if counties[fips].contains(lat, lon):
            return fips
    return None


@dataclass
class Region:
    name: str
    polygons: list

    def contains(self, lat: float, lon: float) -> bool:
        return _shape_contains(self.polygons, lat, lon)


class RegionSet:
    def __init__(self, regions: Mapping[str, Region]):
        self.regions = dict(regions)

    def names(self) -> list[str]:
        return sorted(self.regions)


def default_regions_path() -> Path:
    return Path(str(resources.files("verbreg").joinpath("data/regions.geojson")))


def load_regions(path: str | Path | None = None) -> RegionSet:
    """Read named region polygons; ``None`` loads the shipped coarse US/UK."""
    path = default_regions_path() if path is None else Path(path)
    with open(path, encoding="utf-8") as fh:
        collection = json.load(fh)
    regions: dict[str, Region] = {}
    for feature in collection.get("features", []):
        name = str((feature.get("properties") or {}).get("name", "")).strip()
        if not name:
            raise ValueError(f"{path}: region feature without a name")
        if name in regions:
            raise ValueError(f"{path}: duplicate region {name!r}")
        regions[name] = Region(name, _normalize_geometry(feature["geometry"]))
    if not regions:
        raise ValueError(f"{path}: no region features")
    return RegionSet(regions)


def point_in_region(regions: RegionSet, lat: float, lon: float,
                    ) -> Optional[str]:
    """Name of the containing region (first in name order), or None."""
    for name in regions.names():
        if regions.regions[name].contains(lat, lon):
            return name
    return None


MODES = ("all", "us_geo", "uk_geo", "county")


def resolve_scope(record: Record,
                  regions: RegionSet | None = None,
                  gazetteer: Gazetteer | None = None,
                  counties: Mapping[str, County] | None = None,
                  mode: str = "all",
                  confidence: int = DEFAULT_FUZZY_CONFIDENCE,
                  ) -> Optional[str]:
    """Map a record to a scope id under the given dataset mode.

    all: constant scope.  us_geo/uk_geo: region test on geotag coordinates
    only.  county: "city, state" profile text only, via fuzzy gazetteer match
    and point-in-county lookup.  The routes never mix fields.
    """
    if mode == "all":
        return "all"
    if mode in ("us_geo", "uk_geo"):
        if record.geo is None or regions is None:
            return None
        want = "US" if mode == "us_geo" else "UK"
        lat, lon = record.geo
        return want if point_in_region(regions, lat, lon) == want else None
    if mode == "county":
        if record.user_location is None or gazetteer is None or counties is None:
            return None
        parsed = parse_city_state(record.user_location)
        if parsed is None:
            return None
        entry = fuzzy_match(gazetteer, parsed[0], parsed[1], confidence)
        if entry is None:
            return None
        return latlon_to_county(counties, entry.lat, entry.lon)
    raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")


def make_scoper(mode: str,
                regions: RegionSet | None = None,
                gazetteer: Gazetteer | None = None,
                counties: Mapping[str, County] | None = None,
                confidence: int = DEFAULT_FUZZY_CONFIDENCE,
                ) -> Callable[[Record], Optional[str]]:
    """Bind resolve_scope parameters into a scoper usable by count_stream."""
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")

    def scoper(record: Record) -> Optional[str]:
        return resolve_scope(record, regions=regions, gazetteer=gazetteer,
                             counties=counties, mode=mode,
                             confidence=confidence)

    return scoper
