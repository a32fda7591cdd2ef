import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from verbreg import (
    Record,
    fuzzy_match,
    latlon_to_county,
    levenshtein,
    load_counties,
    load_gazetteer,
    make_scoper,
    parse_city_state,
    point_in_region,
    resolve_scope,
    similarity,
)


class TestLevenshtein:
    # hand oracle values
    @pytest.mark.parametrize("a,b,expected", [
        ("", "", 0),
        ("abc", "", 3),
        ("kitten", "sitting", 3),
        ("burlingtn", "burlington", 1),
        ("flaw", "lawn", 2),
        ("abc", "abc", 0),
    ])
    def test_known_distances(self, a, b, expected):
        assert levenshtein(a, b) == expected
        assert levenshtein(b, a) == expected

    def test_similarity_scale(self):
        assert similarity("burlington", "burlington") == 100
        # 1 edit over max length 10 -> 90, below the default threshold of 91
        assert similarity("burlingtn", "burlington") == 90
        assert similarity("", "") == 100


class TestParseCityState:
    def test_two_tokens(self):
        assert parse_city_state("Burlington, VT") == ("burlington", "vt")

    def test_no_comma(self):
        assert parse_city_state("just chillin") is None

    def test_three_tokens(self):
        assert parse_city_state("Queens, New York, USA") is None

    def test_empty_sides(self):
        assert parse_city_state(", VT") is None
        assert parse_city_state("Burlington, ") is None


class TestFuzzyMatch:
    def test_exact_match(self, gazetteer):
        entry = fuzzy_match(gazetteer, "burlington", "vt", 91)
        assert entry is not None and entry.county_fips == "50007"

    def test_near_miss_below_threshold(self, gazetteer):
        # similarity 90 < 91: strict threshold rejects the near-misspelling
        assert fuzzy_match(gazetteer, "burlingtn", "vt", 91) is None
        assert fuzzy_match(gazetteer, "burlingtn", "vt", 90) is not None

    def test_unknown_state(self, gazetteer):
        assert fuzzy_match(gazetteer, "burlington", "zz", 91) is None

    def test_full_state_name_matches(self, gazetteer):
        entry = fuzzy_match(gazetteer, "burlington", "Vermont", 91)
        assert entry is not None and entry.county_fips == "50007"

    def test_state_is_exact_not_fuzzy(self, gazetteer):
        assert fuzzy_match(gazetteer, "burlington", "vermnt", 50) is None

    def test_case_folding(self, gazetteer):
        entry = fuzzy_match(gazetteer, "BURLINGTON", "VT", 91)
        assert entry is not None and entry.county_fips == "50007"

    def test_score_tie_breaks_by_population(self, gazetteer):
        # two greenville, ca entries; the 5000-population one wins
        entry = fuzzy_match(gazetteer, "greenville", "ca", 91)
        assert entry is not None and entry.county_fips == "06019"

    def test_threshold_100_needs_exact_city(self, gazetteer):
        assert fuzzy_match(gazetteer, "burlington", "vt", 100) is not None
        assert fuzzy_match(gazetteer, "burlingto", "vt", 100) is None

    def test_bad_threshold_rejected(self, gazetteer):
        with pytest.raises(ValueError):
            fuzzy_match(gazetteer, "burlington", "vt", 101)

    @given(city=st.sampled_from(["burlington", "burlingtn", "burlingtonn", "x"]),
           t1=st.integers(0, 100), t2=st.integers(0, 100))
    @settings(max_examples=60, deadline=None)
    def test_raising_threshold_is_monotone(self, gazetteer, city, t1, t2):
        lo, hi = min(t1, t2), max(t1, t2)
        if fuzzy_match(gazetteer, city, "vt", lo) is None:
            assert fuzzy_match(gazetteer, city, "vt", hi) is None


class TestCountyLookup:
    def test_bbox_center_resolves_to_own_county(self, counties):
        for fips in ("50007", "10001", "17167"):
            lat, lon = counties[fips].bbox_center
            assert latlon_to_county(counties, lat, lon) == fips

    def test_ocean_point(self, counties):
        assert latlon_to_county(counties, 0.0, -40.0) is None

    def test_shared_border_resolves_to_lowest_fips(self, counties):
        # lat 39.5 is the 10001/10003 boundary
        assert counties["10001"].contains(39.5, -75.5)
        assert counties["10003"].contains(39.5, -75.5)
        assert latlon_to_county(counties, 39.5, -75.5) == "10001"

    def test_multipolygon_island(self, counties):
        assert latlon_to_county(counties, 43.0, -79.4) == "36029"
        assert latlon_to_county(counties, 42.8864, -78.8784) == "36029"

    def test_bad_fips_rejected(self, tmp_path):
        path = tmp_path / "bad.geojson"
        path.write_text('{"type": "FeatureCollection", "features": ['
                        '{"type": "Feature", "properties": {"fips": "123"},'
                        '"geometry": {"type": "Polygon", "coordinates":'
                        '[[[0,0],[1,0],[1,1],[0,1],[0,0]]]}}]}')
        with pytest.raises(ValueError, match="fips"):
            load_counties(path)

    def test_duplicate_fips_rejected(self, tmp_path):
        feature = ('{"type": "Feature", "properties": {"fips": "10001"},'
                   '"geometry": {"type": "Polygon", "coordinates":'
                   '[[[0,0],[1,0],[1,1],[0,1],[0,0]]]}}')
        path = tmp_path / "dup.geojson"
        path.write_text('{"type": "FeatureCollection", "features": ['
                        + feature + "," + feature + "]}")
        with pytest.raises(ValueError, match="duplicate"):
            load_counties(path)


class TestRegions:
    def test_us_point(self, regions):
        assert point_in_region(regions, 44.5, -73.2) == "US"

    def test_uk_point(self, regions):
        assert point_in_region(regions, 51.5, -0.13) == "UK"

    def test_neither(self, regions):
        assert point_in_region(regions, 0.0, 0.0) is None

    def test_shipped_regions_disjoint(self, regions):
        # sample a grid; no point may fall in both shipped regions
        for lat in range(-80, 81, 8):
            for lon in range(-170, 171, 10):
                inside = [name for name in regions.names()
                          if regions.regions[name].contains(lat, lon)]
                assert len(inside) <= 1


class TestResolveScope:
    def test_mode_all(self, regions, gazetteer, counties):
        record = Record(text="x")
        assert resolve_scope(record, regions, gazetteer, counties,
                             mode="all") == "all"

    def test_us_geo_without_geo(self, regions):
        record = Record(text="x", user_location="Burlington, VT")
        assert resolve_scope(record, regions=regions, mode="us_geo") is None

    def test_us_geo(self, regions):
        record = Record(text="x", geo=(44.5, -73.2))
        assert resolve_scope(record, regions=regions, mode="us_geo") == "US"
        assert resolve_scope(record, regions=regions, mode="uk_geo") is None

    def test_uk_geo(self, regions):
        record = Record(text="x", geo=(51.5, -0.13))
        assert resolve_scope(record, regions=regions, mode="uk_geo") == "UK"

    def test_county_pipeline(self, gazetteer, counties):
        record = Record(text="x", user_location="Burlington, VT")
        fips = resolve_scope(record, gazetteer=gazetteer, counties=counties,
                             mode="county")
        assert fips == "50007"

    def test_county_rejects_three_tokens(self, gazetteer, counties):
        record = Record(text="x", user_location="Queens, New York, USA")
        assert resolve_scope(record, gazetteer=gazetteer, counties=counties,
                             mode="county") is None

    def test_county_ignores_geo_coordinates(self, gazetteer, counties):
        # geotag says Albany county, profile text says Burlington: the
        # county route must only read the profile text
        record = Record(text="x", geo=(42.6526, -73.7562),
                        user_location="Burlington, VT")
        assert resolve_scope(record, gazetteer=gazetteer, counties=counties,
                             mode="county") == "50007"

    def test_geo_modes_ignore_user_location(self, regions):
        record = Record(text="x", geo=None, user_location="Burlington, VT")
        assert resolve_scope(record, regions=regions, mode="us_geo") is None

    def test_unknown_mode(self):
        with pytest.raises(ValueError, match="mode"):
            resolve_scope(Record(text="x"), mode="planet")
        with pytest.raises(ValueError, match="mode"):
            make_scoper("planet")


class TestGazetteerLoading:
    def test_bad_header(self, tmp_path):
        path = tmp_path / "gaz.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(ValueError, match="header"):
            load_gazetteer(path)

    def test_bad_fips(self, tmp_path):
        path = tmp_path / "gaz.csv"
        path.write_text("city,state,state_full,lat,lon,county_fips,population\n"
                        "x,vt,vermont,44.0,-73.0,123,10\n")
        with pytest.raises(ValueError, match="fips"):
            load_gazetteer(path)

    def test_bad_coordinates(self, tmp_path):
        path = tmp_path / "gaz.csv"
        path.write_text("city,state,state_full,lat,lon,county_fips,population\n"
                        "x,vt,vermont,95.0,-73.0,50007,10\n")
        with pytest.raises(ValueError, match="range"):
            load_gazetteer(path)
