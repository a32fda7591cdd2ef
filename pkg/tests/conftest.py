import json
from pathlib import Path

import pytest

from verbreg import load_counties, load_gazetteer, load_lexicon, load_regions

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def lexicon():
    return load_lexicon()


@pytest.fixture(scope="session")
def gazetteer():
    return load_gazetteer(FIXTURES / "gazetteer.csv")


@pytest.fixture(scope="session")
def counties():
    return load_counties(FIXTURES / "counties.geojson")


@pytest.fixture(scope="session")
def regions():
    return load_regions()


@pytest.fixture
def gazetteer_path():
    return FIXTURES / "gazetteer.csv"


@pytest.fixture
def counties_path():
    return FIXTURES / "counties.geojson"


def write_jsonl(path, objects):
    with open(path, "w", encoding="utf-8") as fh:
        for obj in objects:
            fh.write(json.dumps(obj) + "\n")
    return path
