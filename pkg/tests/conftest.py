from pathlib import Path

import pytest

from hoodclaims import corpus, gazetteer

TESTS = Path(__file__).parent


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return TESTS / "data" / "synthcity"


@pytest.fixture(scope="session")
def golden_dir() -> Path:
    return TESTS / "golden" / "synthcity"


@pytest.fixture(scope="session")
def city_gazetteer(data_dir):
    return gazetteer.load_gazetteer(data_dir / "gazetteer.tsv")


@pytest.fixture(scope="session")
def city_table(data_dir, city_gazetteer):
    return gazetteer.load_normalization_table(data_dir / "normalization.tsv", city_gazetteer)


@pytest.fixture(scope="session")
def city_corpus(data_dir):
    """The 50 deduplicated, cleaned synthetic-city listings."""
    result = corpus.ingest(data_dir / "listings.jsonl")
    cleaned = corpus.clean_corpus(result.listings, corpus.load_cleaning_rules())
    kept, _ = corpus.deduplicate(cleaned)
    return kept


@pytest.fixture(scope="session")
def default_gazetteer():
    return gazetteer.load_default_gazetteer()


@pytest.fixture(scope="session")
def default_table(default_gazetteer):
    return gazetteer.load_default_normalization(default_gazetteer)
