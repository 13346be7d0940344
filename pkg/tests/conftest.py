from __future__ import annotations

from pathlib import Path

import pytest

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture(scope="session")
def feed_xml_path() -> Path:
    return DATA_DIR / "feed_sample.xml"


@pytest.fixture(scope="session")
def feed_json_path() -> Path:
    return DATA_DIR / "feed_sample.json"


@pytest.fixture(scope="session")
def malformed_xml_path() -> Path:
    return DATA_DIR / "feed_malformed.xml"


@pytest.fixture(scope="session")
def sample_records(feed_xml_path):
    from iotcve.nvd import read_feed

    records, stats = read_feed(feed_xml_path)
    assert stats.records_skipped == 0
    return records


@pytest.fixture(scope="session")
def synthetic_corpus():
    from synthcorpus import build_synthetic_corpus

    return build_synthetic_corpus(seed=7)
