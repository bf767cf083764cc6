from __future__ import annotations

from pathlib import Path

import pytest

from medlex.defaults import (
    default_function_words,
    default_keyword_table,
    default_stops,
    default_suffix_table,
)
from medlex.pipeline import attach_tokens, map_dictionary, read_dictionary, resolve_synonyms
from medlex.textprep import ingest_conllu

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA


@pytest.fixture(scope="session")
def suffixes():
    return default_suffix_table()


@pytest.fixture(scope="session")
def keywords():
    return default_keyword_table()


@pytest.fixture(scope="session")
def stops():
    return default_stops()


@pytest.fixture(scope="session")
def function_words():
    return default_function_words()


def load_fixture_entries(conllu: bool = True):
    entries = read_dictionary(DATA / "dict_50.tsv")
    tokens = None
    if conllu:
        with open(DATA / "dict_50.conllu", encoding="utf-8") as fh:
            tokens = ingest_conllu(fh, id_map={e.id: e.id for e in entries})
    entries, _ = attach_tokens(entries, tokens, default_function_words())
    return resolve_synonyms(entries)


@pytest.fixture(scope="session")
def fixture_entries():
    return load_fixture_entries()


@pytest.fixture(scope="session")
def fixture_outcomes(fixture_entries, suffixes, keywords, stops):
    return map_dictionary(fixture_entries, suffixes, keywords, stops, iter_rounds=1)
