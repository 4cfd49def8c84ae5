from pathlib import Path

import pytest

from app.analysis import load_mirror_input, mirror_pair_from_input
from app.character_table import build_xi
from app.corpus import generate_corpus, known_pair, stacked_pair
from app.w_graph import build_w

FIXTURES = Path(__file__).resolve().parents[1] / "fixtures"

PAIR_FIXTURES = ["bn51", "bn51-delta", "hexagon-3", "pyramid-r3", "simplex-r3", "hexprism-r3", "stacked-2x"]


def fixture_path(name: str) -> Path:
    return FIXTURES / f"{name}.json"


@pytest.fixture(scope="session")
def fixture_pairs():
    """Mirror pair per committed fixture, built once."""
    return {name: mirror_pair_from_input(load_mirror_input(fixture_path(name))) for name in PAIR_FIXTURES}


@pytest.fixture(scope="session")
def bn51():
    return known_pair("bn51")


@pytest.fixture(scope="session")
def bn51_table(bn51):
    return build_xi(bn51)


@pytest.fixture(scope="session")
def bn51_w(bn51_table):
    return build_w(bn51_table)


@pytest.fixture(scope="session")
def stacked():
    return stacked_pair()


@pytest.fixture(scope="session")
def stacked_w(stacked):
    return build_w(build_xi(stacked))


@pytest.fixture(scope="session")
def hexagon3_w():
    return build_w(build_xi(known_pair("hexagon-3")))


@pytest.fixture(scope="session")
def degenerate_w():
    return build_w(build_xi(mirror_pair_from_input(load_mirror_input(fixture_path("degenerate-singleton")))))


@pytest.fixture(scope="session")
def corpus():
    return generate_corpus()
