# tests/conftest.py
import pytest

from src.common import config
from src.setsys.incidence import build_incidence

# 1-based Steiner triples of the Fano plane (translates of {1,2,4} mod 7)
FANO_1B = [(1, 2, 4), (2, 3, 5), (3, 4, 6), (4, 5, 7), (5, 6, 1), (6, 7, 2), (7, 1, 3)]
FANO = [tuple(sorted(x - 1 for x in b)) for b in FANO_1B]

# the three perfect matchings of K4, 0-based
K4_MATCHINGS = [
    ((0, 1), (2, 3)),
    ((0, 2), (1, 3)),
    ((0, 3), (1, 2)),
]


@pytest.fixture(autouse=True)
def _log_to_tmp(tmp_path, monkeypatch):
    monkeypatch.setattr(config, "LOG_FILE", tmp_path / "largesets.log")
    monkeypatch.setattr(config, "QUIET", True)


@pytest.fixture(scope="session")
def k4():
    return build_incidence(4, 2, 1)


@pytest.fixture(scope="session")
def fano_system():
    return build_incidence(7, 3, 2)


@pytest.fixture(scope="session")
def sys932():
    return build_incidence(9, 3, 2)
