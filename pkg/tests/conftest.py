from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from hdrsafe import parse_file

CORPUS = Path(__file__).resolve().parent.parent / "src" / "hdrsafe" / "corpus"

settings.register_profile("default", max_examples=200, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def corpus():
    return CORPUS


@pytest.fixture
def load():
    def _load(name):
        return parse_file(CORPUS / f"{name}.sp4")
    return _load
