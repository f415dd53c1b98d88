import pytest
from hypothesis import HealthCheck, settings

from simplex_rss import ScenarioConstants

settings.register_profile(
    "repo", deadline=None, derandomize=True, max_examples=200,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")


@pytest.fixture
def consts():
    return ScenarioConstants()


@pytest.fixture
def fconsts():
    return ScenarioConstants(arith="float")

