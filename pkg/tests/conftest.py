from __future__ import annotations

import pytest

from ispgen import fixture_corpus, fixture_stubs
from ispgen.frontend import extract_api_model, scan, select_methods
from ispgen.llm_gateway import GatewayConfig, LLMGateway, StubResponses

POW = "apfloat.apcomplex_math::pow"
MOD_POW = "modmath.double_mod_math.DoubleModMath::mod_pow"


@pytest.fixture(scope="session")
def corpus():
    return fixture_corpus()


@pytest.fixture(scope="session")
def stubs_path():
    return fixture_stubs()


@pytest.fixture(scope="session")
def model(corpus):
    return extract_api_model(corpus)


@pytest.fixture(scope="session")
def library(corpus):
    return scan(corpus)


@pytest.fixture(scope="session")
def selection(model):
    return select_methods(model)


@pytest.fixture
def stub_gateway(stubs_path):
    return LLMGateway(GatewayConfig(mode="stub"), stub=StubResponses.load(stubs_path))


class CountingTransport:
    """Transport that fails the test if anything tries the network."""

    def __init__(self):
        self.requests = 0

    def post_json(self, url, payload, headers, timeout):
        self.requests += 1
        raise AssertionError("network access in an offline test")


# criterion number -> (title, passed); filled by the acceptance suite
ACCEPTANCE: dict[int, tuple[str, bool]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, passed = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {title}")
