import os
import time

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from holopart.engine import PathConfig, PathEnsemble

settings.register_profile(
    "holopart",
    max_examples=25,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "holopart"))


@pytest.fixture(autouse=True)
def _single_worker(monkeypatch):
    """Tests run in-process unless they set the worker count themselves."""
    monkeypatch.setenv("HOLOPART_WORKERS", "1")


@pytest.fixture(scope="session")
def small_ensemble():
    return PathEnsemble(PathConfig(seed=11), 6000)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(1234)


# -- acceptance reporting ---------------------------------------------------------------

_SESSION_START = time.perf_counter()
_CRITERIA: dict = {}


def pytest_collection_modifyitems(session, config, items):
    """Acceptance criteria run last, so the whole-suite budget covers every other test."""
    items.sort(key=lambda it: "test_acceptance.py" in it.nodeid)


def session_elapsed() -> float:
    return time.perf_counter() - _SESSION_START


@pytest.fixture
def criterion(request):
    """Record a one-line summary for an acceptance criterion: ``criterion(k, text)``."""

    def record(k: int, text: str) -> None:
        _CRITERIA[request.node.nodeid] = (k, text)

    return record


def pytest_runtest_logreport(report):
    if report.when == "call" and report.nodeid in _CRITERIA:
        k, text = _CRITERIA[report.nodeid]
        _CRITERIA[report.nodeid] = (k, text, "PASS" if report.passed else "FAIL")


def pytest_terminal_summary(terminalreporter):
    rows = sorted((v for v in _CRITERIA.values() if len(v) == 3), key=lambda v: v[0])
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for k, text, verdict in rows:
        terminalreporter.write_line(f"{verdict} criterion {k:2d}: {text}")
