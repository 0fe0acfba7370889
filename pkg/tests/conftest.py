import os

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("repo", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")

CRITERIA = {}


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(CRITERIA, key=lambda k: (int("".join(c for c in k if c.isdigit())), k)):
        status, text = CRITERIA[key]
        terminalreporter.write_line(f"criterion {key:>3}: {status}  {text}")


@pytest.fixture
def numpy_backend(monkeypatch):
    monkeypatch.setenv("ORLICZ_DISABLE_NUMBA", "1")


@pytest.fixture(autouse=True)
def _default_threads(monkeypatch):
    if "ORLICZ_THREADS" not in os.environ:
        monkeypatch.setenv("ORLICZ_THREADS", "1")
