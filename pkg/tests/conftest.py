import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

_CRITERIA: dict[str, str] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label): acceptance criterion reported in the summary")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    label = mark.args[0]
    if rep.skipped:
        _CRITERIA.setdefault(label, "SKIP")
    elif rep.failed:
        _CRITERIA[label] = "FAIL"
    elif rep.when == "call":
        _CRITERIA.setdefault(label, "PASS")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_CRITERIA, key=lambda s: int(s.split()[0][1:])):
        terminalreporter.write_line(f"{_CRITERIA[label]}  {label}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
