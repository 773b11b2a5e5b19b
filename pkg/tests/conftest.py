from __future__ import annotations

import numpy as np
import pytest

from singstab import catalog

_ACCEPTANCE: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion number and title")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    n, title = mark.args
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        status = "PASS" if rep.outcome == "passed" else ("SKIP" if rep.outcome == "skipped" else "FAIL")
        _ACCEPTANCE[n] = (status, title)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        status, title = _ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {status}  {title}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def classic_family():
    return catalog.classic(tau=1.0)


@pytest.fixture
def printed_family():
    return catalog.two_mode_example(0.45, "printed")


@pytest.fixture
def swapped_family():
    return catalog.two_mode_example(0.45, "swapped")
