import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    number = title = None
    for key, value in report.user_properties:
        if key == "criterion":
            number, title = value
    if number is None:
        return
    detail = dict(report.user_properties).get("detail", "")
    _CRITERIA[number] = (title, report.outcome, detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, outcome, detail = _CRITERIA[number]
        status = "PASS" if outcome == "passed" else "FAIL"
        line = f"[{status}] criterion {number}: {title}"
        if detail:
            line += f" -- {detail}"
        terminalreporter.write_line(line)


@pytest.fixture
def criterion(request, record_property):
    """Tag a test as an acceptance criterion; returns a ``detail(text)`` recorder."""
    marker = request.node.get_closest_marker("criterion")
    record_property("criterion", tuple(marker.args))

    def detail(text):
        record_property("detail", text)
    return detail


@pytest.fixture(params=["compiled", "python"])
def backend(request, monkeypatch):
    """Run a test once with each kernel backend."""
    from signedgl import kernels
    try:
        mod = kernels.get_backend(request.param)
    except ImportError:
        pytest.skip("compiled extension not built")
    for name in kernels.KERNEL_NAMES:
        monkeypatch.setattr(kernels, name, getattr(mod, name))
    return request.param
