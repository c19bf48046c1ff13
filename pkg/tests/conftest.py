import pytest

from qdpair import EmitterParams, HomConfig


@pytest.fixture
def qd_a():
    return EmitterParams.from_mhz(233.0, 0.48)


@pytest.fixture
def qd_b():
    return EmitterParams.from_mhz(167.0, 0.34)


@pytest.fixture
def hom_config(qd_a, qd_b):
    return HomConfig(qd_a, qd_b, weight_a=0.59, g2zero_a=0.13, g2zero_b=0.04)


_SESSION = {}


def pytest_sessionstart(session):
    import time

    _SESSION["start"] = time.perf_counter()


def pytest_terminal_summary(terminalreporter):
    import time

    from . import test_acceptance

    results = test_acceptance.RESULTS
    if not results:
        return
    elapsed = time.perf_counter() - _SESSION.get("start", time.perf_counter())
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        terminalreporter.write_line(results[number][1])
    verdict = "PASS" if elapsed < 60 else "FAIL"
    terminalreporter.write_line(f"criterion 9 runtime {verdict}: full test session {elapsed:.1f} s (< 60 s)")
