import pytest

from dmm import program_text
from dmm.dsl import load, parse

DETECTOR = program_text("detector")
SELFMOD = program_text("selfmod")


@pytest.fixture(scope="session")
def detector_program():
    return parse(DETECTOR, "detector.dmm")


@pytest.fixture
def run_detector(detector_program):
    def run(text, rate=1, max_ticks=200, watch=()):
        net = load(detector_program)
        net.bind("input-data", text, rate)
        if watch:
            net.watch(*watch)
        return net.run(max_ticks)

    return run


def has_duplicates(text: str) -> bool:
    return len(set(text)) < len(text)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
