import pytest

from zeckendorf_ew.bounds import stabilized_limit
from zeckendorf_ew.weights import ExampleWeights

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def example_limit():
    """Stabilised limit law of the example family (the expensive part of every bound)."""
    return stabilized_limit(ExampleWeights())


@pytest.fixture
def acceptance():
    """Record one pass/fail line per acceptance criterion."""

    def record(number: int, title: str, passed: bool, detail: str) -> None:
        line = f"criterion {number} [{'PASS' if passed else 'FAIL'}] {title}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
