import pytest

_RESULTS = []


class AcceptanceLog:
    """Collects one verdict per acceptance criterion for the end-of-run report."""

    def record(self, number, title, passed, detail):
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:>2} {title}: {detail}"
        _RESULTS.append((number, line))
        print(line)
        return passed


@pytest.fixture(scope="session")
def acceptance():
    return AcceptanceLog()


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_RESULTS, key=lambda r: r[0]):
        terminalreporter.write_line(line)
