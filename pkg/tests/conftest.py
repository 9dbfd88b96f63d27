import pathlib

import pytest

REPORT = []
REPORT_PATH = pathlib.Path(__file__).resolve().parents[1] / "acceptance_report.txt"


@pytest.fixture
def report():
    """Record one PASS/FAIL line per acceptance criterion."""
    def emit(label: str, ok: bool, detail: str):
        line = f"{'PASS' if ok else 'FAIL'} criterion {label}: {detail}"
        print(line)
        REPORT.append(line)
        return ok
    return emit


def pytest_terminal_summary(terminalreporter):
    if not REPORT:
        return
    terminalreporter.section("acceptance criteria")
    for line in REPORT:
        terminalreporter.write_line(line)
    REPORT_PATH.write_text("\n".join(REPORT) + "\n")
