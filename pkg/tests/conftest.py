import re
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_CRITERIA: dict[int, str] = {}


@pytest.fixture
def criterion(request):
    """``check(ok, detail)`` records one PASS/FAIL line for the acceptance
    criterion numbered in the test name, then asserts ``ok``."""
    number = int(re.search(r"criterion_(\d+)", request.node.name).group(1))

    def check(ok: bool, detail: str) -> None:
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        _CRITERIA[number] = line
        print(line)
        assert ok, detail

    yield check
    _CRITERIA.setdefault(number, f"criterion {number:2d}: FAIL  (raised before a verdict)")


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.write_sep("=", "acceptance criteria")
        for number in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[number])
