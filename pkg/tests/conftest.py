import re

import pytest

_attempted = {}
_passed = {}


@pytest.fixture
def acceptance(request):
    """Register the criterion a test covers; call the result to mark it passed.

    The terminal summary prints one PASS/FAIL line per attempted criterion,
    so a test that dies before calling the recorder shows up as FAIL.
    """
    match = re.search(r"criterion_(\d+)", request.node.name)
    assert match, "acceptance tests must be named test_criterion_<k>_..."
    k = int(match.group(1))
    _attempted[k] = request.node.name

    def record(detail):
        _passed[k] = str(detail)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _attempted:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for k in sorted(_attempted):
        if k in _passed:
            terminalreporter.write_line(f"ACCEPTANCE {k}: PASS - {_passed[k]}")
        else:
            terminalreporter.write_line(f"ACCEPTANCE {k}: FAIL ({_attempted[k]})")
