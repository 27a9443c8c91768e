import pytest

# one line per acceptance check, printed after the run so the verdicts
# survive even when an individual check fails mid-suite
_ACCEPTANCE = {}


@pytest.fixture
def acceptance():
    def record(num, label, ok, detail=""):
        _ACCEPTANCE[num] = (label, bool(ok), detail)
        return ok
    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance checks")
    for num in sorted(_ACCEPTANCE):
        label, ok, detail = _ACCEPTANCE[num]
        verdict = "PASS" if ok else "FAIL"
        line = f"acceptance {num} {label}: {verdict}"
        if detail:
            line += f"  [{detail}]"
        tr.write_line(line)
