import pytest

ACCEPTANCE_LINES: dict = {}


@pytest.fixture
def criterion(request):
    """Record one pass/fail line per acceptance criterion.

    Usage: ``criterion(id, description)`` returns a callable ``report(ok, detail)``
    that stores the line and asserts ``ok``.
    """
    def start(cid: str, title: str):
        def report(ok: bool, detail: str):
            line = f"[{'PASS' if ok else 'FAIL'}] criterion {cid}: {title} -- {detail}"
            ACCEPTANCE_LINES[cid] = line
            print(line)
            assert ok, line
        return report
    return start


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")

    def order(cid):
        head = "".join(ch for ch in cid if ch.isdigit())
        return (int(head), cid)

    for cid in sorted(ACCEPTANCE_LINES, key=order):
        terminalreporter.write_line(ACCEPTANCE_LINES[cid])
