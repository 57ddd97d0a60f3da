"""Collects acceptance-criterion outcomes and prints one line per criterion."""

_outcomes: dict = {}


def pytest_runtest_makereport(item, call):
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number, title = mark.args
    entry = _outcomes.setdefault(number, {"title": title, "failed": False, "ran": False})
    if call.when == "call":
        entry["ran"] = True
    if call.excinfo is not None and call.when in ("setup", "call"):
        entry["failed"] = True


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_outcomes):
        entry = _outcomes[number]
        verdict = "FAIL" if entry["failed"] or not entry["ran"] else "PASS"
        terminalreporter.write_line(f"criterion {number:2d} {verdict}  {entry['title']}")
