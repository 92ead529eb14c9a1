import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

_verdicts: dict[str, str] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(name): acceptance criterion reported in the summary")


def pytest_runtest_logreport(report):
    name = _criteria.get(report.nodeid)
    if name is None:
        return
    if report.failed:
        _verdicts[name] = "FAIL"
    elif report.when == "call":
        _verdicts.setdefault(name, "PASS")


_criteria: dict[str, str] = {}


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark:
            _criteria[item.nodeid] = mark.args[0]


def pytest_terminal_summary(terminalreporter):
    if not _verdicts:
        return
    terminalreporter.section("acceptance criteria")
    for name in dict.fromkeys(_criteria.values()):
        if name in _verdicts:
            terminalreporter.write_line(f"{_verdicts[name]}  {name}")
