import pytest

_ACCEPTANCE: dict[str, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(tag, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None:
        return
    tag, title = mark.args
    if report.when == "call" or (report.when == "setup" and report.failed):
        _ACCEPTANCE[tag] = ("PASS" if report.passed else "FAIL", title)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for tag in sorted(_ACCEPTANCE, key=lambda t: (int("".join(c for c in t if c.isdigit())), t)):
        status, title = _ACCEPTANCE[tag]
        terminalreporter.write_line(f"{status} {tag:>3}  {title}")
