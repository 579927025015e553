import pytest

_criteria: dict[str, list] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(name): acceptance criterion checked by the test")
    config.addinivalue_line("markers", "slow: runs the full benchmark")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when == "teardown":
        return
    if report.when == "setup" and report.passed:
        return
    if report.skipped and not hasattr(report, "wasxfail"):
        status = "SKIP"
    elif report.passed and not hasattr(report, "wasxfail"):
        status = "PASS"
    else:
        status = "FAIL"
    detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
    entry = _criteria.setdefault(marker.args[0], ["PASS", []])
    if status != "PASS" and entry[0] != "FAIL":
        entry[0] = status
    if detail:
        entry[1].append(detail)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for name, (status, details) in _criteria.items():
        line = f"{status}  {name}"
        terminalreporter.write_line(line + (f"  ({'; '.join(details)})" if details else ""))
