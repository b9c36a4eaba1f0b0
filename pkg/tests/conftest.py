_ACCEPTANCE = []


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance" in report.nodeid:
        _ACCEPTANCE.append((report.nodeid.split("::")[-1], report.outcome))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _ACCEPTANCE:
        terminalreporter.write_sep("-", "acceptance criteria")
        for name, outcome in _ACCEPTANCE:
            tag = "PASS" if outcome == "passed" else "FAIL"
            terminalreporter.write_line(f"{tag}  {name}")
