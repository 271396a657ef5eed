import pytest

# populated by the acceptance tests, echoed after the run so the verdict
# lines are visible without -s
VERDICTS = []


def pytest_addoption(parser):
    parser.addoption(
        "--runslow",
        action="store_true",
        default=False,
        help="run tests marked slow (multi-minute solves)",
    )


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: multi-minute solve, needs --runslow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip = pytest.mark.skip(reason="slow solve, pass --runslow to run")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if VERDICTS:
        terminalreporter.section("acceptance verdicts")
        for line in VERDICTS:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def verdict():
    """Record one PASS/FAIL line per acceptance check, then assert it."""

    def record(name: str, ok: bool, detail: str) -> None:
        line = f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}"
        VERDICTS.append(line)
        print(line)
        assert ok, line

    return record
