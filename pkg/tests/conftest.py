import time

SUITE_BUDGET_S = 15 * 60


def pytest_sessionstart(session):
    session.config._suite_start = time.perf_counter()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    start = getattr(config, "_suite_start", None)
    if start is None:
        return
    elapsed = time.perf_counter() - start
    verdict = "PASS" if elapsed < SUITE_BUDGET_S else "FAIL"
    terminalreporter.write_line(
        f"criterion 9 (suite runtime): {verdict} {elapsed:.1f}s of {SUITE_BUDGET_S}s budget"
    )
