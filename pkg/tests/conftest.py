import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))


def pytest_configure(config):
    config.csnet_criteria = {}


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = getattr(config, "csnet_criteria", {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n])
