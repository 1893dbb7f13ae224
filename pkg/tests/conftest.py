import pytest

from tricrit.curves import tricritical_point
from tricrit.model import ModelParams


@pytest.fixture(scope="session")
def tc():
    return tricritical_point()


@pytest.fixture(scope="session")
def free():
    return ModelParams(0.0, 0.0, 1.0)


def pytest_terminal_summary(terminalreporter):
    lines = []
    for key in ("passed", "failed"):
        for rep in terminalreporter.stats.get(key, []):
            if rep.when != "call":
                continue
            lines += [v for k, v in rep.user_properties if k == "acceptance"]
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda l: int(l.split()[1])):
            terminalreporter.write_line(line)
