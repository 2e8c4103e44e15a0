import pytest
from hypothesis import HealthCheck, settings

from prioplan.grid import GridMap, MoveModel
from prioplan.prioritized import Instance, Robot

settings.register_profile("default", deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def corridor():
    """1x5 corridor, A (id 0) at the west end, B (id 1) at the east end, swapping."""
    grid = GridMap(5, 1, frozenset(), name="corridor")
    return Instance(grid, (Robot(0, (0, 0), (4, 0)), Robot(1, (4, 0), (0, 0))), 0.499999)


@pytest.fixture
def mm():
    return MoveModel()


_ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = []


@pytest.fixture(scope="session")
def acceptance_log(request):
    """Collects one summary line per acceptance criterion for the terminal report."""
    lines = request.config.stash[_ACCEPTANCE]

    def report(n, ok, detail):
        line = f"criterion {n}: {'PASS' if ok else 'FAIL'} | {detail}"
        print(line)
        lines.append(line)
        return ok

    return report


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
