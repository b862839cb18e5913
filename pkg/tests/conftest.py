import numpy as np
import pytest

from blowup_lab.grid import make_grid
from blowup_lab.potentials import Bump


@pytest.fixture
def grid():
    return make_grid(10.0, 399)


@pytest.fixture
def bump_f(grid):
    return Bump().sample(grid)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_ACCEPTANCE_LINES = []


class Criterion:
    def __init__(self, label):
        self.label = label
        self.checks = []

    def check(self, what, ok, detail=""):
        self.checks.append((what, bool(ok), detail))
        return bool(ok)

    @property
    def ok(self):
        return bool(self.checks) and all(ok for _, ok, _ in self.checks)

    def failures(self):
        return "; ".join(f"{w} ({d})" for w, ok, d in self.checks if not ok)


@pytest.fixture
def criterion(request):
    marker = request.node.get_closest_marker("criterion")
    c = Criterion(marker.args[0] if marker else request.node.name)
    yield c
    _ACCEPTANCE_LINES.append(f"[{'PASS' if c.ok else 'FAIL'}] {c.label}")
    for what, ok, detail in c.checks:
        _ACCEPTANCE_LINES.append(f"    {'ok ' if ok else 'BAD'} {what}: {detail}")


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label): acceptance criterion")


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
