import numpy as np
import pytest

from aggflow.grid import FaceField, MacGrid

ACCEPTANCE_LINES: list[str] = []


def record_acceptance(number: int, title: str, passed: bool, detail: str) -> None:
    tag = "PASS" if passed else "FAIL"
    ACCEPTANCE_LINES.append(f"[{tag}] criterion {number:2d}: {title}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_noslip(grid: MacGrid, rng) -> FaceField:
    v = FaceField(rng.standard_normal((grid.nx + 1, grid.ny)),
                  rng.standard_normal((grid.nx, grid.ny + 1)))
    return v.enforce_no_slip()
