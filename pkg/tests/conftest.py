import functools
import sys

import numpy as np
import pytest

from polyplane.geometry import build_grid, make_domain
from polyplane.solver import SolveConfig, parse_nonlinearity, solve_system


@functools.lru_cache(maxsize=None)
def cached_solve(shape, n_cells, alpha, f_text):
    grid = build_grid(make_domain(shape), n_cells)
    return solve_system(grid, alpha, parse_nonlinearity(f_text), SolveConfig())


@pytest.fixture(scope="session")
def solve():
    return cached_solve


def exact_m1(x1, x2):
    return (1.0 - x1**2 - x2**2) / 4.0


def exact_m2_u1(x1, x2):
    r2 = x1**2 + x2**2
    return (1.0 - r2) / 16.0 - (1.0 - r2**2) / 64.0


def relative_error(values, exact):
    return float(np.max(np.abs(values - exact)) / np.max(np.abs(exact)))


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    if acceptance is None or not acceptance.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(acceptance.RESULTS, key=lambda s: int(s.split()[2])):
        terminalreporter.write_line(line)
