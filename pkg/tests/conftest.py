from functools import lru_cache

import numpy as np
import pytest

from cohtherm.bath import BathSpec, time_grid
from cohtherm.coherence import coherence_of
from cohtherm.dynamics import Scenario, propagate_analytic
from cohtherm.states import StateKind

ETA, CUTOFF = 0.1, 0.01
KT_VALUES = (0.1, 0.2, 0.5, 2.0, 10.0)
GRID = time_grid(200.0, 2001)
SHORT_GRID = time_grid(50.0, 501)


def scenario(kind, env, kT, grid=GRID, p=None):
    state = kind if isinstance(kind, StateKind) else StateKind.parse(kind, p)
    build = Scenario.local if env == "local" else Scenario.common
    return build(state, BathSpec(ETA, CUTOFF, kT), grid)


@lru_cache(maxsize=None)
def _coherence(kind, p, env, kT):
    return coherence_of(propagate_analytic(scenario(kind, env, kT, p=p))).c_r


@pytest.fixture(scope="session")
def coherence_series():
    """C_R(t) on the default grid, memoised across the session."""
    return lambda kind, env, kT, p=None: _coherence(kind, p, env, kT)


@pytest.fixture
def rng():
    return np.random.default_rng(20261019)


ACCEPTANCE = {}


def record(number, ok, detail):
    """Log one acceptance line; the summary hook prints them after the run."""
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE[number] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[number])
