import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from flipchain.chain import ChainModel
from flipchain.covariance import cosine_profile, evolve_duhamel, modulated_state

SEED = 20240917
RNG = np.random.default_rng(SEED)

# tolerances
ATOL_MACHINE = 1e-12
RTOL_ODE = 1e-8
RTOL_QUAD = 1e-8

ACCEPTANCE = {}


def record(number, title, passed, detail=""):
    ACCEPTANCE[number] = (title, bool(passed), detail)


@pytest.fixture(scope="session")
def nn():
    return ChainModel.nearest_neighbour(1.0, 6.0)


@pytest.fixture(scope="session")
def onsite():
    return ChainModel.onsite(1.0, 6.0)


@pytest.fixture(scope="session")
def diffusive_states(nn):
    """Modulated fixture evolved to ``t = 0.5 L**2`` for L = 16, 32, 64."""
    out = {}
    for L in (16, 32, 64):
        out[L] = evolve_duhamel(nn, modulated_state(nn, L, cosine_profile(L)), 0.5 * L**2)
    return out


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}")
