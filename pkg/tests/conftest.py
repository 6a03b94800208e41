import json
from pathlib import Path

import numpy as np
import pytest

from offrl.mdp import TabularMdp, TabularPolicy

FROZEN = json.loads((Path(__file__).parent / "data" / "oracle_values.json").read_text())


@pytest.fixture(scope="session")
def frozen():
    return FROZEN


def generic_mdp(seed: int, ns: int, na: int, gamma: float = 0.9) -> TabularMdp:
    """Dense random MDP with uniform rewards; no bounded-return structure."""
    rng = np.random.default_rng(seed)
    p = rng.dirichlet(np.ones(ns) * 0.7, size=(ns, na))
    r = rng.random((ns, na))
    rho = rng.dirichlet(np.ones(ns))
    return TabularMdp(p, r, gamma, rho)


def random_policy(seed: int, ns: int, na: int) -> TabularPolicy:
    rng = np.random.default_rng(seed)
    return TabularPolicy(rng.dirichlet(np.ones(na), size=ns))


ACCEPTANCE_LINES: dict = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[key])
