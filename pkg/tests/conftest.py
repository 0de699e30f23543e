import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from _instances import random_instances, toy_cmdp  # noqa: E402

import cmdp_gas as cg  # noqa: E402

# Tight inner tolerance used wherever the outer loop must resolve the dual
# to eps_prime = 1e-10: the inner fixed-point error in O scales like
# eps * |V| / (1 - gamma), so the default 1e-10 is too loose at that level.
EPS_TIGHT = 1e-15
GRID_OBSTACLES = {"count": 30, "seed": 11}


@pytest.fixture(scope="session")
def toy():
    return toy_cmdp()


@pytest.fixture(scope="session")
def instances():
    return random_instances()


@pytest.fixture(scope="session")
def grid_model():
    """Canonical seed-fixed 20x20 layout at the default bound E=40."""
    return cg.build_gridworld_model(cg.GridConfig(obstacles=GRID_OBSTACLES))


@pytest.fixture(scope="session")
def grid_models_by_bound():
    def build(bound):
        return cg.build_gridworld_model(
            cg.GridConfig(obstacles=GRID_OBSTACLES, constraint_bound=bound))
    return build


@pytest.fixture(scope="session")
def uav_model():
    return cg.build_uav_model(cg.UavConfig())


@pytest.fixture(scope="session")
def uav_runs(uav_model):
    """GAS and BS solves of the UAV CMDP at the tightest accuracy, per
    search cap M, with a shared evaluation cache per M.  Expensive;
    computed once and replayed for looser eps' via the recorded traces."""
    runs = {}
    for mu_max in (1e3, 1e5):
        cache = {}
        runs[("gas", mu_max)] = cg.gas_solve(
            uav_model.cmdp, mu_max=mu_max, eps=EPS_TIGHT, eps_prime=1e-10,
            cache=cache)
        runs[("bs", mu_max)] = cg.binary_search_solve(
            uav_model.cmdp, mu_max=mu_max, eps=EPS_TIGHT, eps_prime=1e-10,
            cache=cache)
    return runs


@pytest.fixture(scope="session")
def grid_runs(grid_model):
    runs = {}
    for mu_max in (1e3, 1e5):
        cache = {}
        runs[("gas", mu_max)] = cg.gas_solve(
            grid_model.cmdp, mu_max=mu_max, eps=EPS_TIGHT, eps_prime=1e-10,
            cache=cache)
        runs[("bs", mu_max)] = cg.binary_search_solve(
            grid_model.cmdp, mu_max=mu_max, eps=EPS_TIGHT, eps_prime=1e-10,
            cache=cache)
    return runs
