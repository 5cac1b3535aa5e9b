import pytest

from endwalk.gensys import bundled_system
from endwalk.solver import Solver
from endwalk.template import BUNDLED, build_patch_for_horizon, bundled_template


@pytest.fixture(scope="session")
def solvers():
    cache = {}

    def get(name):
        if name not in cache:
            cache[name] = Solver(*bundled_system(name))
        return cache[name]

    return get


@pytest.fixture(scope="session")
def critical(solvers):
    cache = {}

    def get(name):
        if name not in cache:
            cache[name] = solvers(name).find_critical_point()
        return cache[name]

    return get


@pytest.fixture(scope="session")
def patches():
    cache = {}

    def get(name, horizon):
        key = (name, horizon)
        if key not in cache:
            cache[key] = build_patch_for_horizon(bundled_template(name), horizon)
        return cache[key]

    return get


ALL_TEMPLATES = list(BUNDLED)
