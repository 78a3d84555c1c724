import functools

import pytest

from aro_pricing.generate import random_instance
from aro_pricing.model import builtin_instance
from aro_pricing.robust import solve_aro

RANDOM_SEEDS = range(50)


@functools.lru_cache(maxsize=None)
def solved_builtin(name, deterministic=False):
    inst = builtin_instance(name)
    if deterministic:
        inst = inst.deterministic()
    sol, cert = solve_aro(inst)
    return inst, sol, cert


@functools.lru_cache(maxsize=None)
def solved_random(seed):
    inst = random_instance(seed)
    sol, cert = solve_aro(inst)
    return inst, sol, cert


@pytest.fixture(scope="session")
def scarf():
    return solved_builtin("scarf")


@pytest.fixture(scope="session")
def scarf_det():
    return solved_builtin("scarf", True)


@pytest.fixture(scope="session")
def scarf_cap():
    return solved_builtin("scarf-capacity")


@pytest.fixture(scope="session")
def chen():
    return solved_builtin("chen-multiperiod")


@pytest.fixture(scope="session")
def chen_det():
    return solved_builtin("chen-multiperiod", True)


@pytest.fixture(scope="session")
def random_suite():
    return [solved_random(s) for s in RANDOM_SEEDS]


@pytest.fixture(scope="session")
def theorem_suite(scarf, scarf_cap, random_suite):
    """The two single-period builtins plus the randomized instances."""
    return [scarf, scarf_cap] + random_suite


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import LINES
    if not LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(LINES):
        terminalreporter.write_line(LINES[n])
