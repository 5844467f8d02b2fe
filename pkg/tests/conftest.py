import functools
import os

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@functools.lru_cache(maxsize=None)
def _env(name):
    from softnash.envs import build_env

    return build_env(name)


@functools.lru_cache(maxsize=None)
def _truth(name):
    from softnash.exact import shapley_solve

    return shapley_solve(_env(name))


@pytest.fixture
def env():
    return _env


@pytest.fixture
def truth():
    return _truth


@pytest.fixture
def gt_cache(tmp_path_factory):
    return str(tmp_path_factory.getbasetemp() / "ground_truth")


# one verdict line per acceptance criterion, printed after the run
CRITERIA = {}


@pytest.fixture
def criterion():
    def record(number, ok, detail):
        CRITERIA[number] = (bool(ok), detail)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERIA):
        ok, detail = CRITERIA[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
