import os
import sys
import warnings

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def toy():
    from advnet import toy_network
    return toy_network(1)


@pytest.fixture
def toy_params(toy):
    from advnet import derive_params
    return derive_params(toy, toy.adversary, 16, 32)


@pytest.fixture
def quiet():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        yield


_VERDICTS = pytest.StashKey()


@pytest.fixture
def verdict(request):
    """Record (and print) one PASS/FAIL line per acceptance criterion."""
    lines = request.config.stash.setdefault(_VERDICTS, [])

    def record(label, ok, detail=""):
        line = f"{'PASS' if ok else 'FAIL'} {label}" + (f": {detail}" if detail else "")
        lines.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_VERDICTS, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
