import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from entangled_ergodic.measure_space import FiniteMeasureSpace, Func

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def X2():
    return FiniteMeasureSpace.uniform(2)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_func(space, rng, complex_values=True):
    v = rng.normal(size=space.d)
    if complex_values:
        v = v + 1j * rng.normal(size=space.d)
    return Func(v, space)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda l: int(l.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
