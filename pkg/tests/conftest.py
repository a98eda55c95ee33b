import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from gdrb.chanalg import ket0_state
from gdrb.groups import get_group

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def t_pauli():
    return get_group("t_pauli")


@pytest.fixture(scope="session")
def clifford():
    return get_group("clifford")


@pytest.fixture
def ket0():
    return ket0_state()


def haar_state_vectors(gen, n):
    from gdrb.chanalg import pure_state_vector

    z = gen.standard_normal((n, 2)) + 1j * gen.standard_normal((n, 2))
    return np.array([pure_state_vector(v) for v in z])


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
