import math

import pytest
from hypothesis import HealthCheck, settings, strategies as st

from cknpert.params import constants

settings.register_profile("default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@st.composite
def valid_tuples(draw, N=st.integers(3, 7), lam_frac=st.floats(-1.0, 0.9)):
    """(N, a, b, lambda) strictly inside the admissible domain."""
    n = draw(N)
    a = draw(st.floats(-2.0, (n - 2) / 2 - 0.05))
    b = a + draw(st.floats(0.0, 0.95))
    lmax = ((n - 2 - 2 * a) / 2) ** 2
    lam = draw(lam_frac) * lmax
    return n, a, b, lam


@pytest.fixture(scope="session")
def dc_std():
    return constants(4, 0.0, 0.0, 0.0)


@pytest.fixture(scope="session")
def dc_nondeg():
    return constants(4, 0.0, 0.3, 0.0)


@pytest.fixture(scope="session")
def dc_lam():
    # lambda != 0 exercises the amplitude convention
    return constants(5, 0.1, 0.3, -2.0)


def rel(x, y):
    return abs(x - y) / max(abs(y), 1e-300)


PI2 = math.pi**2


# one line per acceptance criterion, printed after the run regardless of capture
ACCEPTANCE: list[str] = []


def record(number: int, title: str, ok: bool, detail: str) -> None:
    line = f"[criterion {number:2d}] {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    ACCEPTANCE.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)
