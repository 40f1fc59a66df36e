import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from polarmom.model import Background, wavelength, wavenumber

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

FREQ = 1.2e9

# criterion number -> (passed, detail); filled by tests/test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record(criterion: int, passed: bool, detail: str) -> None:
    ACCEPTANCE[criterion] = (bool(passed), detail)
    print(f"criterion {criterion}: {'PASS' if passed else 'FAIL'}  {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def lam():
    return wavelength(FREQ)


@pytest.fixture(scope="session")
def kb():
    return wavenumber(Background(), FREQ)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def crandn(rng, shape):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)
