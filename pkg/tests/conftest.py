import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def haar_frame(rng, n, k):
    q, r = np.linalg.qr(rng.standard_normal((n, k)))
    return q * np.sign(np.diag(r))


def hadamard_frame(n, cols):
    from scipy.linalg import hadamard

    return hadamard(n)[:, cols].astype(float) / np.sqrt(n)


ACCEPTANCE = {}


def record_acceptance(number, passed, detail):
    ACCEPTANCE[number] = (bool(passed), detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
