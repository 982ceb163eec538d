import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from blendcg.objectives import QuadraticObjective, make_rng

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return make_rng(12345)


def random_quadratic(rng, m, n, scale=1.0):
    A = rng.standard_normal((m, n)) * scale
    b = rng.standard_normal(m)
    return QuadraticObjective(A, b)


def identity_quadratic(n, center=None):
    """f(x) = ||x - center||^2."""
    return QuadraticObjective(np.eye(n), np.zeros(n) if center is None else np.asarray(center, float))


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def report(criterion: int, ok: bool, detail: str) -> None:
    line = f"criterion {criterion:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
