import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from scordant.logistic import DesignProblem

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def two_point():
    """x = (1, 1), y = (1, -1): J_hat(w) = ell(w) exactly."""
    return DesignProblem(X=np.ones((2, 1)), labels=np.array([1.0, -1.0]))


@pytest.fixture
def small_problem():
    rng = np.random.default_rng(11)
    X = rng.standard_normal((20, 3))
    return DesignProblem(X=X, labels=rng.choice([-1.0, 1.0], size=20))


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def report_line(request):
    """``emit(criterion, passed, detail)`` records one PASS/FAIL line for the summary."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])

    def emit(criterion, passed, detail):
        line = f"criterion {criterion:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
        lines.append(line)
        print(line)
        return passed

    return emit


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split(":")[0].split()[1])):
            terminalreporter.write_line(line)
