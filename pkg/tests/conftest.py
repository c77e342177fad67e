import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from nsscurve import testkit
from nsscurve.curves import CurveParams, ModelKind, constraint_system
from nsscurve.optim import ObjectiveProblem, sample_feasible

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def ns_instance():
    return testkit.generate_instance(testkit.TRUE_NS, seed=3)


@pytest.fixture(scope="session")
def sv_instance():
    return testkit.generate_instance(testkit.TRUE_SVENSSON, seed=1)


@pytest.fixture(scope="session")
def noisy_instance():
    return testkit.generate_instance(testkit.TRUE_SVENSSON, seed=1, noise=0.05)


def random_params(kind, rng, n):
    kind = ModelKind.parse(kind)
    xs = sample_feasible(constraint_system(kind), rng, n)
    return [CurveParams.from_vector(kind, x) for x in xs]


def quadratic_problem(center, lower=-1.0, upper=1.0):
    """Sphere-like problem on a box with no linear constraint."""
    from nsscurve.curves import ConstraintSystem
    center = np.asarray(center, dtype=float)
    p = center.size
    cs = ConstraintSystem(np.full(p, lower), np.full(p, upper), (), tuple(f"x{i}" for i in range(p)),
                          np.zeros(p))
    return ObjectiveProblem(func=lambda x: float(np.sum((x - center) ** 2)), constraints=cs,
                            func_many=lambda xs: np.sum((xs - center) ** 2, axis=1),
                            grad_func=lambda x: (float(np.sum((x - center) ** 2)), 2 * (x - center)))


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
