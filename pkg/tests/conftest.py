import numpy as np
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def finite(lo=-10.0, hi=10.0):
    return st.floats(lo, hi, allow_nan=False, allow_infinity=False)


def vectors(lo=-10.0, hi=10.0):
    return st.tuples(finite(lo, hi), finite(lo, hi), finite(lo, hi)).map(np.array)


def unit_axes():
    return vectors(-1.0, 1.0).filter(lambda v: np.linalg.norm(v) > 1e-3)


def rotations():
    """Random rotation matrices drawn through scipy (an independent constructor)."""
    from scipy.spatial.transform import Rotation

    return st.integers(0, 2**32 - 1).map(lambda s: Rotation.random(random_state=s).as_matrix())


_ACCEPTANCE_LINES: list[str] = []


def record_acceptance(line: str) -> None:
    print(line)
    _ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
