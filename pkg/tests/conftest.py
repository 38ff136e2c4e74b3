import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from rcae import so3

settings.register_profile("default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

finite = st.floats(-10.0, 10.0, allow_nan=False, allow_infinity=False)
vec3 = arrays(np.float64, 3, elements=finite)


@st.composite
def unit_vectors(draw):
    v = draw(arrays(np.float64, 3, elements=st.floats(-1.0, 1.0)))
    n = np.linalg.norm(v)
    if n < 1e-3:
        return np.array([0.0, 0.0, 1.0])
    return v / n


@st.composite
def rotations(draw):
    angle = draw(st.floats(0.0, math.pi))
    return so3.exp_so3(angle * draw(unit_vectors()))


@st.composite
def euler_angles(draw, pitch_margin=1e-3):
    psi = draw(st.floats(-math.pi + 1e-9, math.pi))
    theta = draw(st.floats(-0.5 * math.pi + pitch_margin, 0.5 * math.pi - pitch_margin))
    phi = draw(st.floats(-math.pi + 1e-9, math.pi))
    return np.array([psi, theta, phi])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_rotations(rng, n, max_angle=math.pi):
    axes = rng.normal(size=(n, 3))
    axes /= np.linalg.norm(axes, axis=1, keepdims=True)
    angles = rng.uniform(0.0, max_angle, size=n)
    return so3.exp_so3(angles[:, None] * axes)


_criteria: dict[int, str] = {}


@pytest.fixture
def criterion():
    """Record one acceptance verdict, print it and fail the test if it does not hold."""

    def check(number: int, title: str, ok: bool, detail: str) -> None:
        line = f"criterion {number} {'PASS' if ok else 'FAIL'}: {title} ({detail})"
        _criteria[number] = line
        print(line)
        assert ok, line

    return check


def pytest_terminal_summary(terminalreporter):
    if _criteria:
        terminalreporter.section("acceptance criteria")
        for number in sorted(_criteria):
            terminalreporter.write_line(_criteria[number])
