import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from contact_forge.errors import StepSizeUnderflow
from contact_forge.ode import OdeSolverConfig, dp_step, hermite, hermite_max, integrate, integrate_batch, rk4_flow


def test_exponential_decay():
    res = integrate(lambda t, y: -y, [1.0], 1.0)
    assert res.y[0, 0] == pytest.approx(math.exp(-1), abs=1e-10)


def test_batch_rows_have_their_own_end_times():
    res = integrate_batch(lambda t, y: -y, np.ones((3, 1)), np.array([0.0, 1.0, 2.0]))
    assert np.allclose(res.y[:, 0], np.exp([0.0, -1.0, -2.0]), atol=1e-10)
    assert res.accepted[0] == 0 and np.all(res.t == [0.0, 1.0, 2.0])


def test_harmonic_oscillator_period():
    rhs = lambda t, y: np.column_stack([y[:, 1], -y[:, 0]])
    res = integrate(rhs, [1.0, 0.0], 2 * math.pi)
    assert np.allclose(res.y[0], [1.0, 0.0], atol=1e-9)


def test_time_dependent_rhs():
    res = integrate(lambda t, y: np.cos(t)[:, None] * np.ones_like(y), [0.0], 2.0)
    assert res.y[0, 0] == pytest.approx(math.sin(2.0), abs=1e-10)


def test_fifth_order_local_error():
    # one step of y' = y: local error shrinks by about 2^6 when h halves
    errs = []
    for h in (0.2, 0.1):
        y5, _, _ = dp_step(lambda t, y: y, 0.0, np.array([[1.0]]), h)
        errs.append(abs(y5[0, 0] - math.exp(h)))
    assert 40 < errs[0] / errs[1] < 90


def test_step_size_underflow():
    cfg = OdeSolverConfig(min_step=1e-3)
    with pytest.raises(StepSizeUnderflow):
        integrate(lambda t, y: y * y, [1.0], 2.0, cfg)


def test_config_validation():
    with pytest.raises(ValueError):
        OdeSolverConfig(rtol=0.0)
    assert OdeSolverConfig().halved().rtol == 5e-11


def test_stop_callback_retires_rows():
    res = integrate_batch(lambda t, y: np.ones_like(y), np.zeros((2, 1)), 10.0,
                          stop=lambda rows, t, y: y[:, 0] > np.where(rows == 0, 1.0, 5.0))
    # rows retire at the end of the step that crosses
    assert res.stopped.all() and res.accepted[0] < res.accepted[1]
    assert res.y[0, 0] >= 1.0 and res.y[1, 0] >= 5.0 and res.t[0] < res.t[1]


@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(-5, 5), st.floats(-5, 5))
def test_hermite_interpolates_endpoints(y0, f0, y1, f1):
    assert hermite(0.0, y0, f0, 2.0, y1, f1, 0.0) == pytest.approx(y0)
    assert hermite(0.0, y0, f0, 2.0, y1, f1, 2.0) == pytest.approx(y1)
    best, _ = hermite_max(np.array([0.0]), np.array([y0]), np.array([f0]), np.array([2.0]), np.array([y1]),
                          np.array([f1]))
    grid = hermite(0.0, y0, f0, 2.0, y1, f1, np.linspace(0, 2, 2001))
    assert best[0] >= grid.max() - 1e-9


def test_rk4_flow_on_linear_field():
    y = rk4_flow(lambda y: [-y[0]], [1.0], 1.0, 100)
    assert y[0] == pytest.approx(math.exp(-1), abs=1e-9)
