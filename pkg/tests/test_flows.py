import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from contact_forge import flows
from contact_forge.contact import make_field_X, make_scaling_g, polar_chart
from contact_forge.errors import DomainError, LeftDomain
from contact_forge.flows import (G_closed_form, G_value, LN_7_6, constants, crossing_time, f_radial, find_r_M,
                                 flow_portrait, g_factor, g_profile, integrate_flow, radial_F, sharp_bound,
                                 squeeze_point, squeeze_points, squeeze_time, sup_G_scan, u_profile, verify_squeeze)
from contact_forge.geometry import VectorField
from contact_forge.ode import OdeSolverConfig

R_M = find_r_M()
# monotonicity holds up to the solver's relative tolerance times the radius
SOLVER_SLACK = 1e-9


def trajectory(r, times):
    """(F, G) at each time, one batch row per time."""
    times = np.asarray(times, float)
    return flows.radial_flow(np.full(times.size, r), times).y


def rk4_radial(r, T, steps):
    """Fixed-step RK4 on (F, G), independent of the adaptive solver."""
    h = T / steps
    y = np.array([r, 0.0])

    def rhs(v):
        return np.array([float(f_radial(v[0])), float(g_factor(v[0]))])

    for _ in range(steps):
        k1 = rhs(y)
        k2 = rhs(y + 0.5 * h * k1)
        k3 = rhs(y + 0.5 * h * k2)
        k4 = rhs(y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return y


def test_linear_contraction_in_z():
    chart = polar_chart()
    v = VectorField.from_exprs(chart, {"z": "-z"})
    res = integrate_flow(v, [1.0, 0.0, 1.0], 1.0)
    assert res.end_point[2] == pytest.approx(math.exp(-1), abs=1e-9)
    assert res.accepted > 0


def test_flow_backwards_in_time():
    chart = polar_chart()
    v = VectorField.from_exprs(chart, {"z": "-z"})
    res = integrate_flow(v, [1.0, 0.0, 1.0], -1.0)
    assert res.end_point[2] == pytest.approx(math.e, abs=1e-8) and res.t == -1.0


@pytest.mark.parametrize("T", [0.5, 7.0, 40.0])
def test_attracting_cylinder_is_fixed(T):
    res = integrate_flow(make_field_X(), [math.pi, 0.0, 0.0], T)
    assert abs(res.end_point[0] - math.pi) < 1e-9


def test_flow_from_two_reaches_pi():
    res = integrate_flow(make_field_X(), [2.0, 0.0, 0.5], 20.0, scalar=make_scaling_g())
    assert abs(res.end_point[0] - math.pi) < 1e-6
    oracle = rk4_radial(2.0, 20.0, 20_000)
    assert res.end_point[0] == pytest.approx(oracle[0], abs=1e-9)
    assert res.G == pytest.approx(oracle[1], abs=1e-9)
    assert res.end_point[2] == pytest.approx(0.5 * math.exp(-20), abs=1e-12)


def test_leaving_the_chart():
    chart = polar_chart()
    v = VectorField.from_exprs(chart, {"r": "-1"})
    with pytest.raises(LeftDomain):
        integrate_flow(v, [0.5, 0.0, 0.0], 2.0)


def test_radial_F_examples():
    assert abs(radial_F(math.pi / 2, 5.0) - math.pi / 2) < 1e-9
    assert abs(radial_F(2.5, 30.0) - math.pi) < 1e-6
    values = trajectory(1.0, np.linspace(0, 20, 21))[:, 0]
    assert all(b < a for a, b in zip(values, values[1:]))


@pytest.mark.parametrize("k", [0, 1, 2])
def test_fixed_points(k):
    r = k * math.pi / 2
    assert np.all(np.abs(trajectory(r, [0.0, 1.0, 10.0, 100.0])[:, 0] - r) < 1e-9)


@settings(max_examples=15)
@given(st.floats(math.pi / 2 + 0.01, math.pi + 0.1))
def test_outer_trajectories_converge_to_pi_monotonically(r):
    values = trajectory(r, np.linspace(0, 60, 31))[:, 0]
    diffs = np.diff(values)
    assert np.all(diffs >= -SOLVER_SLACK) if r < math.pi else np.all(diffs <= SOLVER_SLACK)
    assert abs(values[-1] - math.pi) < 1e-6


@settings(max_examples=15)
@given(st.floats(0.01, math.pi / 2 - 0.01))
def test_inner_trajectories_converge_to_zero_monotonically(r):
    values = trajectory(r, np.linspace(0, 60, 31))[:, 0]
    assert np.all(np.diff(values) <= SOLVER_SLACK) and values[-1] < 1e-6


def test_G_examples():
    assert G_value(1.3, 0.0) == 0.0
    assert G_value(1.0, 10.0) < 0
    T = crossing_time(2.0).time
    grid = trajectory(2.0, np.linspace(T, T + 30, 31))[:, 1]
    assert np.all(np.diff(grid) <= 1e-12)


def test_r_M():
    assert round(R_M, 4) == 2.0288
    assert abs(u_profile(R_M)) < 1e-12
    assert math.pi / 2 < R_M < math.pi
    assert abs(R_M + math.tan(R_M)) < 1e-11


def test_closed_form():
    assert G_closed_form(R_M) == 0.0
    assert abs(G_closed_form(math.pi / 2 + 1e-9) - sharp_bound()) < 1e-6
    assert abs(G_closed_form(1.8) - crossing_time(1.8).G) < 1e-6
    with pytest.raises(DomainError):
        G_closed_form(1.5)
    with pytest.raises(DomainError):
        G_closed_form(R_M + 1e-3)


@pytest.mark.parametrize("r", [1.6, 1.7, 1.9, 2.0])
def test_G_peaks_at_crossing_time(r):
    c = crossing_time(r)
    assert radial_F(r, c.time) == pytest.approx(R_M, abs=1e-9)
    assert trajectory(r, np.linspace(0, c.time + 20, 400))[:, 1].max() <= c.G + 1e-12
    assert c.G == pytest.approx(G_closed_form(r), abs=1e-8)


def test_sup_G_scan():
    scan = sup_G_scan(1000)
    sharp = sharp_bound()
    assert scan.max_G < LN_7_6
    assert sharp - 1e-2 <= scan.max_G <= sharp + 1e-4
    assert math.pi / 2 < scan.r < R_M


def test_solver_cross_validation():
    cfg = OdeSolverConfig()
    for r in np.linspace(0.05, math.pi + 0.1, 12):
        for t in (1.0, 5.0):
            a = flows.radial_flow(r, t, cfg).y[0]
            b = flows.radial_flow(r, t, cfg.halved()).y[0]
            assert np.all(np.abs(a - b) < 1e-8)


def test_constants():
    c = constants()
    assert math.pi / 2 < c.r_M < math.pi
    assert 0 < c.sharp_bound < c.ln76 < 0.1542
    assert 0 < c.g_max < 0.1
    assert c.sharp_bound == pytest.approx(0.14709210204601, abs=1e-12)


def test_g_profile_crossings():
    prof = g_profile(10_000)
    assert len(prof.crossings) == 2
    assert abs(prof.crossings[0] - math.pi / 2) < 1e-6 and abs(prof.crossings[1] - R_M) < 1e-6
    assert 0 < prof.max_g < 0.1


def test_squeeze_time_and_point(rng):
    assert squeeze_time(math.e, 1.0) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        squeeze_time(1.0, 2.0)
    T = squeeze_time(5.0, 1.0)
    p = [1.7, 0.4, 3.0, 0.2, 0.5]
    img = squeeze_point(5.0, 1.0, 1.0, p)
    assert img[2] == pytest.approx(math.exp(-T) * 3.0, abs=1e-9)
    assert img[3] == p[3]
    factor = img[4] / p[4]
    assert factor == pytest.approx(math.exp(G_value(1.7, T)), abs=1e-9)
    assert factor < 7 / 6


def test_squeeze_fiber_bound(rng):
    scan = sup_G_scan(200)
    pts = np.column_stack([rng.uniform(0, math.pi + 0.1, 300), rng.uniform(0, 6, 300), rng.uniform(-5, 5, 300),
                           rng.uniform(0, 6, 300), rng.uniform(-1, 1, 300)])
    img, factors = squeeze_points(5.0, 1.0, pts)
    assert np.all(np.abs(img[:, 4]) <= math.exp(scan.max_G + 1e-9) * np.abs(pts[:, 4]))
    assert np.all(factors < 7 / 6)


def test_verify_squeeze_pass():
    rep = verify_squeeze(5.0, 1.0, 1.0, 10_000)
    assert rep.passed and rep.samples == 10_000
    assert rep.metrics["max_image_abs_z"] < 1.0


def test_verify_squeeze_identity_time():
    rep = verify_squeeze(1.0, 1.0, 1.0, 200)
    assert rep.passed and rep.metrics["T"] == 0.0 and rep.metrics["max_fiber_factor"] == 1.0


def test_verify_squeeze_adversarial_target():
    rep = verify_squeeze(5.0, 0.05, 1.0, 2000, target_factor=1.01)
    assert rep.status == "FAIL" and rep.witness is not None
    assert abs(rep.witness[0] - math.pi / 2) < 0.1


def test_flow_portrait_attractor():
    times, table = flow_portrait([2.5, 0.5], 50.0, 11)
    assert times[-1] == 50.0
    assert abs(table[-1, 0] - math.pi) < 1e-4 and table[-1, 1] < 1e-4
