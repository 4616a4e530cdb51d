import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from contact_forge import corpus
from contact_forge.contact import (liouville_field, make_alpha_ot, make_field_X, make_lambda_can, make_scaling_g,
                                   polar_chart)
from contact_forge.errors import ArityMismatch, ChartMismatch, DegreeOverflow, DomainError, UnboundSymbol
from contact_forge.flows import flow_map
from contact_forge.geometry import (MAX_DIM, Chart, KForm, ScalarField, SmoothMap, VectorField, evaluate_form,
                                    exterior_derivative, interior_product, lie_derivative,
                                    max_coefficient_difference, pullback, wedge, wedge_power)

R3 = Chart("rtz", ("r", "theta", "z"))


def _max_abs(form, point):
    return max((abs(v) for v in form.values(point).values()), default=0.0)


def fd_exterior_derivative_1form(a: KForm, point, step=1e-6):
    """Central-difference (da)_{ij} = d_i a_j - d_j a_i; independent of the dual machinery."""
    dim = a.chart.dim

    def coeffs(p):
        v = a.values(p)
        return np.array([v.get((j,), 0.0) for j in range(dim)])

    J = np.zeros((dim, dim))
    for i in range(dim):
        up, down = np.array(point, float), np.array(point, float)
        up[i] += step
        down[i] -= step
        J[i] = (coeffs(up) - coeffs(down)) / (2 * step)
    return {(i, j): J[i, j] - J[j, i] for i in range(dim) for j in range(i + 1, dim)}


def test_basic_wedges():
    dr, dth = KForm.one_form(R3, {"r": 1}), KForm.one_form(R3, {"theta": 1})
    assert wedge(dr, dth).values([1, 2, 3]) == {(0, 1): 1.0}
    assert wedge(dth, dr).values([1, 2, 3]) == {(0, 1): -1.0}


def test_alpha_wedge_d_alpha(rng):
    alpha = make_alpha_ot()
    top = wedge(alpha, exterior_derivative(alpha))
    for r, th, z in zip(rng.uniform(0.01, math.pi + 0.1, 200), rng.uniform(0, 6, 200), rng.uniform(-1, 1, 200)):
        want = r + math.cos(r) * math.sin(r)
        assert evaluate_form(top, [r, th, z], list(np.eye(3))) == pytest.approx(want, abs=1e-12)


def test_d_of_z_dr():
    a = KForm.one_form(R3, {"r": "z"})
    assert exterior_derivative(a).values([0.5, 0.1, 2.0]) == {(0, 2): -1.0}


def test_d_alpha_matches_hand_and_finite_difference(rng):
    alpha = make_alpha_ot()
    da = exterior_derivative(alpha)
    for p in np.column_stack([rng.uniform(0.1, 3.2, 50), rng.uniform(0, 6, 50), rng.uniform(-1, 1, 50)]):
        r = p[0]
        got = da.values(p)
        assert got.get((0, 2), 0.0) == pytest.approx(-math.sin(r), abs=1e-14)
        assert got.get((0, 1), 0.0) == pytest.approx(math.sin(r) + r * math.cos(r), abs=1e-14)
        assert got.get((1, 2), 0.0) == 0.0
        fd = fd_exterior_derivative_1form(alpha, p)
        for k, v in fd.items():
            assert got.get(k, 0.0) == pytest.approx(v, abs=1e-8)


def test_dd_alpha_vanishes(rng):
    dd = exterior_derivative(exterior_derivative(make_alpha_ot()))
    for p in np.column_stack([rng.uniform(0.1, 3.2, 50), rng.uniform(0, 6, 50), rng.uniform(-1, 1, 50)]):
        assert _max_abs(dd, p) <= 1e-10


def test_interior_products():
    dr_dth = KForm.from_exprs(R3, {("r", "theta"): 1})
    assert interior_product(VectorField.coordinate(R3, "r"), dr_dth).values([1, 0, 0]) == {(1,): 1.0}
    dr = KForm.one_form(R3, {"r": 1})
    assert interior_product(VectorField.coordinate(R3, "theta"), dr).values([1, 0, 0]) == {}


def test_liouville_condition(rng):
    lam = make_lambda_can(2)
    Y = liouville_field(2)
    diff = interior_product(Y, exterior_derivative(lam)) - lam
    for p in rng.uniform(-2, 2, (100, 4)):
        assert _max_abs(diff, p) < 1e-10


def test_conformal_identity_at_a_point():
    p = [1.0, 0.3, 0.2]
    alpha = make_alpha_ot()
    lhs = lie_derivative(make_field_X(), alpha).values(p)
    g = make_scaling_g().value(p)
    rhs = alpha.values(p)
    for k in set(lhs) | set(rhs):
        assert abs(lhs.get(k, 0.0) - g * rhs.get(k, 0.0)) < 1e-8


def test_lie_of_dz_along_dz():
    dz = KForm.one_form(R3, {"z": 1})
    assert _max_abs(lie_derivative(VectorField.coordinate(R3, "z"), dz), [1, 2, 3]) == 0.0


@given(st.integers(0, 10_000))
def test_lie_derivative_matches_flow_difference(seed):
    rng = np.random.default_rng(seed)
    chart = corpus.random_chart(3)
    v = corpus.random_vector_field(rng, chart, 1)
    a = corpus.random_form(rng, chart, int(rng.integers(0, 3)), depth=1)
    t = 1e-5
    fd = (1.0 / t) * (pullback(flow_map(v, t, 2), a) - a)
    p = corpus.random_points(rng, chart, 1)[0]
    assert _max_abs(lie_derivative(v, a) - fd, p) < 1e-4


def test_identity_pullback(rng):
    alpha = make_alpha_ot()
    pulled = pullback(SmoothMap.identity(polar_chart()), alpha)
    pts = np.column_stack([rng.uniform(0.1, 3, 20), rng.uniform(0, 6, 20), rng.uniform(-1, 1, 20)])
    assert max_coefficient_difference(pulled, alpha, pts)[0] == 0.0


@pytest.mark.parametrize("vectors, want", [([[1, 0, 0], [0, 1, 0]], 1.0), ([[0, 1, 0], [1, 0, 0]], -1.0)])
def test_evaluate_two_form(vectors, want):
    assert evaluate_form(KForm.from_exprs(R3, {("r", "theta"): 1}), [1, 0, 0], vectors) == want


def test_alpha_on_dz_at_pi():
    assert evaluate_form(make_alpha_ot(), [math.pi, 0.0, 0.0], [[0, 0, 1]]) == pytest.approx(-1.0, abs=1e-15)


@given(st.integers(0, 10_000))
def test_equal_vectors_give_zero(seed):
    rng = np.random.default_rng(seed)
    chart = corpus.random_chart(4)
    a = corpus.random_form(rng, chart, 2)
    p = corpus.random_points(rng, chart, 1)[0]
    v = rng.normal(size=4)
    w = rng.normal(size=4)
    scale = max(1.0, max(abs(c) for c in a.values(p).values()) if a.values(p) else 1.0)
    assert abs(evaluate_form(a, p, [v, v])) <= 1e-12 * scale * np.dot(v, v)
    assert evaluate_form(a, p, [v, w]) == pytest.approx(-evaluate_form(a, p, [w, v]), abs=1e-12 * scale * 10)


def test_errors():
    other = Chart("other", ("a", "b", "c"))
    dr = KForm.one_form(R3, {"r": 1})
    with pytest.raises(ChartMismatch):
        wedge(dr, KForm.one_form(other, {"a": 1}))
    with pytest.raises(DegreeOverflow):
        wedge(KForm.from_exprs(R3, {("r", "theta"): 1}), KForm.from_exprs(R3, {("theta", "z"): 1}))
    with pytest.raises(DegreeOverflow):
        exterior_derivative(KForm.volume(R3))
    with pytest.raises(DegreeOverflow):
        interior_product(VectorField.coordinate(R3, "r"), KForm.from_fields(R3, 0, {(): 1.0}))
    with pytest.raises(ArityMismatch):
        evaluate_form(dr, [1, 0, 0], [])
    with pytest.raises(DomainError):
        evaluate_form(make_alpha_ot(), [1e-4, 0, 0], [[1, 0, 0]])
    with pytest.raises(UnboundSymbol):
        KForm.one_form(R3, {"w": 1})
    with pytest.raises(ValueError):
        Chart("big", tuple(f"x{i}" for i in range(MAX_DIM + 1)))
    with pytest.raises(ValueError):
        Chart("dup", ("x", "x"))


def test_wedge_power_of_zero_factors_is_one():
    assert wedge_power(KForm.one_form(R3, {"r": 1}), 0).values([1, 1, 1]) == {(): 1.0}


def test_scalar_field_partials():
    f = ScalarField.from_expr(R3, "r^2*z")
    assert f.partial(0).value([3.0, 0.0, 2.0]) == 12.0
    assert f.partial(2).value([3.0, 0.0, 2.0]) == 9.0


# -- randomized calculus properties -------------------------------------------

@given(st.integers(0, 10_000), st.integers(0, 2))
def test_dd_zero(seed, k):
    rng = np.random.default_rng(seed)
    chart = corpus.random_chart(4)
    a = corpus.random_form(rng, chart, k)
    for p in corpus.random_points(rng, chart, 3):
        assert _max_abs(exterior_derivative(exterior_derivative(a)), p) <= 1e-10


@given(st.integers(0, 10_000))
def test_naturality(seed):
    rng = np.random.default_rng(seed)
    src, tgt = corpus.random_chart(3, "s"), corpus.random_chart(4, "t")
    m = corpus.random_map(rng, src, tgt)
    a = corpus.random_form(rng, tgt, int(rng.integers(0, 3)))
    diff = pullback(m, exterior_derivative(a)) - exterior_derivative(pullback(m, a))
    for p in corpus.random_points(rng, src, 3):
        assert _max_abs(diff, p) < 1e-6


@given(st.integers(0, 10_000))
def test_functoriality(seed):
    rng = np.random.default_rng(seed)
    c1, c2, c3 = (corpus.random_chart(3, n) for n in "abc")
    m1, m2 = corpus.random_map(rng, c1, c2), corpus.random_map(rng, c2, c3)
    a = corpus.random_form(rng, c3, int(rng.integers(0, 4)))
    diff = pullback(m2.compose(m1), a) - pullback(m1, pullback(m2, a))
    for p in corpus.random_points(rng, c1, 3):
        assert _max_abs(diff, p) < 1e-8


@given(st.integers(0, 10_000))
def test_graded_commutativity_is_exact(seed):
    rng = np.random.default_rng(seed)
    chart = corpus.random_chart(5)
    k, l = (int(x) for x in rng.integers(0, 3, 2))
    a, b = corpus.random_form(rng, chart, k), corpus.random_form(rng, chart, l)
    p = corpus.random_points(rng, chart, 1)[0]
    assert wedge(a, b).values(p) == ((-1.0) ** (k * l) * wedge(b, a)).values(p)


@given(st.integers(0, 10_000))
def test_leibniz(seed):
    rng = np.random.default_rng(seed)
    chart = corpus.random_chart(4)
    k = int(rng.integers(0, 3))
    a, b = corpus.random_form(rng, chart, k), corpus.random_form(rng, chart, int(rng.integers(0, 4 - k)))
    lhs = exterior_derivative(wedge(a, b))
    rhs = wedge(exterior_derivative(a), b) + (-1.0) ** k * wedge(a, exterior_derivative(b))
    for p in corpus.random_points(rng, chart, 3):
        assert _max_abs(lhs - rhs, p) < 1e-8


@given(st.integers(0, 10_000), st.floats(-3, 3), st.floats(-3, 3))
def test_wedge_bilinear(seed, s, t):
    rng = np.random.default_rng(seed)
    chart = corpus.random_chart(4)
    a1, a2 = corpus.random_form(rng, chart, 1), corpus.random_form(rng, chart, 1)
    b = corpus.random_form(rng, chart, 2)
    lhs = wedge(s * a1 + t * a2, b)
    rhs = s * wedge(a1, b) + t * wedge(a2, b)
    p = corpus.random_points(rng, chart, 1)[0]
    scale = 1.0 + _max_abs(wedge(a1, b), p) + _max_abs(wedge(a2, b), p)
    assert _max_abs(lhs - rhs, p) <= 1e-12 * scale * 10
