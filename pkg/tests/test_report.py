import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from contact_forge.report import ERROR, FAIL, PASS, Report, combine, error_report, reduce_reports

keys = st.sampled_from(["a", "b", "c"])
scalars = st.one_of(st.integers(-3, 3), st.floats(-2, 2, allow_nan=False), st.sampled_from(["x", "y"]))
residuals = st.one_of(st.floats(0, 10, allow_nan=False), st.just(math.inf), st.just(math.nan), st.just(0.0))
witnesses = st.one_of(st.none(), st.lists(st.floats(-1, 1, allow_nan=False), min_size=1, max_size=3))
messages = st.lists(st.sampled_from(["slow", "drift", "pullback residual"]), max_size=2, unique=True)

def make_report(status, params, samples, res, wit, seed, msg, metrics, wall):
    if status != PASS and wit is None and not msg:
        msg = ["drift"]
    return Report("c", status, params, samples, res, wit, wall, seed, "; ".join(msg), metrics)


reports = st.builds(
    make_report,
    st.sampled_from([PASS, FAIL, ERROR]), st.dictionaries(keys, scalars, max_size=3), st.integers(0, 100),
    residuals, witnesses, st.one_of(st.none(), st.integers(0, 9)), messages, st.dictionaries(keys, scalars, max_size=3),
    st.floats(0, 1),
)


def same(x: Report, y: Report) -> bool:
    return repr(x.to_dict(wall_time=False)) == repr(y.to_dict(wall_time=False))


@given(reports, reports)
def test_combine_is_commutative(a, b):
    assert same(combine(a, b), combine(b, a))


@given(reports, reports, reports)
def test_combine_is_associative(a, b, c):
    left, right = combine(combine(a, b), c), combine(a, combine(b, c))
    assert same(left, right)
    assert left.wall_time == pytest.approx(right.wall_time)


@given(reports, reports)
def test_combine_keeps_worst_status_and_sums_samples(a, b):
    out = combine(a, b)
    order = [PASS, FAIL, ERROR]
    assert order.index(out.status) == max(order.index(a.status), order.index(b.status))
    assert out.samples == a.samples + b.samples


def test_combine_takes_larger_residual_with_its_witness():
    a = Report("c", PASS, samples=3, max_residual=1e-9, witness=[1.0])
    b = Report("c", FAIL, samples=4, max_residual=0.5, witness=[2.0], message="too big")
    out = combine(a, b)
    assert (out.status, out.samples, out.max_residual, out.witness, out.message) == (FAIL, 7, 0.5, [2.0], "too big")


def test_combine_keeps_the_failing_witness():
    a = Report("c", FAIL, max_residual=0.1, witness=[1.0], message="bad")
    b = Report("c", PASS, max_residual=0.5)
    out = combine(a, b)
    assert (out.status, out.max_residual, out.witness) == (FAIL, 0.5, [1.0])


@given(reports, reports)
def test_combined_failures_stay_explained(a, b):
    out = combine(a, b)
    assert out.status == PASS or out.witness is not None or out.message


def test_reduce_reports():
    parts = [Report("c", PASS, samples=1, max_residual=float(i)) for i in range(5)]
    assert reduce_reports(parts).max_residual == 4.0


def test_combine_rejects_different_checks():
    with pytest.raises(ValueError):
        combine(Report("a", PASS), Report("b", PASS))


def test_validation():
    with pytest.raises(ValueError):
        Report("c", "MAYBE")
    with pytest.raises(ValueError):
        Report("c", PASS, max_residual=-1.0)
    with pytest.raises(ValueError):
        Report("c", FAIL)


def test_numpy_values_become_plain():
    r = Report("c", PASS, {"n": np.int64(2)}, witness=np.array([1.0, 2.0]), metrics={"m": np.float64(0.5)})
    d = r.to_dict()
    assert type(d["parameters"]["n"]) is int and d["witness"] == [1.0, 2.0] and type(d["metrics"]["m"]) is float


def test_non_finite_values_serialize_as_text():
    d = Report("c", FAIL, max_residual=math.inf, message="diverged", metrics={"x": math.nan}).to_dict()
    assert d["max_residual"] == "inf" and d["metrics"]["x"] == "nan"


def test_error_report():
    r = error_report("c", ZeroDivisionError("boom"), seed=4)
    assert r.status == ERROR and r.message == "ZeroDivisionError: boom" and r.seed == 4
