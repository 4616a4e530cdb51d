"""Named verification checks grouped into suites, plus the runner used by the CLI."""

from __future__ import annotations

import math
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import contact, corpus, dual, embeddings, flows
from .config import SUITES, ScenarioConfig, UserObject
from .contact import (AxisBox, BoxRegion, ContactModel, CubeBundleRegion, ProductRegion, SigmaCSpec,
                      characteristic_foliation_vector, contact_condition_report, make_alpha_ot,
                      make_darboux_product, make_field_X, make_lambda_can, make_ot_product, make_scaling_g,
                      make_standard_form, moser_vector, ot_product_chart, reeb_vector, sweep,
                      verify_conformal_scaling)
from .dual import Dual, new_tag, primal, tangent
from .expr import compile_expr, parse
from .geometry import (Chart, KForm, ScalarField, SmoothMap, VectorField, evaluate_form, exterior_derivative,
                       interior_product, lie_derivative, lift_field, max_coefficient_difference, pullback, wedge,
                       wedge_power)
from .report import ERROR, FAIL, PASS, Report, Stopwatch, error_report

DEFAULTS: dict[str, dict] = {
    "constants": {},
    "g_profile": {"points": 10_000, "r_max": math.pi + 0.1},
    "conformal": {"samples": 1000, "h": 1.0, "tol": 1e-7},
    "contact": {"samples": 1000, "h": 1.0, "c": 1.0, "n": 1},
    "G_bound": {"grid": 1000, "closed_form_radii": 50, "rtol": 1e-10, "atol": 1e-12},
    "squeeze": {"h": 5.0, "h_prime": 1.0, "c": 1.0, "samples": 10_000, "target_factor": 7.0 / 6.0,
                "delta": 0.1, "n": 1, "scan_grid": 0},
    "unwrap": {"orders": [1, 3], "C": 10.0, "epsilon": 0.1, "delta": 0.5, "samples": 1000, "hbars": None},
    "rescale": {"C_OT": 1.0, "delta": 0.1, "n": 1, "samples": 500, "f": "0.3*sin(x)*cos(z)", "rho": 2.0,
                "stretch": 0.5},
    "legendrian": {"n": 2, "samples": 500},
    "calculus": {"samples": 5, "corpus": 100},
    "pointwise": {"samples": 100},
    "user": {},
}


@dataclass(frozen=True)
class Check:
    name: str
    suite: str
    run: Callable[[dict, int], Report]


def check_seed(seed: int, name: str) -> int:
    """Per-check seed: independent of execution order and of the other checks."""
    return int(np.random.SeedSequence([seed, zlib.crc32(name.encode())]).generate_state(1)[0])


# -- constants and g ----------------------------------------------------------

def _constants(p, seed):
    clock = Stopwatch()
    c = flows.constants()
    problems = []
    if not abs(c.r_M - 2.0288) < 5e-4:
        problems.append(f"r_M = {c.r_M:.6f}")
    if not 0.0 < c.sharp_bound < c.ln76 - 5e-3:
        problems.append(f"sharp bound {c.sharp_bound:.6f} not below ln(7/6) - 5e-3")
    if not 0.0 < c.g_max < 0.1:
        problems.append(f"max g = {c.g_max:.6f}")
    residual = max(abs(c.r_M - 2.0288), 0.0)
    return Report("constants", FAIL if problems else PASS, {}, 1, residual, None if not problems else [c.r_M],
                  clock.elapsed, seed, "; ".join(problems), c.as_dict())


def _g_profile(p, seed):
    clock = Stopwatch()
    prof = flows.g_profile(p["points"], p["r_max"])
    r_M = flows.find_r_M()
    expected = (flows.HALF_PI, r_M)
    problems = []
    if not 0.0 < prof.max_g < 0.1:
        problems.append(f"max g = {prof.max_g:.6f}")
    if len(prof.crossings) != 2:
        problems.append(f"{len(prof.crossings)} sign changes")
        residual = math.inf
    else:
        residual = max(abs(a - b) for a, b in zip(prof.crossings, expected))
        if not residual < 1e-6:
            problems.append(f"crossings {prof.crossings}")
    mid = [flows.g_factor(x) for x in (1.0, 0.5 * (expected[0] + expected[1]), 3.0)]
    if not (mid[0] < 0 < mid[1] and mid[2] < 0):
        problems.append("sign pattern is not -, +, -")
    metrics = {"max_g": prof.max_g, "argmax": prof.argmax, "crossings": list(prof.crossings)}
    return Report("g_profile", FAIL if problems else PASS, p, p["points"], residual,
                  [prof.argmax] if problems else None, clock.elapsed, seed, "; ".join(problems), metrics)


# -- conformal scaling and contact conditions ---------------------------------

def _ot_region(h):
    return BoxRegion(h, 0.1, r_min=0.01)


def _conformal_native(p, seed):
    return verify_conformal_scaling(make_field_X(True), make_alpha_ot("polar", True), make_scaling_g(True),
                                    p["samples"], _ot_region(p["h"]), seed, p["tol"], "conformal.native")


def _conformal_expr(p, seed):
    return verify_conformal_scaling(make_field_X(False), make_alpha_ot("polar", False), make_scaling_g(False),
                                    p["samples"], _ot_region(p["h"]), seed, p["tol"], "conformal.expr")


def product_field(n: int) -> VectorField:
    """``X + g Y`` on the product chart, ``Y = sum p_j d/dp_j``."""
    chart = ot_product_chart(n)
    base = make_field_X(True, chart)
    comps = list(base.components)
    for j in range(n):
        k = 3 + n + j
        comps[k] = ScalarField(chart, lambda q, k=k: contact.scaling_factor(q[0]) * q[k])
    return VectorField(chart, comps)


def _conformal_product(p, seed):
    n = 1
    chart = ot_product_chart(n)
    region = ProductRegion((_ot_region(p["h"]), CubeBundleRegion(n, 1.0)))
    return verify_conformal_scaling(product_field(n), make_ot_product(n, True), make_scaling_g(True, chart),
                                    p["samples"], region, seed, p["tol"], "conformal.product")


def _contact_ot(p, seed):
    return contact_condition_report(ContactModel(make_alpha_ot("polar", True), "alpha_ot"), p["samples"],
                                    _ot_region(p["h"]), seed, "contact.ot")


def _contact_axis(p, seed):
    return contact_condition_report(ContactModel(make_alpha_ot("cartesian"), "alpha_ot_cartesian"), p["samples"],
                                    AxisBox.cube(3, 0.5), seed, "contact.axis")


def _contact_product(p, seed):
    n = p["n"]
    region = ProductRegion((_ot_region(p["h"]), CubeBundleRegion(n, p["c"])))
    return contact_condition_report(ContactModel(make_ot_product(n, True), "ot_product"), p["samples"], region,
                                    seed, "contact.ot_product")


def _contact_darboux(p, seed):
    n = p["n"]
    return contact_condition_report(ContactModel(make_darboux_product(n), "darboux_product"), p["samples"],
                                    AxisBox.cube(3 + 2 * n, 1.0), seed, "contact.darboux")


# -- G bound and squeeze ------------------------------------------------------

def _ode_cfg(p):
    return flows.OdeSolverConfig(rtol=p["rtol"], atol=p["atol"])


def _G_scan(p, seed):
    clock = Stopwatch()
    scan = flows.sup_G_scan(p["grid"], _ode_cfg(p))
    sharp = flows.sharp_bound()
    problems = []
    if not scan.max_G < flows.LN_7_6 - 5e-3:
        problems.append(f"sup G = {scan.max_G:.6f} not below ln(7/6) - 5e-3")
    if not sharp - 1e-2 <= scan.max_G <= sharp + 1e-4:
        problems.append(f"sup G = {scan.max_G:.6f} not within 1e-2 below the sharp bound {sharp:.6f}")
    metrics = {"sup_G": scan.max_G, "argmax_r": scan.r, "t_at_max": scan.t, "sharp_bound": sharp,
               "ln76": flows.LN_7_6}
    return Report("G_bound.scan", FAIL if problems else PASS, p, p["grid"], max(scan.max_G - sharp, 0.0),
                  [scan.r] if problems else None, clock.elapsed, seed, "; ".join(problems), metrics)


def _G_closed_form(p, seed):
    cfg = _ode_cfg(p)
    r_M = flows.find_r_M()
    k = p["closed_form_radii"]
    # radii strictly inside (pi/2, r_M]; the left end is a repelling equilibrium
    radii = np.linspace(flows.HALF_PI, r_M, k + 1)[1:]

    def residual(r):
        got = flows.crossing_time(float(r), cfg, r_M).G
        return abs(got - flows.G_closed_form(float(r), r_M))

    return sweep("G_bound.closed_form", radii, residual, 1e-6, p, seed)


def _squeeze(p, seed):
    return flows.verify_squeeze(p["h"], p["h_prime"], p["c"], p["samples"], seed, p["target_factor"],
                                p["delta"], p["n"], scan_grid=p["scan_grid"], check="squeeze")


# -- unwrapping and rescaling -------------------------------------------------

def _unwrap_checks(p) -> list[Check]:
    out = []
    for n in p["orders"]:
        def run(q, seed, n=n):
            hbars = q["hbars"]
            if hbars is not None and len(hbars) != n:
                raise ValueError(f"hbars has {len(hbars)} entries for n = {n}")
            hb = hbars or embeddings.choose_hbars(n, q["epsilon"], q["C"], q["delta"])
            params = embeddings.UnwrapParams(n, hb, q["C"], q["epsilon"], q["delta"])
            return embeddings.verify_unwrap(embeddings.unwrap_map(params), params, q["samples"], seed,
                                            check=f"unwrap.n{n}")
        out.append(Check(f"unwrap.n{n}", "unwrap", run))
    return out


def _rescale(p, seed):
    return embeddings.verify_rescale(p["C_OT"], p["delta"], p["n"], samples=p["samples"], seed=seed,
                                     check="rescale.rescale_st")


def _fiber_rescale(p, seed):
    n = p["n"]
    m = embeddings.named_auxiliary_map("fiber_rescale", p["f"], n)
    chart = m.source
    source = embeddings.conformal_darboux_form(p["f"], n)
    f = lift_field(ScalarField.lift(contact.darboux_chart(1), p["f"]), chart)
    expected = ScalarField(chart, lambda q: dual.exp(f.fn(q))) * make_darboux_product(n)
    pulled = pullback(m, source)
    pts = np.random.default_rng(seed).uniform(-1.0, 1.0, (p["samples"], chart.dim))
    consts = embeddings.darboux_constants(p["f"], seed=seed, rho=p["rho"], delta=p["delta"])
    return sweep("rescale.fiber", pts, lambda q: max_coefficient_difference(pulled, expected, [q])[0], 1e-8,
                 p, seed, consts)


def _stretch(p, seed):
    n = p["n"]
    m = embeddings.named_auxiliary_map("stretch_qp", p["stretch"], n)
    lam = make_lambda_can(n)
    pulled = pullback(m, lam)
    pts = np.random.default_rng(seed).uniform(-1.0, 1.0, (p["samples"], 2 * n))
    return sweep("rescale.stretch", pts, lambda q: max_coefficient_difference(pulled, lam, [q])[0], 1e-12, p, seed)


def _coherence(p, seed):
    n = p["n"]
    params = embeddings.UnwrapParams(n, embeddings.choose_hbars(n, 0.1, 10.0, 0.5), 10.0, 0.1, 0.5)
    u = embeddings.unwrap_map(params)
    r = embeddings.named_auxiliary_map("rescale_st", 2.0, n)
    r = SmoothMap(u.source, u.source, r.fn, r.name)
    alpha = make_ot_product(n)
    two_step = pullback(r, pullback(u, alpha))
    one_step = pullback(u.compose(r), alpha)
    rng = np.random.default_rng(seed)
    pts = embeddings.sample_sigma(params, rng, p["samples"])
    return sweep("rescale.coherence", pts, lambda q: max_coefficient_difference(two_step, one_step, [q])[0],
                 1e-8, {"n": n, "mu": 2.0, "samples": p["samples"]}, seed)


# -- Legendrian embeddings ----------------------------------------------------

def _legendrian_unknot(p, seed):
    return embeddings.verify_legendrian(embeddings.unknot_embedding(p["n"]), p["samples"], seed,
                                        check="legendrian.unknot")


def _legendrian_deformed(p, seed):
    return embeddings.verify_legendrian(embeddings.deformed_sphere_embedding(p["n"]), p["samples"], seed,
                                        check="legendrian.deformed")


def _legendrian_isotopy(p, seed):
    return embeddings.isotopy_family_report(p["n"], samples=max(1, p["samples"] // 5), seed=seed,
                                            check="legendrian.isotopy")


# -- exterior calculus properties ---------------------------------------------

def _form_residual(a: KForm, point) -> float:
    return max((abs(float(primal(c))) for c in a.values(point).values()), default=0.0)


def _corpus_sweep(name, p, seed, build, residual, tol, dim=4):
    rng = np.random.default_rng(seed)
    chart = corpus.random_chart(dim)
    items = []
    for _ in range(p["corpus"]):
        obj = build(rng, chart)
        for q in corpus.random_points(rng, chart, p["samples"]):
            items.append((obj, q))
    return sweep(name, items, lambda it: residual(it[0], it[1]), tol,
                 {"corpus": p["corpus"], "samples": p["samples"], "dim": dim}, seed)


def _calc_dd(p, seed):
    def build(rng, chart):
        return exterior_derivative(exterior_derivative(corpus.random_form(rng, chart, int(rng.integers(0, 3)))))
    return _corpus_sweep("calculus.dd", p, seed, build, _form_residual, 1e-10)


def _calc_naturality(p, seed):
    src = corpus.random_chart(3, "src")

    def build(rng, chart):
        m = corpus.random_map(rng, src, chart)
        a = corpus.random_form(rng, chart, int(rng.integers(0, 3)))
        return pullback(m, exterior_derivative(a)) - exterior_derivative(pullback(m, a))

    rng = np.random.default_rng(seed)
    chart = corpus.random_chart(4)
    items = []
    for _ in range(p["corpus"]):
        obj = build(rng, chart)
        for q in corpus.random_points(rng, src, p["samples"]):
            items.append((obj, q))
    return sweep("calculus.naturality", items, lambda it: _form_residual(*it), 1e-6,
                 {"corpus": p["corpus"], "samples": p["samples"]}, seed)


def _calc_leibniz(p, seed):
    def build(rng, chart):
        k, l = (int(x) for x in rng.integers(0, 3, 2))
        a, b = corpus.random_form(rng, chart, k), corpus.random_form(rng, chart, min(l, chart.dim - 1 - k))
        lhs = exterior_derivative(wedge(a, b))
        rhs = wedge(exterior_derivative(a), b) + (-1.0) ** a.degree * wedge(a, exterior_derivative(b))
        return lhs - rhs
    return _corpus_sweep("calculus.leibniz", p, seed, build, _form_residual, 1e-8)


def _calc_graded(p, seed):
    def build(rng, chart):
        k, l = (int(x) for x in rng.integers(0, 3, 2))
        return corpus.random_form(rng, chart, k), corpus.random_form(rng, chart, l)

    def residual(pair, q):
        a, b = pair
        u = wedge(a, b).values(q)
        v = ((-1.0) ** (a.degree * b.degree) * wedge(b, a)).values(q)
        return 0.0 if u == v else math.inf

    # PASS requires bitwise equality
    return _corpus_sweep("calculus.graded_commutativity", p, seed, build, residual, 1e-300)


def _calc_functoriality(p, seed):
    c1, c2 = corpus.random_chart(3, "c1"), corpus.random_chart(3, "c2")

    def build(rng, chart):
        m1 = corpus.random_map(rng, c1, c2)
        m2 = corpus.random_map(rng, c2, chart)
        a = corpus.random_form(rng, chart, int(rng.integers(1, 4)))
        return pullback(m2.compose(m1), a) - pullback(m1, pullback(m2, a))

    rng = np.random.default_rng(seed)
    chart = corpus.random_chart(4)
    items = []
    for _ in range(p["corpus"]):
        obj = build(rng, chart)
        for q in corpus.random_points(rng, c1, p["samples"]):
            items.append((obj, q))
    return sweep("calculus.functoriality", items, lambda it: _form_residual(*it), 1e-8,
                 {"corpus": p["corpus"], "samples": p["samples"]}, seed)


def central_difference(fn, point, i: int, step: float = 1e-6) -> float:
    up, down = list(point), list(point)
    up[i] += step
    down[i] -= step
    return (float(fn(up)) - float(fn(down))) / (2.0 * step)


def _calc_ad_fd(p, seed):
    rng = np.random.default_rng(seed)
    names = ("u0", "u1", "u2")
    items = []
    for _ in range(p["corpus"]):
        fn = compile_expr(parse(corpus.random_expression(rng, names, 3)), names)
        items.append((fn, rng.uniform(-1.0, 1.0, 3), int(rng.integers(0, 3))))

    def residual(item):
        fn, q, i = item
        tag = new_tag()
        pt = [Dual(x, 1.0 if k == i else 0.0, tag) for k, x in enumerate(q)]
        ad = float(tangent(fn(pt), tag))
        fd = central_difference(fn, q, i)
        return abs(ad - fd) / (1.0 + abs(ad))

    return sweep("calculus.ad_vs_fd", items, residual, 1e-6, {"corpus": p["corpus"], "step": 1e-6}, seed)


def _calc_lie_flow(p, seed):
    t = 1e-5

    def build(rng, chart):
        v = corpus.random_vector_field(rng, chart, 1)
        a = corpus.random_form(rng, chart, int(rng.integers(0, 3)), depth=1)
        return lie_derivative(v, a) - (1.0 / t) * (pullback(flows.flow_map(v, t, 2), a) - a)

    return _corpus_sweep("calculus.lie_vs_flow", {**p, "corpus": max(1, p["corpus"] // 5)}, seed, build,
                         _form_residual, 1e-4, dim=3)


# -- pointwise solvers --------------------------------------------------------

def disk_chart() -> Chart:
    return Chart("disk", ("r", "theta"), lambda q: q[0] > contact.POLAR_R_MIN, (False, True))


def _foliation_disk(p, seed):
    chart = disk_chart()
    beta = KForm.one_form(chart, {"theta": ScalarField(chart, lambda q: q[0] * dual.sin(q[0]))})
    dvol = KForm.volume(chart, ScalarField.coordinate(chart, "r"))
    radii = np.linspace(0.01, math.pi, p["samples"])

    def residual(r):
        X = characteristic_foliation_vector(beta, dvol, [r, 0.7])
        return float(np.max(np.abs(X - [math.sin(r), 0.0])))

    return sweep("pointwise.foliation_disk", radii, residual, 1e-8, p, seed)


def _foliation_sigma(p, seed):
    spec = SigmaCSpec(2.0, 2)
    chart, beta, dvol = spec.chart, spec.beta(), spec.volume()
    eta = wedge(beta, wedge_power(exterior_derivative(beta), chart.dim // 2 - 1))
    rng = np.random.default_rng(seed)
    pts = np.column_stack([rng.uniform(0.01, math.pi, p["samples"]), rng.uniform(0, 2 * math.pi, p["samples"]),
                           rng.uniform(-2, 2, (p["samples"], 4))])

    def residual(q):
        X = characteristic_foliation_vector(beta, dvol, q)
        lhs = interior_product(VectorField(chart, list(X)), dvol).values(q)
        rhs = eta.values(q)
        return max(abs(lhs.get(I, 0.0) - rhs.get(I, 0.0)) for I in set(lhs) | set(rhs))

    return sweep("pointwise.foliation_sigma", pts, residual, 1e-9, p, seed)


def frame(dim: int) -> list[np.ndarray]:
    return list(np.eye(dim))


def reeb_residual(alpha: KForm, point, R) -> float:
    d_alpha = exterior_derivative(alpha)
    out = abs(evaluate_form(alpha, point, [R]) - 1.0)
    for e in frame(alpha.chart.dim):
        out = max(out, abs(evaluate_form(d_alpha, point, [R, e])))
    return out


def moser_residual(alpha0: KForm, alpha1: KForm, tau: float, point, X) -> float:
    alpha = (1.0 - tau) * alpha0 + tau * alpha1
    adot = alpha1 - alpha0
    R = reeb_vector(ContactModel(alpha), point)
    f = evaluate_form(adot, point, [R])
    d_alpha = exterior_derivative(alpha)
    out = abs(evaluate_form(alpha, point, [X]))
    for e in frame(alpha.chart.dim):
        want = f * evaluate_form(alpha, point, [e]) - evaluate_form(adot, point, [e])
        out = max(out, abs(evaluate_form(d_alpha, point, [X, e]) - want))
    return out


def _moser(p, seed):
    rng = np.random.default_rng(seed)
    items = []
    for k in range(p["samples"]):
        if k % 2:
            alpha0, region = make_standard_form(1), AxisBox.cube(3, 1.0)
        else:
            alpha0, region = make_alpha_ot("polar", True), _ot_region(1.0)
        chart = alpha0.chart
        a, b = rng.uniform(-0.5, 0.5, 2)
        w = rng.uniform(-1.0, 1.0, chart.dim)
        phase = ScalarField(chart, lambda q, w=w, a=a, b=b: dual.exp(a * dual.sin(sum(wi * qi for wi, qi in zip(w, q)) + b)))
        alpha1 = phase * alpha0
        items.append((alpha0, alpha1, float(rng.uniform(0, 1)), region.sample(rng, 1)[0]))

    def residual(item):
        alpha0, alpha1, tau, q = item
        return moser_residual(alpha0, alpha1, tau, q, moser_vector(alpha0, alpha1, tau, q))

    return sweep("pointwise.moser", items, residual, 1e-9, p, seed)


def _reeb(p, seed):
    rng = np.random.default_rng(seed)
    k = max(1, p["samples"] // 4)
    cases = [
        (make_alpha_ot("polar", True), _ot_region(1.0)),
        (make_alpha_ot("cartesian"), AxisBox.cube(3, 0.5)),
        (make_ot_product(1, True), ProductRegion((_ot_region(1.0), CubeBundleRegion(1, 1.0)))),
        (make_darboux_product(2), AxisBox.cube(7, 1.0)),
    ]
    items = [(alpha, q) for alpha, region in cases for q in region.sample(rng, k)]

    def residual(item):
        alpha, q = item
        return reeb_residual(alpha, q, reeb_vector(ContactModel(alpha), q))

    return sweep("pointwise.reeb", items, residual, 1e-9, {"samples": len(items)}, seed)


# -- user objects -------------------------------------------------------------

def _user_box(u: UserObject, dim: int) -> AxisBox:
    hw = float(u.values["half_width"].raw) if "half_width" in u.values else 1.0
    center = u.values["center"].raw if "center" in u.values else [0.0] * dim
    center = [float(x) for x in (center if isinstance(center, list) else [center])]
    if len(center) != dim:
        raise ValueError(f"center needs {dim} entries")
    return AxisBox(tuple(center), (hw,) * dim)


def _names(v) -> tuple[str, ...]:
    return tuple(str(x) for x in (v.raw if isinstance(v.raw, list) else [v.raw]))


def user_check(u: UserObject) -> Check:
    samples = int(u.values["samples"].raw) if "samples" in u.values else 200
    if u.kind == "form":
        def run(p, seed):
            names = _names(u.values["coordinates"])
            chart = Chart(f"user_{u.name}", names)
            coeffs = {k[1:]: v.raw for k, v in u.values.items() if k.startswith("d") and k[1:] in names}
            alpha = KForm.one_form(chart, coeffs)
            return contact_condition_report(ContactModel(alpha, u.name), samples, _user_box(u, chart.dim), seed,
                                            f"user.form.{u.name}")
        return Check(f"user.form.{u.name}", "user", run)

    def run(p, seed):
        src = Chart(f"user_{u.name}_source", _names(u.values["source"]))
        tgt = Chart(f"user_{u.name}_target", _names(u.values["target"]))
        m = SmoothMap.from_exprs(src, tgt, {n: u.values[n].raw for n in tgt.coordinate_names}, u.name)
        form = {k[5:]: v.raw for k, v in u.values.items() if k.startswith("form.")}
        want = {k[9:]: v.raw for k, v in u.values.items() if k.startswith("expected.")}
        a = KForm.one_form(tgt, form) if form else KForm.zero(tgt, 1)
        b = KForm.one_form(src, want) if want else KForm.zero(src, 1)
        tol = float(u.values["tol"].raw) if "tol" in u.values else 1e-8
        pulled = pullback(m, a)
        pts = _user_box(u, src.dim).sample(np.random.default_rng(seed), samples)
        return sweep(f"user.map.{u.name}", pts, lambda q: max_coefficient_difference(pulled, b, [q])[0], tol,
                     {"map": u.name, "samples": samples, "tol": tol}, seed)

    return Check(f"user.map.{u.name}", "user", run)


# -- registry and runner ------------------------------------------------------

_STATIC: dict[str, list[tuple[str, Callable]]] = {
    "constants": [("constants", _constants)],
    "g_profile": [("g_profile", _g_profile)],
    "conformal": [("conformal.native", _conformal_native), ("conformal.expr", _conformal_expr),
                  ("conformal.product", _conformal_product)],
    "contact": [("contact.ot", _contact_ot), ("contact.axis", _contact_axis),
                ("contact.ot_product", _contact_product), ("contact.darboux", _contact_darboux)],
    "G_bound": [("G_bound.scan", _G_scan), ("G_bound.closed_form", _G_closed_form)],
    "squeeze": [("squeeze", _squeeze)],
    "rescale": [("rescale.rescale_st", _rescale), ("rescale.fiber", _fiber_rescale),
                ("rescale.stretch", _stretch), ("rescale.coherence", _coherence)],
    "legendrian": [("legendrian.unknot", _legendrian_unknot), ("legendrian.deformed", _legendrian_deformed),
                   ("legendrian.isotopy", _legendrian_isotopy)],
    "calculus": [("calculus.dd", _calc_dd), ("calculus.naturality", _calc_naturality),
                 ("calculus.leibniz", _calc_leibniz), ("calculus.graded_commutativity", _calc_graded),
                 ("calculus.functoriality", _calc_functoriality), ("calculus.ad_vs_fd", _calc_ad_fd),
                 ("calculus.lie_vs_flow", _calc_lie_flow)],
    "pointwise": [("pointwise.foliation_disk", _foliation_disk),
                   ("pointwise.foliation_sigma", _foliation_sigma),
                   ("pointwise.moser", _moser), ("pointwise.reeb", _reeb)],
}


def suite_parameters(config: ScenarioConfig, suite: str) -> dict:
    return {**DEFAULTS[suite], **config.sections.get(suite, {})}


def checks_for(config: ScenarioConfig, suites=None) -> list[tuple[Check, dict]]:
    """Selected checks with their parameters, in suite order."""
    chosen = list(suites) if suites else config.suites
    for s in chosen:
        if s not in SUITES:
            raise ValueError(f"unknown suite {s!r}")
    out = []
    for suite in SUITES:
        if suite not in chosen:
            continue
        params = suite_parameters(config, suite)
        if suite == "unwrap":
            out.extend((c, params) for c in _unwrap_checks(params))
        elif suite == "user":
            out.extend((user_check(u), {}) for u in config.users)
        else:
            out.extend((Check(name, suite, fn), params) for name, fn in _STATIC[suite])
    return out


def run_check(check: Check, params: dict, seed: int) -> Report:
    s = check_seed(seed, check.name)
    clock = Stopwatch()
    try:
        report = check.run(params, s)
    except Exception as exc:  # noqa: BLE001 - any failure inside a check becomes an ERROR report
        return error_report(check.name, exc, _echo(params), s, clock.elapsed)
    if report.check != check.name:
        report = Report(check.name, report.status, report.parameters, report.samples, report.max_residual,
                        report.witness, report.wall_time, report.seed, report.message, report.metrics)
    return report


def _echo(params: dict) -> dict:
    return {k: v for k, v in params.items() if v is not None}


def run_suites(config: ScenarioConfig, seed: int = 0, suites=None, parallel: bool = False) -> list[Report]:
    """Run the selected checks; the result is sorted by check name whatever the execution order."""
    jobs = checks_for(config, suites)
    if parallel and len(jobs) > 1:
        with ThreadPoolExecutor() as pool:
            reports = list(pool.map(lambda job: run_check(job[0], job[1], seed), jobs))
    else:
        reports = [run_check(c, p, seed) for c, p in jobs]
    return sorted(reports, key=lambda r: r.check)


def exit_code(reports) -> int:
    statuses = {r.status for r in reports}
    if ERROR in statuses:
        return 2
    if FAIL in statuses:
        return 1
    return 0


def resolve_seed(flag: Optional[int], env: Optional[str], config_seed: Optional[int]) -> int:
    """Seed precedence: command-line flag, then the environment, then the config file, then 0."""
    if flag is not None:
        return int(flag)
    if env not in (None, ""):
        return int(env)
    if config_seed is not None:
        return int(config_seed)
    return 0
