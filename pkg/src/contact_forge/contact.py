"""Model contact forms, sampling regions and pointwise contact-geometric solvers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional, Sequence

import numpy as np

from . import dual
from .dual import primal
from .errors import DegenerateVolume, DomainError, SingularSystem
from .geometry import (
    Chart,
    KForm,
    ScalarField,
    VectorField,
    exterior_derivative,
    lie_derivative,
    lift_form,
    product_chart,
    wedge,
    wedge_power,
)
from .report import FAIL, PASS, Report, Stopwatch

POLAR_R_MIN = 1e-3
SERIES_CUTOFF = 1e-4
DEFAULT_DELTA = 0.1
LSQ_TOL = 1e-9


# -- charts -------------------------------------------------------------------

def polar_chart() -> Chart:
    return Chart("polar", ("r", "theta", "z"), lambda p: p[0] > POLAR_R_MIN, (False, True, False))


def cartesian_chart() -> Chart:
    return Chart("cartesian", ("x", "y", "z"))


def cotangent_chart(n: int, periodic: bool = False) -> Chart:
    if n < 1:
        raise ValueError("n must be at least 1")
    names = tuple(f"q{j}" for j in range(1, n + 1)) + tuple(f"p{j}" for j in range(1, n + 1))
    return Chart(f"torus_cotangent{n}" if periodic else f"cotangent{n}", names, None,
                 (periodic,) * n + (False,) * n)


def darboux_chart(n: int = 1) -> Chart:
    if n == 1:
        return Chart("darboux", ("x", "y", "z"))
    names = tuple(f"x{j}" for j in range(1, n + 1)) + tuple(f"y{j}" for j in range(1, n + 1)) + ("z",)
    return Chart(f"darboux{n}", names)


def polar_to_cartesian():
    from .geometry import SmoothMap
    return SmoothMap.from_exprs(polar_chart(), cartesian_chart(),
                                {"x": "r*cos(theta)", "y": "r*sin(theta)", "z": "z"}, "polar_to_cartesian")


# -- the overtwisted model ----------------------------------------------------

def _cos_sqrt(s):
    """cos(sqrt(s)) for s >= 0, smooth through s = 0."""
    if primal(s) < 1.0:
        acc = 0.0
        for k in range(12, -1, -1):
            acc = acc * (-s) + 1.0 / math.factorial(2 * k)
        return acc
    return dual.cos(dual.sqrt(s))


def _sinc_sqrt(s):
    """sin(u)/u at u = sqrt(s), extended by 1 at the axis."""
    if primal(s) < 1.0:
        acc = 0.0
        for k in range(12, -1, -1):
            acc = acc * (-s) + 1.0 / math.factorial(2 * k + 1)
        return acc
    u = dual.sqrt(s)
    return dual.sin(u) / u


def make_alpha_ot(flavor: str = "polar", native: bool = False) -> KForm:
    """``cos r dz + r sin r dtheta`` in polar or Cartesian coordinates."""
    if flavor == "polar":
        chart = polar_chart()
        if native:
            return KForm.from_fields(chart, 1, {
                (2,): ScalarField(chart, lambda p: dual.cos(p[0])),
                (1,): ScalarField(chart, lambda p: p[0] * dual.sin(p[0])),
            })
        return KForm.one_form(chart, {"z": "cos(r)", "theta": "r*sin(r)"})
    if flavor == "cartesian":
        chart = cartesian_chart()

        def batch(p):
            x, y = p[0], p[1]
            s = x * x + y * y
            k = _sinc_sqrt(s)
            return {(2,): _cos_sqrt(s), (1,): k * x, (0,): -(k * y)}

        return KForm(chart, 1, [(0,), (1,), (2,)], batch)
    raise ValueError(f"unknown flavor {flavor!r}")


def make_lambda_can(n: int) -> KForm:
    """``-sum p_j dq_j`` on the cotangent chart ``(q_1..q_n, p_1..p_n)``."""
    chart = cotangent_chart(n)
    return KForm.from_fields(chart, 1, {(j,): ScalarField(chart, _neg_coord(n + j)) for j in range(n)})


def _neg_coord(i):
    return lambda p: -p[i]


def liouville_field(n: int) -> VectorField:
    """``sum p_j d/dp_j``, which satisfies ``i_Y d(lambda_can) = lambda_can``."""
    chart = cotangent_chart(n)
    return VectorField(chart, [0.0] * n + [ScalarField(chart, _coord(n + j)) for j in range(n)])


def _coord(i):
    return lambda p: p[i]


def make_standard_form(n: int = 1) -> KForm:
    """``dz - sum y_j dx_j`` on the Darboux chart."""
    chart = darboux_chart(n)
    coeffs = {(chart.dim - 1,): 1.0}
    for j in range(n):
        coeffs[(j,)] = ScalarField(chart, _neg_coord(n + j))
    return KForm.from_fields(chart, 1, coeffs)


def ot_product_chart(n: int) -> Chart:
    """``(r, theta, z, q_1..q_n, p_1..p_n)``."""
    return product_chart(f"ot_x_cotangent{n}", polar_chart(), cotangent_chart(n, periodic=True),
                         domain=lambda p: p[0] > POLAR_R_MIN)


def make_ot_product(n: int, native: bool = False) -> KForm:
    """``alpha_OT + lambda_can`` on the product chart."""
    chart = ot_product_chart(n)
    return lift_form(make_alpha_ot("polar", native), chart) + lift_form(make_lambda_can(n), chart)


def darboux_product_chart(m: int) -> Chart:
    """``(x, y, z, q_1..q_m, p_1..p_m)``."""
    return product_chart(f"darboux_x_cotangent{m}", darboux_chart(1), cotangent_chart(m))


def make_darboux_product(m: int) -> KForm:
    """``dz - y dx - sum p_j dq_j``."""
    chart = darboux_product_chart(m)
    return lift_form(make_standard_form(1), chart) + lift_form(make_lambda_can(m), chart)


# -- the squeezing field and its conformal factor -----------------------------

def _cos(r):
    # sin(pi/2 - r) makes the float pi/2 an exact zero of both coefficients
    return dual.sin(0.5 * math.pi - r)


def radial_coefficient(r):
    """``-r cos r sin r / (r + cos r sin r)``; works on floats and duals."""
    if abs(primal(r)) < SERIES_CUTOFF:
        return -0.5 * r * (1.0 - r * r / 3.0)
    cs = _cos(r) * dual.sin(r)
    return -(r * cs) / (r + cs)


def scaling_factor(r):
    """``-cos r (r cos r + sin r) / (r + cos r sin r)``; works on floats and duals."""
    if abs(primal(r)) < SERIES_CUTOFF:
        return -(1.0 - 0.5 * r * r)
    c, s = _cos(r), dual.sin(r)
    return -(c * (r * c + s)) / (r + c * s)


RADIAL_EXPR = "-r*cos(r)*sin(r)/(r + cos(r)*sin(r))"
SCALING_EXPR = "-cos(r)*(r*cos(r) + sin(r))/(r + cos(r)*sin(r))"


def make_field_X(native: bool = True, chart: Optional[Chart] = None) -> VectorField:
    """The contact field ``-z d/dz + f(r) d/dr`` on the polar chart (or a product containing it)."""
    chart = chart or polar_chart()
    ir, iz = chart.index("r"), chart.index("z")
    comps = [0.0] * chart.dim
    if native:
        comps[ir] = ScalarField(chart, lambda p: radial_coefficient(p[ir]))
        comps[iz] = ScalarField(chart, lambda p: -p[iz])
    else:
        comps[ir] = RADIAL_EXPR
        comps[iz] = "-z"
    return VectorField(chart, comps)


def make_scaling_g(native: bool = True, chart: Optional[Chart] = None) -> ScalarField:
    chart = chart or polar_chart()
    if native:
        ir = chart.index("r")
        return ScalarField(chart, lambda p: scaling_factor(p[ir]))
    return ScalarField.from_expr(chart, SCALING_EXPR)


# -- regions ------------------------------------------------------------------

@dataclass(frozen=True)
class BoxRegion:
    """``D^2_{<pi+delta} x (-h, h)`` in polar coordinates, sampled with ``r > r_min``."""

    h: float
    delta: float = DEFAULT_DELTA
    r_min: float = 0.01

    def __post_init__(self):
        if self.h <= 0 or self.delta <= 0:
            raise ValueError("h and delta must be positive")

    @property
    def r_max(self) -> float:
        return math.pi + self.delta

    def contains(self, point) -> bool:
        return 0.0 <= point[0] < self.r_max and abs(point[2]) < self.h

    def sample(self, rng: np.random.Generator, k: int) -> np.ndarray:
        r = rng.uniform(self.r_min, self.r_max, k)
        theta = rng.uniform(0.0, 2.0 * math.pi, k)
        z = rng.uniform(-self.h, self.h, k)
        return np.column_stack([r, theta, z])


@dataclass(frozen=True)
class CubeBundleRegion:
    """``{(q, p) : ||p|| < c}`` with ``q`` in a box (the torus when ``q_range`` is one period)."""

    n: int
    c: float
    q_range: tuple[float, float] = (0.0, 2.0 * math.pi)

    def __post_init__(self):
        if self.c <= 0:
            raise ValueError("c must be positive")
        if self.n < 1:
            raise ValueError("n must be at least 1")

    def contains(self, point) -> bool:
        return float(np.linalg.norm(np.asarray(point[self.n:2 * self.n]))) < self.c

    def sample(self, rng: np.random.Generator, k: int) -> np.ndarray:
        q = rng.uniform(self.q_range[0], self.q_range[1], (k, self.n))
        direction = rng.normal(size=(k, self.n))
        direction /= np.linalg.norm(direction, axis=1, keepdims=True)
        radius = self.c * rng.uniform(0.0, 1.0, k) ** (1.0 / self.n)
        return np.hstack([q, direction * radius[:, None]])


@dataclass(frozen=True)
class AxisBox:
    """Axis-aligned box ``center +- half_widths``."""

    center: tuple[float, ...]
    half_widths: tuple[float, ...]

    @classmethod
    def cube(cls, dim: int, half_width: float = 1.0) -> "AxisBox":
        return cls((0.0,) * dim, (half_width,) * dim)

    def contains(self, point) -> bool:
        return all(abs(x - c) < w for x, c, w in zip(point, self.center, self.half_widths))

    def sample(self, rng: np.random.Generator, k: int) -> np.ndarray:
        c, w = np.asarray(self.center), np.asarray(self.half_widths)
        return c + rng.uniform(-1.0, 1.0, (k, len(c))) * w


@dataclass(frozen=True)
class ProductRegion:
    factors: tuple

    def contains(self, point) -> bool:
        i = 0
        for f, d in self._dims():
            if not f.contains(point[i:i + d]):
                return False
            i += d
        return True

    def _dims(self):
        out = []
        for f in self.factors:
            if isinstance(f, BoxRegion):
                out.append((f, 3))
            elif isinstance(f, CubeBundleRegion):
                out.append((f, 2 * f.n))
            else:
                out.append((f, len(f.center)))
        return out

    def sample(self, rng: np.random.Generator, k: int) -> np.ndarray:
        return np.hstack([f.sample(rng, k) for f in self.factors])


@dataclass(frozen=True)
class SigmaCSpec:
    """The hypersurface ``(r, theta, s_1..s_n, t_1..t_n)`` with ``beta = r sin r dtheta - sum t_j ds_j``."""

    C: float
    n: int

    def __post_init__(self):
        if self.C <= 0:
            raise ValueError("C must be positive")

    @cached_property
    def chart(self) -> Chart:
        names = ("r", "theta") + tuple(f"s{j}" for j in range(1, self.n + 1)) + tuple(f"t{j}" for j in range(1, self.n + 1))
        return Chart(f"sigma{self.n}", names, lambda p: p[0] > POLAR_R_MIN, (False, True) + (False,) * (2 * self.n))

    def beta(self) -> KForm:
        chart, n = self.chart, self.n
        coeffs = {(1,): ScalarField(chart, lambda p: p[0] * dual.sin(p[0]))}
        for j in range(n):
            coeffs[(2 + j,)] = ScalarField(chart, _neg_coord(2 + n + j))
        return KForm.from_fields(chart, 1, coeffs)

    def volume(self) -> KForm:
        """``r dr ^ dtheta ^ ds_1 ^ dt_1 ^ ...`` (the order pairs each ``s_j`` with its ``t_j``)."""
        chart, n = self.chart, self.n
        order = [0, 1] + [k for j in range(n) for k in (2 + j, 2 + n + j)]
        return KForm.from_fields(chart, chart.dim, {tuple(order): ScalarField(chart, _coord(0))})


# -- contact models -----------------------------------------------------------

@dataclass
class ContactModel:
    alpha: KForm
    name: str = ""

    def __post_init__(self):
        if self.alpha.degree != 1:
            raise ValueError("a contact model needs a 1-form")
        if self.chart.dim % 2 == 0:
            raise ValueError("contact charts are odd-dimensional")

    @property
    def chart(self) -> Chart:
        return self.alpha.chart

    @property
    def half_dim(self) -> int:
        return (self.chart.dim - 1) // 2

    @cached_property
    def d_alpha(self) -> KForm:
        return exterior_derivative(self.alpha)

    @cached_property
    def volume_form(self) -> KForm:
        """``alpha ^ (d alpha)^n``."""
        return wedge(self.alpha, wedge_power(self.d_alpha, self.half_dim))

    def top_coefficient(self, point) -> float:
        return self.volume_form.top_coefficient(point)


def _one_form_vector(a: KForm, point) -> np.ndarray:
    v = np.zeros(a.chart.dim)
    for (i,), c in a.values(point).items():
        v[i] = c
    return v


def _two_form_matrix(w: KForm, point) -> np.ndarray:
    """``M[i, j] = w(e_i, e_j)``."""
    m = np.zeros((w.chart.dim, w.chart.dim))
    for (i, j), c in w.values(point).items():
        m[i, j] = c
        m[j, i] = -c
    return m


def _lstsq(A: np.ndarray, b: np.ndarray, what: str) -> np.ndarray:
    x, *_ = np.linalg.lstsq(A, b, rcond=None)
    residual = float(np.max(np.abs(A @ x - b)))
    if not residual < LSQ_TOL:
        raise SingularSystem(f"{what}: least-squares residual {residual:.3e}")
    return x


def _check_point(chart: Chart, point):
    if not chart.contains(point):
        raise DomainError(f"point {list(map(float, point))} outside chart {chart.name!r}")


def reeb_vector(model: ContactModel, point) -> np.ndarray:
    """The unique ``R`` with ``alpha(R) = 1`` and ``i_R d alpha = 0``."""
    _check_point(model.chart, point)
    a = _one_form_vector(model.alpha, point)
    omega = _two_form_matrix(model.d_alpha, point)
    # row i of omega.T @ R is d alpha(R, e_i)
    A = np.vstack([a, omega.T])
    b = np.zeros(len(a) + 1)
    b[0] = 1.0
    return _lstsq(A, b, "Reeb system")


def moser_vector(alpha0: KForm, alpha1: KForm, tau: float, point) -> np.ndarray:
    """Solve ``alpha_tau(X) = 0``, ``d alpha_tau(X, .) = f alpha_tau - alpha_dot`` with ``f = alpha_dot(R_tau)``."""
    if alpha0.chart != alpha1.chart:
        from .errors import ChartMismatch
        raise ChartMismatch("Moser interpolation needs forms on one chart")
    alpha_tau = (1.0 - tau) * alpha0 + tau * alpha1
    model = ContactModel(alpha_tau)
    R = reeb_vector(model, point)
    a = _one_form_vector(alpha_tau, point)
    adot = _one_form_vector(alpha1, point) - _one_form_vector(alpha0, point)
    f = float(adot @ R)
    omega = _two_form_matrix(model.d_alpha, point)
    A = np.vstack([a, omega.T])
    b = np.concatenate([[0.0], f * a - adot])
    return _lstsq(A, b, "Moser system")


def characteristic_foliation_vector(beta: KForm, dvol: KForm, point) -> np.ndarray:
    """``X`` with ``i_X dvol = beta ^ (d beta)^(n-1)`` in the coordinate frame."""
    chart = beta.chart
    dim = chart.dim
    if dim % 2:
        raise ValueError("the hypersurface chart must be even-dimensional")
    if dvol.degree != dim or dvol.chart != chart:
        raise ValueError("dvol must be a top form on the same chart")
    vol = dvol.top_coefficient(point)
    if abs(vol) < 1e-12:
        raise DegenerateVolume(f"|dvol(frame)| = {abs(vol):.3e} at {list(map(float, point))}")
    n = dim // 2
    eta = wedge(beta, wedge_power(exterior_derivative(beta), n - 1)) if n > 1 else beta
    vals = eta.values(point)
    X = np.zeros(dim)
    for i in range(dim):
        idx = tuple(k for k in range(dim) if k != i)
        X[i] = (-1) ** i * vals.get(idx, 0.0) / vol
    return X


# -- reports ------------------------------------------------------------------

def sweep(check: str, points, residual: Callable, tol: float, parameters: dict, seed=None,
          metrics: Optional[dict] = None, message: str = "") -> Report:
    """Max of ``residual(point)`` over ``points``; PASS iff it stays below ``tol``."""
    clock = Stopwatch()
    worst, where = -1.0, None
    count = 0
    for p in points:
        r = float(residual(p))
        count += 1
        if math.isnan(r) or r > worst:
            worst, where = r, p
            if math.isnan(r):
                break
    worst = max(worst, 0.0) if not math.isnan(worst) else worst
    ok = worst < tol
    return Report(check, PASS if ok else FAIL, parameters, count, worst,
                  None if ok else np.asarray(where, dtype=float), clock.elapsed, seed,
                  message if message or ok else f"residual {worst:.3e} exceeds {tol:g}", metrics or {})


def contact_condition_report(model: ContactModel, samples: int, region, seed: int = 0,
                             check: str = "contact") -> Report:
    """Top coefficient of ``alpha ^ (d alpha)^n`` must keep one sign and stay above 1e-10."""
    if samples < 1:
        raise ValueError("samples must be at least 1")
    clock = Stopwatch()
    rng = np.random.default_rng(seed)
    pts = region.sample(rng, samples)
    for p in pts:
        _check_point(model.chart, p)
    vals = np.array([model.top_coefficient(p) for p in pts])
    sign = np.sign(vals[np.argmax(np.abs(vals))])
    bad = (np.abs(vals) <= 1e-10) | (np.sign(vals) != sign)
    params = {"model": model.name or model.chart.name, "samples": samples, "region": repr(region)}
    metrics = {"min_abs_top": float(np.min(np.abs(vals))), "sign": int(sign)}
    if bad.any():
        k = int(np.argmax(bad))
        return Report(check, FAIL, params, samples, float(abs(vals[k])), pts[k], clock.elapsed, seed,
                      f"top coefficient {vals[k]:.3e} at witness", metrics)
    return Report(check, PASS, params, samples, 0.0, None, clock.elapsed, seed, "", metrics)


def conformal_residual(v: VectorField, alpha: KForm, gfield: ScalarField):
    diff = lie_derivative(v, alpha) - gfield * alpha

    def residual(p):
        vals = diff.values(p)
        return max((abs(c) for c in vals.values()), default=0.0)

    return residual


def verify_conformal_scaling(v: VectorField, alpha: KForm, gfield: ScalarField, samples: int,
                             region=None, seed: int = 0, tol: float = 1e-7,
                             check: str = "conformal") -> Report:
    """PASS iff ``|(L_v alpha - g alpha)(e_i)| < tol`` at every sample and frame vector."""
    if region is None:
        region = BoxRegion(1.0) if alpha.chart == polar_chart() else AxisBox.cube(alpha.chart.dim)
    pts = region.sample(np.random.default_rng(seed), samples)
    params = {"samples": samples, "region": repr(region), "tol": tol}
    return sweep(check, pts, conformal_residual(v, alpha, gfield), tol, params, seed)
