"""The squeezing flow, its conformal factor integral, and the derived constants.

The radial part of the flow solves ``r' = f(r)`` with
``f(r) = -r cos r sin r / (r + cos r sin r)``; along a trajectory the contact
form is rescaled by ``exp(G)``, ``G(r, t) = int_0^t g(F(r, s)) ds``.  Both are
carried together as a two-component state so ``G`` inherits the integrator's
error control.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .contact import DEFAULT_DELTA, SERIES_CUTOFF, BoxRegion, CubeBundleRegion
from .errors import DomainError, LeftDomain
from .geometry import ScalarField, SmoothMap, VectorField
from .ode import BatchResult, OdeSolverConfig, dp_step, hermite_max, integrate, integrate_batch, rk4_flow
from .report import FAIL, PASS, Report, Stopwatch
from .roots import bisect, newton, refine_root

HALF_PI = 0.5 * math.pi
LN_7_6 = math.log(7.0 / 6.0)
SCAN_T_CAP = 200.0
SCAN_LIMIT_TOL = 1e-8


# -- vectorized field components ----------------------------------------------

def _cos(r):
    # sin(pi/2 - r) makes the float pi/2 an exact zero of f and g
    return np.sin(HALF_PI - r)


def f_radial(r):
    """Radial speed ``f(r)``; series branch for ``|r| < 1e-4``."""
    r = np.asarray(r, dtype=float)
    cs = _cos(r) * np.sin(r)
    small = np.abs(r) < SERIES_CUTOFF
    with np.errstate(divide="ignore", invalid="ignore"):
        out = -r * cs / (r + cs)
    return np.where(small, -0.5 * r * (1.0 - r * r / 3.0), out)


def g_factor(r):
    """Conformal factor ``g(r)``; series branch for ``|r| < 1e-4``."""
    r = np.asarray(r, dtype=float)
    c, s = _cos(r), np.sin(r)
    small = np.abs(r) < SERIES_CUTOFF
    with np.errstate(divide="ignore", invalid="ignore"):
        out = -c * (r * c + s) / (r + c * s)
    return np.where(small, -(1.0 - 0.5 * r * r), out)


def u_profile(r):
    """``r cos r + sin r``; its root in ``(pi/2, pi)`` is ``r_M``."""
    return r * math.cos(r) + math.sin(r)


def _radial_rhs(t, y):
    r = y[:, 0]
    return np.column_stack([f_radial(r), g_factor(r)])


# -- general flows ------------------------------------------------------------

@dataclass(frozen=True)
class FlowResult:
    end_point: np.ndarray
    G: float
    t: float
    steps: int
    accepted: int
    rejected: int


def integrate_flow(v: VectorField, point, T: float, cfg: Optional[OdeSolverConfig] = None,
                   scalar: Optional[ScalarField] = None) -> FlowResult:
    """Flow ``point`` along ``v`` for time ``T``; integrate ``scalar`` along the path into ``G``."""
    if not math.isfinite(T):
        raise ValueError("T must be finite")
    chart = v.chart
    if scalar is not None and scalar.chart != chart:
        from .errors import ChartMismatch
        raise ChartMismatch("scalar field lives on another chart")
    if not chart.contains(point):
        raise LeftDomain(f"start point {list(map(float, point))} outside chart {chart.name!r}")
    direction = 1.0 if T >= 0 else -1.0
    dim = chart.dim

    def rhs(t, y):
        out = np.empty_like(y)
        for k, row in enumerate(y):
            out[k, :dim] = v.at(row[:dim])
            out[k, dim] = scalar.value(row[:dim]) if scalar is not None else 0.0
        return direction * out

    def stop(rows, t, y):
        for row in y:
            if not chart.contains(row[:dim]):
                raise LeftDomain(f"trajectory left chart {chart.name!r} at {row[:dim].tolist()}")
        return np.zeros(len(rows), bool)

    y0 = np.concatenate([np.asarray(point, dtype=float), [0.0]])
    res = integrate(rhs, y0, abs(T), cfg, stop=stop)
    y = res.y[0]
    return FlowResult(y[:dim].copy(), float(y[dim]), direction * float(res.t[0]),
                      int(res.accepted[0] + res.rejected[0]), int(res.accepted[0]), int(res.rejected[0]))


def flow_map(v: VectorField, t: float, steps: int = 8) -> SmoothMap:
    """Time-``t`` flow of ``v`` by fixed-step RK4; differentiable through duals."""
    return SmoothMap(v.chart, v.chart, lambda p: rk4_flow(v, p, t, steps), f"flow[{t:g}]")


# -- radial flow --------------------------------------------------------------

def _check_radius(r):
    r = np.asarray(r, dtype=float)
    if np.any(~np.isfinite(r)) or np.any(r < 0):
        raise DomainError("radius must be finite and non-negative")
    return r


def radial_flow(r0, t, cfg: Optional[OdeSolverConfig] = None, **kw) -> BatchResult:
    """Integrate the (F, G) state for every initial radius in ``r0``."""
    r0 = np.atleast_1d(_check_radius(r0))
    if np.any(np.asarray(t) < 0):
        raise ValueError("t must be non-negative")
    y0 = np.column_stack([r0, np.zeros_like(r0)])
    return integrate_batch(_radial_rhs, y0, t, cfg, **kw)


def radial_F(r: float, t: float, cfg: Optional[OdeSolverConfig] = None) -> float:
    """``F(r, t)``: the radius after flowing for time ``t``."""
    return float(radial_flow(r, t, cfg).y[0, 0])


def G_value(r: float, t: float, cfg: Optional[OdeSolverConfig] = None) -> float:
    """``G(r, t) = int_0^t g(F(r, s)) ds``."""
    return float(radial_flow(r, t, cfg).y[0, 1])


def find_r_M(cfg: Optional[OdeSolverConfig] = None) -> float:
    """Root of ``r cos r + sin r`` in ``(pi/2, pi)``, i.e. ``r = -tan r``."""
    a, b = bisect(u_profile, HALF_PI, math.pi, 1e-3)
    if a == b:
        return a
    return newton(u_profile, lambda r: 2.0 * math.cos(r) - r * math.sin(r), 0.5 * (a + b), 1e-12, a, b)


def sharp_bound(r_M: Optional[float] = None) -> float:
    """``ln(2 r_M sin r_M / pi)``, the supremum of ``G``."""
    r_M = find_r_M() if r_M is None else r_M
    return math.log(2.0 * r_M * math.sin(r_M) / math.pi)


def G_closed_form(r: float, r_M: Optional[float] = None) -> float:
    """``G(r, T_r) = ln(r_M sin r_M / (r sin r))`` for ``r`` in ``(pi/2, r_M]``."""
    r_M = find_r_M() if r_M is None else r_M
    if not HALF_PI < r <= r_M:
        raise DomainError(f"closed form holds on (pi/2, r_M], got r = {r!r}")
    return math.log(r_M * math.sin(r_M) / (r * math.sin(r)))


def _locate_in_step(t0, y0, f0, h, phi, tol=1e-13, max_iter=100):
    """Illinois secant search for the sign change of ``phi(t, y)`` inside one step per row.

    Rows of ``y0`` are states at ``t0`` with ``phi < 0`` there and ``phi >= 0``
    after a step of length ``h``.  Intermediate states come from a single
    Dormand-Prince step of the trial length, which stays within the accepted
    step's error control.  Returns the crossing time offsets and states.
    """
    m = len(t0)
    a = np.zeros(m)
    fa = phi(t0, y0)
    b = np.array(h, dtype=float)
    yb, _, _ = dp_step(_radial_rhs, t0, y0, b, f0)
    fb = phi(t0 + b, yb)
    y_best = yb.copy()
    tau = b.copy()
    active = (fb != 0) & (b - a > tol)
    for _ in range(max_iter):
        if not active.any():
            break
        idx = np.flatnonzero(active)
        denom = fb[idx] - fa[idx]
        c = np.where(denom != 0, b[idx] - fb[idx] * (b[idx] - a[idx]) / np.where(denom != 0, denom, 1.0),
                     0.5 * (a[idx] + b[idx]))
        lo, hi = np.minimum(a[idx], b[idx]), np.maximum(a[idx], b[idx])
        c = np.where((c <= lo) | (c >= hi), 0.5 * (lo + hi), c)
        yc, _, _ = dp_step(_radial_rhs, t0[idx], y0[idx], c, f0[idx])
        fc = phi(t0[idx] + c, yc)
        flip = np.sign(fc) != np.sign(fb[idx])
        # Illinois: halve the retained end's value when the same side repeats
        a_new = np.where(flip, b[idx], a[idx])
        fa_new = np.where(flip, fb[idx], 0.5 * fa[idx])
        a[idx], fa[idx] = a_new, fa_new
        b[idx], fb[idx] = c, fc
        tau[idx] = c
        y_best[idx] = yc
        active[idx] = (fc != 0) & (np.abs(b[idx] - a[idx]) > tol)
    return tau, y_best


@dataclass(frozen=True)
class Crossing:
    time: float
    G: float


def crossing_time(r: float, cfg: Optional[OdeSolverConfig] = None, r_M: Optional[float] = None) -> Crossing:
    """The unique time ``T_r`` with ``F(r, T_r) = r_M`` (for ``r`` in ``(pi/2, r_M]``) and ``G`` there."""
    r_M = find_r_M() if r_M is None else r_M
    if not HALF_PI < r <= r_M:
        raise DomainError(f"crossing time is defined for r in (pi/2, r_M], got {r!r}")
    if r == r_M:
        return Crossing(0.0, 0.0)
    event = {}

    def on_step(rows, t0, y0, f0, t1, y1, f1):
        hit = (y0[:, 0] < r_M) & (y1[:, 0] >= r_M)
        if hit.any() and "t0" not in event:
            k = int(np.flatnonzero(hit)[0])
            event.update(t0=t0[k], y0=y0[k].copy(), f0=f0[k].copy(), h=t1[k] - t0[k])

    def stop(rows, t, y):
        return y[:, 0] >= r_M

    cfg = cfg or OdeSolverConfig()
    radial_flow(r, SCAN_T_CAP, cfg, on_step=on_step, stop=stop)
    if "t0" not in event:
        raise DomainError(f"trajectory from r = {r!r} did not reach r_M before t = {SCAN_T_CAP}")
    tau, y = _locate_in_step(np.array([event["t0"]]), event["y0"][None, :], event["f0"][None, :],
                             np.array([event["h"]]), lambda t, y: y[:, 0] - r_M)
    return Crossing(float(event["t0"] + tau[0]), float(y[0, 1]))


# -- scans --------------------------------------------------------------------

@dataclass(frozen=True)
class ScanResult:
    max_G: float
    r: float
    t: float
    radii: np.ndarray
    row_max: np.ndarray
    row_t: np.ndarray


def limit_radius(r0):
    r0 = np.asarray(r0, dtype=float)
    return np.where(r0 < HALF_PI, 0.0, np.where(r0 > HALF_PI, math.pi, HALF_PI))


def scan_G(radii, cfg: Optional[OdeSolverConfig] = None, t_cap: float = SCAN_T_CAP,
           limit_tol: float = SCAN_LIMIT_TOL) -> ScanResult:
    """Running maximum of ``G(r, .)`` for each radius until its trajectory settles or ``t_cap``."""
    radii = np.atleast_1d(_check_radius(radii))
    limit = limit_radius(radii)
    t_end = np.where(np.abs(radii - limit) < limit_tol, 0.0, t_cap)
    best = np.zeros(len(radii))
    best_t = np.zeros(len(radii))
    peaks = []

    def on_step(rows, t0, y0, f0, t1, y1, f1):
        val, tv = hermite_max(t0, y0[:, 1], f0[:, 1], t1, y1[:, 1], f1[:, 1])
        better = val > best[rows]
        best[rows[better]] = val[better]
        best_t[rows[better]] = tv[better]
        peak = (f0[:, 1] > 0) & (f1[:, 1] <= 0)
        if peak.any():
            peaks.append((rows[peak], t0[peak], y0[peak], f0[peak], (t1 - t0)[peak]))

    def stop(rows, t, y):
        return np.abs(y[:, 0] - limit[rows]) < limit_tol

    radial_flow(radii, t_end, cfg, on_step=on_step, stop=stop)
    if peaks:
        rows = np.concatenate([p[0] for p in peaks])
        t0 = np.concatenate([p[1] for p in peaks])
        y0 = np.concatenate([p[2] for p in peaks])
        f0 = np.concatenate([p[3] for p in peaks])
        h = np.concatenate([p[4] for p in peaks])
        # G' = g(F) changes sign from + to - inside these steps: refine the peak
        tau, y = _locate_in_step(t0, y0, f0, h, lambda t, y: -g_factor(y[:, 0]))
        for k, row in enumerate(rows):
            if y[k, 1] > best[row]:
                best[row] = y[k, 1]
                best_t[row] = t0[k] + tau[k]
    k = int(np.argmax(best))
    return ScanResult(float(best[k]), float(radii[k]), float(best_t[k]), radii, best, best_t)


def sup_G_scan(r_grid_size: int = 1000, cfg: Optional[OdeSolverConfig] = None,
               r_max: float = math.pi + DEFAULT_DELTA) -> ScanResult:
    """Uniform-grid numerical witness for the supremum of ``G`` over ``[0, r_max]``."""
    if r_grid_size < 100:
        raise ValueError("the grid needs at least 100 radii")
    return scan_G(np.linspace(0.0, r_max, r_grid_size), cfg)


@dataclass(frozen=True)
class GProfile:
    r: np.ndarray
    g: np.ndarray
    crossings: tuple[float, ...]
    max_g: float
    argmax: float


def g_profile(points: int = 10_000, r_max: float = math.pi + DEFAULT_DELTA, dead_band: float = 1e-9) -> GProfile:
    """``g`` on a uniform grid of ``[0, r_max]`` with its sign changes refined by bisection."""
    r = np.linspace(0.0, r_max, points)
    g = g_factor(r)
    sign = np.where(np.abs(g) <= dead_band, 0, np.sign(g))
    nz = np.flatnonzero(sign)
    crossings = []
    for i, j in zip(nz[:-1], nz[1:]):
        if sign[i] != sign[j]:
            crossings.append(refine_root(lambda x: float(g_factor(x)), float(r[i]), float(r[j])))
    k = int(np.argmax(g))
    return GProfile(r, g, tuple(crossings), float(g[k]), float(r[k]))


def flow_portrait(radii: Sequence[float], t_end: float = 50.0, points: int = 101,
                  cfg: Optional[OdeSolverConfig] = None) -> tuple[np.ndarray, np.ndarray]:
    """Radii ``F(r_i, t_k)`` on a uniform time grid; returns ``(times, table)`` with one column per radius."""
    times = np.linspace(0.0, t_end, points)
    state = np.column_stack([_check_radius(np.atleast_1d(radii)), np.zeros(len(radii))])
    out = [state[:, 0].copy()]
    for dt in np.diff(times):
        state = integrate_batch(_radial_rhs, state, dt, cfg).y
        out.append(state[:, 0].copy())
    return times, np.array(out)


@dataclass(frozen=True)
class Constants:
    r_M: float
    sharp_bound: float
    ln76: float
    g_max: float
    g_argmax: float

    def as_dict(self) -> dict:
        return {"r_M": self.r_M, "sharp_bound": self.sharp_bound, "ln76": self.ln76,
                "g_max": self.g_max, "g_argmax": self.g_argmax}


def constants() -> Constants:
    from scipy.optimize import minimize_scalar

    r_M = find_r_M()
    res = minimize_scalar(lambda x: -float(g_factor(x)), bounds=(HALF_PI, r_M), method="bounded",
                          options={"xatol": 1e-12})
    return Constants(r_M, sharp_bound(r_M), LN_7_6, float(-res.fun), float(res.x))


# -- squeezing ----------------------------------------------------------------

def squeeze_time(h: float, h_prime: float) -> float:
    if not (h > 0 and h_prime > 0):
        raise ValueError("heights must be positive")
    if h_prime > h:
        raise ValueError("the target height must not exceed the source height")
    return math.log(h / h_prime)


def squeeze_points(h: float, h_prime: float, points: np.ndarray,
                   cfg: Optional[OdeSolverConfig] = None) -> tuple[np.ndarray, np.ndarray]:
    """Images of rows ``(r, theta, z, q..., p...)`` and their fiber factors ``exp(G(r, T))``."""
    T = squeeze_time(h, h_prime)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    n = (pts.shape[1] - 3) // 2
    res = radial_flow(pts[:, 0], T, cfg)
    factor = np.exp(res.y[:, 1])
    out = pts.copy()
    out[:, 0] = res.y[:, 0]
    out[:, 2] = math.exp(-T) * pts[:, 2]
    out[:, 3 + n:] = pts[:, 3 + n:] * factor[:, None]
    return out, factor


def squeeze_point(h: float, h_prime: float, c: float, point, cfg: Optional[OdeSolverConfig] = None) -> np.ndarray:
    """Time-``ln(h/h')`` flow of ``X + g Y`` applied to one point of ``B(h) x D_c``."""
    point = np.asarray(point, dtype=float)
    n = (len(point) - 3) // 2
    if not (abs(point[2]) < h and np.linalg.norm(point[3 + n:]) < c):
        raise DomainError("point is outside B(h) x D_c")
    return squeeze_points(h, h_prime, point, cfg)[0][0]


def verify_squeeze(h: float, h_prime: float, c: float, samples: int, seed: int = 0,
                   target_factor: float = 7.0 / 6.0, delta: float = DEFAULT_DELTA, n: int = 1,
                   cfg: Optional[OdeSolverConfig] = None, scan_grid: int = 0,
                   check: str = "squeeze") -> Report:
    """PASS iff sampled ``B(h) x D_{<c}`` lands in ``B(h') x D_{<target_factor c}`` with ``r < pi + delta``."""
    if samples < 1:
        raise ValueError("samples must be at least 1")
    clock = Stopwatch()
    T = squeeze_time(h, h_prime)
    rng = np.random.default_rng(seed)
    box, fiber = BoxRegion(h, delta, r_min=0.0), CubeBundleRegion(n, c)
    pts = np.hstack([box.sample(rng, samples), fiber.sample(rng, samples)])
    img, factor = squeeze_points(h, h_prime, pts, cfg)
    fiber_norm = np.linalg.norm(img[:, 3 + n:], axis=1)
    bad_r = img[:, 0] >= math.pi + delta
    bad_z = np.abs(img[:, 2]) >= h_prime
    bad_p = fiber_norm >= target_factor * c
    bad = bad_r | bad_z | bad_p
    k = int(np.argmax(factor))
    metrics = {
        "T": T,
        "max_fiber_factor": float(factor[k]),
        "max_factor_radius": float(pts[k, 0]),
        "max_image_radius": float(np.max(img[:, 0])),
        "max_image_abs_z": float(np.max(np.abs(img[:, 2]))),
    }
    if scan_grid:
        scan = sup_G_scan(scan_grid, cfg, math.pi + delta)
        metrics["sup_G_scan"] = scan.max_G
        metrics["empirical_mu0"] = math.exp(scan.max_G)
    params = {"h": h, "h_prime": h_prime, "c": c, "samples": samples, "target_factor": target_factor,
              "delta": delta, "n": n}
    # residual: how far the worst fiber factor sits relative to the allowed one
    residual = float(np.max(factor)) / target_factor
    if bad.any():
        j = int(np.argmax(np.where(bad, factor, -np.inf))) if bad_p.any() else int(np.argmax(bad))
        why = "fiber" if bad_p[j] else ("radius" if bad_r[j] else "height")
        return Report(check, FAIL, params, samples, residual, pts[j], clock.elapsed, seed,
                      f"{why} containment violated: fiber factor {factor[j]:.6f}, image r {img[j, 0]:.6f}",
                      metrics)
    return Report(check, PASS, params, samples, residual, None, clock.elapsed, seed, "", metrics)
