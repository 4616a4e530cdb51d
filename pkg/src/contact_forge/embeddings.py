"""Explicit maps into the model contact manifolds and their verification."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from . import dual
from .contact import (
    ContactModel,
    SigmaCSpec,
    cotangent_chart,
    darboux_chart,
    darboux_product_chart,
    make_darboux_product,
    make_lambda_can,
    make_ot_product,
    make_standard_form,
    ot_product_chart,
    sweep,
)
from .dual import Dual, new_tag, primal, tangent
from .errors import DegenerateParametrization, UnknownKind
from .geometry import (
    Chart,
    KForm,
    ScalarField,
    SmoothMap,
    lift_field,
    lift_form,
    max_coefficient_difference,
    pullback,
)
from .report import FAIL, PASS, Report, Stopwatch

RANK_TOL = 1e-8


def first_primes(n: int) -> list[int]:
    primes: list[int] = []
    k = 2
    while len(primes) < n:
        if all(k % p for p in primes if p * p <= k):
            primes.append(k)
        k += 1
    return primes


# -- torus unwrapping ---------------------------------------------------------

@dataclass(frozen=True)
class UnwrapParams:
    """Slopes ``hbar_j`` and the box sizes they must respect.

    ``sum(hbars) <= epsilon / C`` keeps ``|z| < epsilon`` on ``|s_j| < C``;
    ``hbar_j < delta / (2 sqrt n)`` keeps the fiber norm below ``delta``.
    """

    n: int
    hbars: tuple[float, ...]
    C: float
    epsilon: float
    delta: float

    def __post_init__(self):
        object.__setattr__(self, "hbars", tuple(float(h) for h in self.hbars))
        if self.n < 1 or len(self.hbars) != self.n:
            raise ValueError(f"need exactly n = {self.n} slopes, got {len(self.hbars)}")
        if min(self.C, self.epsilon, self.delta) <= 0 or min(self.hbars) <= 0:
            raise ValueError("C, epsilon, delta and every hbar must be positive")
        # equality is allowed: |s_j| < C is strict
        if sum(self.hbars) > self.epsilon / self.C * (1 + 1e-15):
            raise ValueError(f"sum of hbars {sum(self.hbars)!r} exceeds epsilon/C = {self.epsilon / self.C!r}")
        cap = self.delta / (2.0 * math.sqrt(self.n))
        if max(self.hbars) >= cap:
            raise ValueError(f"hbar {max(self.hbars)!r} must stay below delta/(2 sqrt n) = {cap!r}")

    @property
    def t_half_width(self) -> float:
        return self.delta / (2.0 * math.sqrt(self.n))

    @property
    def K(self) -> int:
        return math.ceil(self.C / math.pi)

    @property
    def sigma(self) -> SigmaCSpec:
        return SigmaCSpec(self.C, self.n)


def choose_hbars(n: int, epsilon: float, C: float, delta: float) -> list[float]:
    """``kappa sqrt(p_j)`` over the first ``n`` primes, with 10% slack on both constraints."""
    if min(n, epsilon, C, delta) <= 0:
        raise ValueError("all arguments must be positive")
    roots = [math.sqrt(p) for p in first_primes(n)]
    kappa = 0.9 * min(epsilon / (C * sum(roots)), delta / (2.0 * math.sqrt(n) * max(roots)))
    return [kappa * w for w in roots]


def unwrap_map(params: UnwrapParams) -> SmoothMap:
    """``(r, theta, s, t) -> (r, theta, sum hbar_j s_j; q_j = s_j, p_j = t_j + hbar_j cos r)``.

    The angles ``q_j`` live on the universal cover; reduce them mod 2 pi for comparisons.
    """
    n, hb = params.n, params.hbars
    source, target = params.sigma.chart, ot_product_chart(n)

    def fn(p):
        r = p[0]
        c = dual.cos(r)
        z = hb[0] * p[2]
        for j in range(1, n):
            z = z + hb[j] * p[2 + j]
        return [r, p[1], z] + [p[2 + j] for j in range(n)] + [p[2 + n + j] + hb[j] * c for j in range(n)]

    return SmoothMap(source, target, fn, f"unwrap{n}")


def sample_sigma(params: UnwrapParams, rng: np.random.Generator, k: int, r_min: float = 0.01) -> np.ndarray:
    n = params.n
    r = rng.uniform(r_min, math.pi, k)
    theta = rng.uniform(0.0, 2.0 * math.pi, k)
    s = rng.uniform(-params.C, params.C, (k, n))
    t = rng.uniform(-params.t_half_width, params.t_half_width, (k, n))
    return np.column_stack([r, theta, s, t])


def min_integer_relation(weights: Sequence[float], K: int, relative: bool = True) -> tuple[float, tuple[int, ...]]:
    """Smallest ``|sum m_j w_j|`` over nonzero ``|m_j| <= K``, optionally divided by ``sum |m_j w_j|``."""
    w = np.asarray(weights, dtype=float)
    n = len(w)
    if K < 1:
        return math.inf, ()
    grid = np.array(list(itertools.product(range(-K, K + 1), repeat=n)), dtype=np.int64)
    grid = grid[np.any(grid != 0, axis=1)]
    # m and -m give the same magnitude; keep one representative
    first = grid[np.arange(len(grid)), np.argmax(grid != 0, axis=1)]
    grid = grid[first > 0]
    vals = np.abs(grid @ w)
    if relative:
        vals = vals / (np.abs(grid) @ np.abs(w))
    k = int(np.argmin(vals))
    return float(vals[k]), tuple(int(m) for m in grid[k])


def _reduced_images(img: np.ndarray, n: int) -> np.ndarray:
    """Replace each angle by its (cos, sin) pair so that nearby means equal mod 2 pi."""
    angles = [1] + [3 + j for j in range(n)]
    rest = [0, 2] + [3 + n + j for j in range(n)]
    cols = [img[:, rest]] + [np.column_stack([np.cos(img[:, a]), np.sin(img[:, a])]) for a in angles]
    return np.hstack(cols)


def verify_unwrap(m: SmoothMap, params: UnwrapParams, samples: int, seed: int = 0,
                  collision_tol: float = 1e-9, relation_tol: float = 1e-12, check: str = "unwrap") -> Report:
    """Pullback identity, injectivity (sampled and integer-relation) and containment."""
    from scipy.spatial import cKDTree

    clock = Stopwatch()
    n = params.n
    rng = np.random.default_rng(seed)
    pts = sample_sigma(params, rng, samples)
    sigma = params.sigma
    pulled = pullback(m, make_ot_product(n))
    beta = sigma.beta()
    failures: list[str] = []
    witness = None

    # (a) pullback of alpha_OT + lambda_can against r sin r dtheta - sum t_j ds_j
    worst, where = max_coefficient_difference(pulled, beta, pts)
    if not worst < 1e-8:
        failures.append(f"pullback residual {worst:.3e}")
        witness = where

    # (b1) sampled collisions after angle reduction
    img = np.array([m(p) for p in pts])
    red = _reduced_images(img, n)
    pairs = cKDTree(red).query_pairs(collision_tol, output_type="ndarray")
    collisions = 0
    for i, j in pairs:
        same = (np.allclose(pts[i, [0, 1]], pts[j, [0, 1]]) and np.allclose(pts[i, 2 + n:], pts[j, 2 + n:])
                and np.allclose(pts[i, 2:2 + n], pts[j, 2:2 + n]))
        if not same:
            collisions += 1
            if witness is None:
                witness = pts[i]
    if collisions:
        failures.append(f"{collisions} sampled collisions")

    # (b2) a collision needs s - s' = 2 pi m with sum m_j hbar_j = 0 and |m_j| <= K
    rel, mvec = min_integer_relation(params.hbars, params.K)
    if not rel > relation_tol:
        failures.append(f"integer relation m = {list(mvec)} annihilates the slopes")
        if witness is None:
            base = pts[0].copy()
            base[2:2 + n] = math.pi * np.array(mvec)
            witness = base

    # (c) containment in B(epsilon) x D_{<delta}
    z_max = float(np.max(np.abs(img[:, 2])))
    fiber_max = float(np.max(np.linalg.norm(img[:, 3 + n:], axis=1)))
    if not (z_max < params.epsilon and fiber_max < params.delta):
        failures.append(f"containment: |z| = {z_max:.3e}, |p| = {fiber_max:.3e}")
        if witness is None:
            witness = pts[int(np.argmax(np.abs(img[:, 2])))]

    metrics = {
        "pullback_residual": worst,
        "sampled_collisions": collisions,
        "K": params.K,
        "min_relation": rel,
        "relation_vector": list(mvec),
        "max_abs_z": z_max,
        "max_fiber_norm": fiber_max,
        "z_bound": params.C * sum(params.hbars),
        "fiber_bound": params.t_half_width * math.sqrt(n) + math.sqrt(sum(h * h for h in params.hbars)),
    }
    if not math.isfinite(rel):
        metrics["min_relation"] = None
    if not rel > relation_tol:
        metrics["collision_pair"] = [list(math.pi * np.array(mvec)), list(-math.pi * np.array(mvec))]
    parameters = {"n": n, "hbars": list(params.hbars), "C": params.C, "epsilon": params.epsilon,
                  "delta": params.delta, "samples": samples}
    return Report(check, FAIL if failures else PASS, parameters, samples, worst, witness,
                  clock.elapsed, seed, "; ".join(failures), metrics)


# -- bump function ------------------------------------------------------------

def _psi(x):
    return dual.exp(-1.0 / x)


@dataclass(frozen=True)
class BumpFunction:
    """Monotone C-infinity step from 0 (below ``lo``) to 1 (above ``hi``); accepts duals."""

    lo: float = 0.1
    hi: float = 0.9

    def __post_init__(self):
        if not 0.0 <= self.lo < self.hi <= 1.0:
            raise ValueError("need 0 <= lo < hi <= 1")

    def __call__(self, x):
        px = primal(x)
        if px <= self.lo:
            return 0.0
        if px >= self.hi:
            return 1.0
        u = (x - self.lo) / (self.hi - self.lo)
        a, b = _psi(u), _psi(1.0 - u)
        return a / (a + b)

    def derivative(self, x):
        px = primal(x)
        if px <= self.lo or px >= self.hi:
            return 0.0
        w = self.hi - self.lo
        u = (x - self.lo) / w
        v = 1.0 - u
        a, b = _psi(u), _psi(v)
        s = a + b
        return (a / (u * u) * b + a * (b / (v * v))) / (s * s) / w


# -- Legendrian embeddings ----------------------------------------------------

def gradient(fn, point) -> np.ndarray:
    grad = np.zeros(len(point))
    for i in range(len(point)):
        tag = new_tag()
        q = list(map(float, point))
        q[i] = Dual(q[i], 1.0, tag)
        grad[i] = float(primal(tangent(fn(q), tag)))
    return grad


@dataclass
class LegendrianEmbedding:
    """A map defined near a hypersurface ``{constraint = 0}`` of the parameter space.

    ``sampler(rng, k)`` returns points on the hypersurface; tangent vectors are
    the coordinate directions projected onto the kernel of the constraint gradient.
    """

    ambient: ContactModel
    map: SmoothMap
    constraint: Callable
    sampler: Callable[[np.random.Generator, int], np.ndarray]
    name: str = ""

    def constraint_gradient(self, point) -> np.ndarray:
        return gradient(self.constraint, point)

    def tangent_basis(self, point) -> np.ndarray:
        """Rows span the tangent space of the hypersurface at ``point``."""
        grad = self.constraint_gradient(point)
        norm = np.linalg.norm(grad)
        if norm < 1e-12:
            raise DegenerateParametrization(f"constraint gradient vanishes at {list(map(float, point))}")
        nrm = grad / norm
        P = np.eye(len(point)) - np.outer(nrm, nrm)
        U, s, _ = np.linalg.svd(P)
        k = len(point) - 1
        if s[k - 1] < RANK_TOL:
            raise DegenerateParametrization(f"tangent basis has rank < {k} at {list(map(float, point))}")
        return U[:, :k].T

    def pullback_residual(self, point) -> float:
        J = self.map.jacobian(point)
        image = self.map(point)
        a = np.zeros(self.ambient.chart.dim)
        for (i,), c in self.ambient.alpha.values(image).items():
            a[i] = c
        return float(np.max(np.abs(self.tangent_basis(point) @ J.T @ a)))


class HemisphereChart:
    """Graph chart of the unit sphere over the hyperplane ``{x_k = 0}``, on the side ``sign``."""

    def __init__(self, dim: int, k: int, sign: int):
        self.dim, self.k, self.sign = dim, k, (1 if sign > 0 else -1)

    def __call__(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        rest = 1.0 - float(y @ y)
        if rest <= 0:
            raise DegenerateParametrization("outside the open hemisphere")
        return np.insert(y, self.k, self.sign * math.sqrt(rest))

    def sample(self, rng: np.random.Generator, k: int, radius: float = 0.95) -> np.ndarray:
        d = self.dim - 1
        u = rng.normal(size=(k, d))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        y = u * (radius * rng.uniform(0, 1, k) ** (1.0 / d))[:, None]
        return np.array([self(row) for row in y])


def hemisphere_charts(dim: int) -> list[HemisphereChart]:
    return [HemisphereChart(dim, k, s) for k in range(dim) for s in (1, -1)]


def sample_round_sphere(dim: int, rng: np.random.Generator, k: int) -> np.ndarray:
    """Points of ``S^{dim-1}`` drawn through randomly chosen overlapping hemisphere charts."""
    charts = hemisphere_charts(dim)
    which = rng.integers(0, len(charts), k)
    out = np.empty((k, dim))
    for c in np.unique(which):
        rows = np.flatnonzero(which == c)
        out[rows] = charts[c].sample(rng, len(rows))
    return out


def _radial_roots(constraint, rng, k, dim):
    """Points ``rho u`` on ``{constraint = 0}`` for random directions ``u``; needs a star-shaped surface."""
    from .roots import refine_root

    u = rng.normal(size=(k, dim))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    out = np.empty_like(u)
    for i, d in enumerate(u):
        rho = refine_root(lambda t: float(constraint(list(t * d))), 0.0, math.sqrt(2.0))
        out[i] = rho * d
    return out


def unknot_embedding(n: int) -> LegendrianEmbedding:
    """``(x, s) -> (x, -s x, s^3/3)`` on ``{|x|^2 + s^2 = 1}`` into ``dz - sum y_j dx_j``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    names = tuple(f"x{j}" for j in range(1, n + 1)) + ("s",)
    source = Chart(f"sphere_param{n}", names)
    target = darboux_chart(n)

    def fn(p):
        s = p[n]
        return list(p[:n]) + [-(s * x) for x in p[:n]] + [s * s * s / 3.0]

    def constraint(p):
        acc = -1.0
        for x in p:
            acc = acc + x * x
        return acc

    return LegendrianEmbedding(ContactModel(make_standard_form(n), "darboux"), SmoothMap(source, target, fn, "unknot"),
                               constraint, lambda rng, k: sample_round_sphere(n + 1, rng, k), f"unknot{n}")


def deformed_sphere_embedding(n: int, bump: Optional[BumpFunction] = None) -> LegendrianEmbedding:
    """The sphere ``x0^2 + s^2 + g(|x|^2) |x|^2 = 1`` mapped by
    ``(x0, x, s) -> (x0, -s x0, s^3/3; x, -s x (g(|x|^2) + |x|^2 g'(|x|^2)))``
    into ``dz - y dx - sum p_j dq_j``.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    g = bump or BumpFunction()
    names = ("x0",) + tuple(f"x{j}" for j in range(1, n + 1)) + ("s",)
    source = Chart(f"deformed_param{n}", names)
    target = darboux_product_chart(n)

    def sq(xs):
        acc = 0.0
        for x in xs:
            acc = acc + x * x
        return acc

    def fn(p):
        x0, xs, s = p[0], p[1:n + 1], p[n + 1]
        w = sq(xs)
        factor = g(w) + w * g.derivative(w)
        return [x0, -(s * x0), s * s * s / 3.0] + list(xs) + [-(s * x) * factor for x in xs]

    def constraint(p):
        x0, xs, s = p[0], p[1:n + 1], p[n + 1]
        w = sq(xs)
        return x0 * x0 + s * s + g(w) * w - 1.0

    return LegendrianEmbedding(ContactModel(make_darboux_product(n), "darboux_product"),
                               SmoothMap(source, target, fn, "deformed_sphere"), constraint,
                               lambda rng, k: _radial_roots(constraint, rng, k, n + 2), f"deformed{n}")


def verify_legendrian(emb: LegendrianEmbedding, samples: int, seed: int = 0, tol: float = 1e-8,
                      check: str = "legendrian") -> Report:
    """PASS iff ``|alpha(D iota v)| < tol`` for a full tangent basis at every sample."""
    rng = np.random.default_rng(seed)
    pts = emb.sampler(rng, samples)
    drift = max(abs(float(emb.constraint(list(p)))) for p in pts)
    params = {"embedding": emb.name, "samples": samples, "tol": tol}
    return sweep(check, pts, emb.pullback_residual, tol, params, seed, {"max_constraint": drift})


def isotopy_family_report(n: int, bump: Optional[BumpFunction] = None, samples: int = 200, seed: int = 0,
                          taus: Sequence[float] = (0.0, 0.25, 0.5, 0.75, 1.0), check: str = "isotopy") -> Report:
    """Each linear interpolation between the round and the deformed constraint is a smooth hypersurface."""
    g = bump or BumpFunction()
    clock = Stopwatch()
    rng = np.random.default_rng(seed)
    worst_grad, where = math.inf, None
    for tau in taus:
        def constraint(p, tau=tau):
            x0, xs, s = p[0], p[1:n + 1], p[n + 1]
            w = 0.0
            for x in xs:
                w = w + x * x
            return x0 * x0 + s * s + ((1.0 - tau) + tau * g(w)) * w - 1.0

        for p in _radial_roots(constraint, rng, samples, n + 2):
            gn = float(np.linalg.norm(gradient(constraint, p)))
            if gn < worst_grad:
                worst_grad, where = gn, p
    ok = worst_grad > 1e-6
    return Report(check, PASS if ok else FAIL, {"n": n, "taus": list(taus), "samples": samples},
                  samples * len(taus), 0.0 if ok else worst_grad, None if ok else where, clock.elapsed, seed,
                  "" if ok else "constraint gradient nearly vanishes", {"min_gradient_norm": worst_grad})


# -- auxiliary maps -----------------------------------------------------------

def named_auxiliary_map(kind: str, parameter, n: int = 1) -> SmoothMap:
    """``rescale_st`` (mu), ``stretch_qp`` (t) or ``fiber_rescale`` (f on the x, y, z chart)."""
    if kind == "rescale_st":
        mu = float(parameter)
        if mu <= 0:
            raise ValueError("mu must be positive")
        chart = SigmaCSpec(1.0, n).chart

        def fn(p):
            return [p[0], p[1]] + [p[2 + j] / mu for j in range(n)] + [mu * p[2 + n + j] for j in range(n)]

        return SmoothMap(chart, chart, fn, f"rescale_st[{mu:g}]")
    if kind == "stretch_qp":
        t = float(parameter)
        chart = cotangent_chart(n)
        up, down = math.exp(t), math.exp(-t)

        def fn(p):
            return [up * p[j] for j in range(n)] + [down * p[n + j] for j in range(n)]

        return SmoothMap(chart, chart, fn, f"stretch_qp[{t:g}]")
    if kind == "fiber_rescale":
        chart = darboux_product_chart(n)
        f = ScalarField.lift(darboux_chart(1), parameter)
        ff = lift_field(f, chart).fn

        def fn(p):
            e = dual.exp(ff(p))
            return list(p[:3 + n]) + [e * p[3 + n + j] for j in range(n)]

        return SmoothMap(chart, chart, fn, "fiber_rescale")
    raise UnknownKind(f"unknown auxiliary map kind {kind!r}")


def conformal_darboux_form(f, n: int = 1) -> KForm:
    """``e^f (dz - y dx) + lambda_can`` on ``(x, y, z; q, p)``."""
    chart = darboux_product_chart(n)
    ef = lift_field(ScalarField.lift(darboux_chart(1), f), chart)
    e = ScalarField(chart, lambda p, fn=ef.fn: dual.exp(fn(p)))
    return e * lift_form(make_standard_form(1), chart) + lift_form(make_lambda_can(n), chart)


def darboux_constants(f, samples: int = 2000, seed: int = 0, rho: Optional[float] = None,
                      delta: Optional[float] = None) -> dict:
    """Sampled bounds ``c0 <= e^f <= C0`` on the unit cube and the derived widths ``rho/C0``, ``delta/c0``."""
    f = ScalarField.lift(darboux_chart(1), f)
    rng = np.random.default_rng(seed)
    vals = np.array([math.exp(f.value(p)) for p in rng.uniform(-1.0, 1.0, (samples, 3))])
    out = {"c0": float(vals.min()), "C0": float(vals.max())}
    if rho is not None:
        out["rho_prime"] = rho / out["C0"]
    if delta is not None:
        out["delta_prime"] = delta / out["c0"]
    return out


def verify_rescale(C_OT: float, delta: float, n: int = 1, C: Optional[float] = None, samples: int = 500,
                   seed: int = 0, check: str = "rescale") -> Report:
    """The ``(s, t) -> (s/mu, mu t)`` rescale with ``mu = 2 C_OT / a``, ``a = delta/(2 sqrt n)``.

    Checks that it preserves ``-sum t_j ds_j`` and that the rescaled box
    ``(-C, C)^n x (-a, a)^n`` covers ``[-C_OT, C_OT]^(2n)``.
    """
    clock = Stopwatch()
    if min(C_OT, delta) <= 0:
        raise ValueError("C_OT and delta must be positive")
    a = delta / (2.0 * math.sqrt(n))
    mu = 2.0 * C_OT / a
    C_min = 2.0 * C_OT ** 2 / a
    C = 2.0 * C_min if C is None else float(C)
    m = named_auxiliary_map("rescale_st", mu, n)
    chart = m.source
    lam = KForm.from_fields(chart, 1, {(2 + j,): ScalarField(chart, lambda p, j=j: -p[2 + n + j]) for j in range(n)})
    rng = np.random.default_rng(seed)
    pts = np.column_stack([rng.uniform(0.01, math.pi, samples), rng.uniform(0, 2 * math.pi, samples),
                           rng.uniform(-C, C, (samples, n)), rng.uniform(-a, a, (samples, n))])
    worst, where = max_coefficient_difference(pullback(m, lam), lam, pts)
    # preimages of the target box must land in the source box
    target = rng.uniform(-C_OT, C_OT, (samples, 2 * n))
    pre_s, pre_t = target[:, :n] * mu, target[:, n:] / mu
    covered = bool(np.all(np.abs(pre_s) < C) and np.all(np.abs(pre_t) < a))
    failures = []
    if not worst < 1e-12:
        failures.append(f"pullback residual {worst:.3e}")
    if not C > C_min:
        failures.append(f"C = {C:g} does not exceed 2 C_OT^2 / a = {C_min:g}")
    if not covered:
        failures.append("rescaled box misses part of [-C_OT, C_OT]^(2n)")
    metrics = {"mu": mu, "a": a, "C_min": C_min, "s_half_width": C / mu, "t_half_width": mu * a}
    params = {"C_OT": C_OT, "delta": delta, "n": n, "C": C, "samples": samples}
    return Report(check, FAIL if failures else PASS, params, samples, worst,
                  where if failures else None, clock.elapsed, seed, "; ".join(failures), metrics)
