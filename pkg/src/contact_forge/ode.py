"""Explicit Runge-Kutta integrators.

``integrate_batch`` advances many independent trajectories at once with the
Dormand-Prince 5(4) pair: every row keeps its own time and step size, and
rows drop out as they reach their end time or a caller-supplied stop
predicate fires.  ``rk4_flow`` is a fixed-step classical scheme written
against plain arithmetic so it also propagates dual numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import StepSizeUnderflow

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4

_SAFETY, _MIN_FACTOR, _MAX_FACTOR = 0.9, 0.2, 5.0


@dataclass(frozen=True)
class OdeSolverConfig:
    rtol: float = 1e-10
    atol: float = 1e-12
    max_step: float = math.inf
    max_time: float = 1e4
    min_step: float = 1e-14
    max_steps: int = 1_000_000

    def __post_init__(self):
        if not (self.rtol > 0 and self.atol > 0):
            raise ValueError("tolerances must be positive")
        if not self.max_step > 0:
            raise ValueError("max_step must be positive")

    def halved(self) -> "OdeSolverConfig":
        return OdeSolverConfig(self.rtol / 2, self.atol / 2, self.max_step, self.max_time,
                               self.min_step, self.max_steps)


@dataclass
class BatchResult:
    t: np.ndarray
    y: np.ndarray
    accepted: np.ndarray
    rejected: np.ndarray
    stopped: np.ndarray = field(default_factory=lambda: np.zeros(0, bool))


def dp_step(rhs, t, y, h, k1=None):
    """One Dormand-Prince step on rows ``y``; returns (y5, error estimate, k1 of the next step)."""
    h = np.asarray(h, dtype=float)[:, None] if np.ndim(h) else h
    ks = [rhs(t, y) if k1 is None else k1]
    for i in range(1, 7):
        yi = y + h * sum(a * k for a, k in zip(_A[i], ks) if a != 0.0)
        ks.append(rhs(t + _C[i] * (h[:, 0] if np.ndim(h) else h), yi))
    y5 = y + h * sum(b * k for b, k in zip(_B5, ks) if b != 0.0)
    err = h * sum(e * k for e, k in zip(_E, ks))
    return y5, err, ks[6]


def _initial_step(y, f, cfg, span):
    scale = cfg.atol + cfg.rtol * np.abs(y)
    d0 = np.sqrt(np.mean((y / scale) ** 2, axis=1))
    d1 = np.sqrt(np.mean((f / scale) ** 2, axis=1))
    h = np.where((d0 < 1e-5) | (d1 < 1e-5), 1e-6, 0.01 * d0 / np.maximum(d1, 1e-300))
    return np.minimum(np.minimum(h, cfg.max_step), np.maximum(span, 1e-300))


def integrate_batch(
    rhs: Callable[[np.ndarray, np.ndarray], np.ndarray],
    y0: np.ndarray,
    t_end,
    cfg: Optional[OdeSolverConfig] = None,
    on_step: Optional[Callable] = None,
    stop: Optional[Callable] = None,
) -> BatchResult:
    """Integrate ``y' = rhs(t, y)`` row-wise from ``t = 0`` to ``t_end`` (scalar or per row, >= 0).

    ``rhs`` receives the active rows only.  After every accepted step
    ``on_step(rows, t0, y0, f0, t1, y1, f1)`` is called, and ``stop(rows, t, y)``
    may return a mask of rows to retire early.
    """
    cfg = cfg or OdeSolverConfig()
    y = np.array(y0, dtype=float, copy=True)
    if y.ndim != 2:
        raise ValueError("y0 must be a 2-D array of rows")
    m = y.shape[0]
    t_end = np.broadcast_to(np.asarray(t_end, dtype=float), (m,)).copy()
    if np.any(t_end < 0) or np.any(t_end > cfg.max_time):
        raise ValueError("end times must lie in [0, max_time]")
    t = np.zeros(m)
    accepted = np.zeros(m, dtype=int)
    rejected = np.zeros(m, dtype=int)
    stopped = np.zeros(m, dtype=bool)
    active = np.flatnonzero(t_end > 0)
    if active.size == 0:
        return BatchResult(t, y, accepted, rejected, stopped)

    k1 = np.zeros_like(y)
    k1[active] = rhs(t[active], y[active])
    h = np.zeros(m)
    h[active] = _initial_step(y[active], k1[active], cfg, t_end[active])

    steps = 0
    while active.size:
        steps += 1
        if steps > cfg.max_steps:
            raise StepSizeUnderflow(f"exceeded {cfg.max_steps} steps")
        rows = active
        span = t_end[rows] - t[rows]
        hh = np.minimum(h[rows], span)
        last = hh >= span
        yr = y[rows]
        y_new, err, k_new = dp_step(rhs, t[rows], yr, hh, k1[rows])
        scale = cfg.atol + cfg.rtol * np.maximum(np.abs(yr), np.abs(y_new))
        en = np.sqrt(np.mean((err / scale) ** 2, axis=1))
        ok = en <= 1.0
        factor = np.where(en == 0.0, _MAX_FACTOR,
                          np.clip(_SAFETY * np.power(np.maximum(en, 1e-300), -0.2), _MIN_FACTOR, _MAX_FACTOR))
        factor = np.where(ok, factor, np.minimum(factor, 1.0))
        h_next = np.minimum(hh * factor, cfg.max_step)

        acc = rows[ok]
        if acc.size:
            t0 = t[acc].copy()
            y_old, f_old = y[acc].copy(), k1[acc].copy()
            t1 = np.where(last[ok], t_end[acc], t0 + hh[ok])
            t[acc] = t1
            y[acc] = y_new[ok]
            k1[acc] = k_new[ok]
            accepted[acc] += 1
            if on_step is not None:
                on_step(acc, t0, y_old, f_old, t1, y[acc], k1[acc])
        rej = rows[~ok]
        rejected[rej] += 1
        # keep the unclipped step when the last step was shortened to hit t_end
        h[rows] = np.where(ok & last, np.maximum(h[rows], h_next), h_next)

        tiny = h[rows] < cfg.min_step * np.maximum(1.0, np.abs(t[rows]))
        if np.any(tiny & ~(ok & last)):
            bad = rows[np.flatnonzero(tiny & ~(ok & last))[0]]
            raise StepSizeUnderflow(f"step size {h[bad]:.3e} at t = {t[bad]:.6g} (row {bad})")

        done = t >= t_end
        if stop is not None and acc.size:
            mask = np.asarray(stop(acc, t[acc], y[acc]), dtype=bool)
            stopped[acc[mask]] = True
        active = np.flatnonzero(~done & ~stopped)
    return BatchResult(t, y, accepted, rejected, stopped)


def integrate(rhs, y0, t_end: float, cfg: Optional[OdeSolverConfig] = None, **kw) -> BatchResult:
    """Single-trajectory convenience wrapper around :func:`integrate_batch`."""
    y0 = np.atleast_1d(np.asarray(y0, dtype=float))[None, :]
    return integrate_batch(rhs, y0, t_end, cfg, **kw)


def hermite(t0, y0, f0, t1, y1, f1, t):
    """Cubic Hermite interpolant of one accepted step, evaluated at ``t``."""
    h = t1 - t0
    s = (t - t0) / h
    h00 = (1 + 2 * s) * (1 - s) ** 2
    h10 = s * (1 - s) ** 2
    h01 = s * s * (3 - 2 * s)
    h11 = s * s * (s - 1)
    return h00 * y0 + h10 * h * f0 + h01 * y1 + h11 * h * f1


def hermite_max(t0, y0, f0, t1, y1, f1):
    """Maximum of the cubic Hermite interpolant over ``[t0, t1]`` (vectorized); returns (value, time)."""
    t0, y0, f0, t1, y1, f1 = map(np.asarray, (t0, y0, f0, t1, y1, f1))
    h = t1 - t0
    best = np.where(y1 > y0, y1, y0)
    t_best = np.where(y1 > y0, t1, t0)
    # derivative in s of the cubic: a s^2 + b s + c
    a = 6 * y0 + 3 * h * f0 - 6 * y1 + 3 * h * f1
    b = -6 * y0 - 4 * h * f0 + 6 * y1 - 2 * h * f1
    c = h * f0
    with np.errstate(divide="ignore", invalid="ignore"):
        disc = b * b - 4 * a * c
        sq = np.sqrt(np.where(disc >= 0, disc, np.nan))
        roots = [np.where(np.abs(a) > 1e-300, (-b + sq) / (2 * a), -c / b),
                 np.where(np.abs(a) > 1e-300, (-b - sq) / (2 * a), np.nan)]
    for s in roots:
        inside = np.isfinite(s) & (s > 0) & (s < 1)
        tc = t0 + np.where(inside, s, 0.0) * h
        val = hermite(t0, y0, f0, t1, y1, f1, tc)
        better = inside & (val > best)
        best = np.where(better, val, best)
        t_best = np.where(better, tc, t_best)
    return best, t_best


def rk4_flow(rhs, y0, T: float, steps: int):
    """Classical RK4 with ``steps`` equal steps; ``rhs(y) -> list`` may use duals."""
    h = T / steps
    y = list(y0)
    for _ in range(steps):
        k1 = rhs(y)
        k2 = rhs([a + 0.5 * h * b for a, b in zip(y, k1)])
        k3 = rhs([a + 0.5 * h * b for a, b in zip(y, k2)])
        k4 = rhs([a + h * b for a, b in zip(y, k3)])
        y = [a + (h / 6.0) * (b1 + 2.0 * b2 + 2.0 * b3 + b4) for a, b1, b2, b3, b4 in zip(y, k1, k2, k3, k4)]
    return y
