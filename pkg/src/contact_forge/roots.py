"""Scalar root finding: bracketing bisection and Newton polishing."""

from __future__ import annotations

from typing import Callable

from .errors import BracketFailure


def bisect(f: Callable[[float], float], a: float, b: float, width: float, max_iter: int = 200):
    """Shrink a sign-change bracket of ``f`` to ``width``; returns ``(a, b)``."""
    fa, fb = f(a), f(b)
    if fa == 0.0:
        return a, a
    if fb == 0.0:
        return b, b
    if (fa > 0) == (fb > 0):
        raise BracketFailure(f"no sign change on [{a}, {b}]: f = {fa:.3e}, {fb:.3e}")
    for _ in range(max_iter):
        if b - a <= width:
            break
        m = 0.5 * (a + b)
        fm = f(m)
        if fm == 0.0:
            return m, m
        if (fm > 0) == (fa > 0):
            a, fa = m, fm
        else:
            b, fb = m, fm
    return a, b


def newton(f, df, x0: float, tol: float, lo: float, hi: float, max_iter: int = 50) -> float:
    """Newton iteration until ``|f(x)| < tol``, confined to ``[lo, hi]``."""
    x = x0
    for _ in range(max_iter):
        fx = f(x)
        if abs(fx) < tol:
            return x
        d = df(x)
        if d == 0.0:
            break
        x_next = x - fx / d
        if not lo <= x_next <= hi:
            x_next = 0.5 * (x + (lo if x_next < lo else hi))
        if x_next == x:
            break
        x = x_next
    if abs(f(x)) < tol:
        return x
    raise BracketFailure(f"Newton did not reach |f| < {tol:g}; last x = {x!r}, f = {f(x):.3e}")


def refine_root(f, a: float, b: float, tol: float = 0.0) -> float:
    """Bisect a sign-change bracket down to adjacent floats (or ``|f| <= tol``)."""
    fa = f(a)
    if fa == 0.0:
        return a
    while True:
        m = 0.5 * (a + b)
        if m <= a or m >= b:
            return m
        fm = f(m)
        if fm == 0.0 or abs(fm) <= tol:
            return m
        if (fm > 0) == (fa > 0):
            a, fa = m, fm
        else:
            b = m
