"""Tagged dual numbers for nested forward-mode differentiation.

A :class:`Dual` carries a value and a directional derivative with respect to
one infinitesimal, identified by an integer ``tag``.  Components may
themselves be duals of *smaller* tags, which is what makes second
derivatives (``d(d a)``, partials of pulled-back coefficients) exact.  The
outermost layer always holds the largest tag; arithmetic between duals of
different tags treats the lower-tagged operand as a constant.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

from .errors import DomainError

_tag_counter = itertools.count(1)


def new_tag() -> int:
    return next(_tag_counter)


class Dual:
    __slots__ = ("value", "deriv", "tag")
    # keeps numpy scalars from swallowing duals into object arrays
    __array_ufunc__ = None

    def __init__(self, value, deriv=0.0, tag=0):
        self.value = value
        self.deriv = deriv
        self.tag = tag

    def __repr__(self):
        return f"Dual({self.value!r}, {self.deriv!r}, tag={self.tag})"

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __pow__(self, other):
        return power(self, other)

    def __rpow__(self, other):
        return power(other, self)

    def __neg__(self):
        return Dual(-self.value, -self.deriv, self.tag)

    def __pos__(self):
        return self


@dataclass(frozen=True)
class DualValue:
    """Value and directional derivative of a scalar at a point."""

    value: float
    derivative: float

    def __add__(self, other: "DualValue") -> "DualValue":
        return DualValue(self.value + other.value, self.derivative + other.derivative)

    def __mul__(self, other: "DualValue") -> "DualValue":
        return DualValue(
            self.value * other.value,
            self.value * other.derivative + self.derivative * other.value,
        )


def _tag(x):
    return x.tag if isinstance(x, Dual) else 0


def _split(x, tag):
    if isinstance(x, Dual) and x.tag == tag:
        return x.value, x.deriv
    return x, 0.0


def primal(x) -> float:
    """Innermost real value of a (possibly nested) dual."""
    while isinstance(x, Dual):
        x = x.value
    return x


def tangent(y, tag):
    """Derivative part of ``y`` along the infinitesimal ``tag``."""
    if isinstance(y, Dual) and y.tag == tag:
        return y.deriv
    return 0.0


def _is_zero(x):
    return not isinstance(x, Dual) and x == 0.0


def add(a, b):
    t = max(_tag(a), _tag(b))
    if t == 0:
        return a + b
    av, ad = _split(a, t)
    bv, bd = _split(b, t)
    return Dual(av + bv, ad + bd, t)


def sub(a, b):
    t = max(_tag(a), _tag(b))
    if t == 0:
        return a - b
    av, ad = _split(a, t)
    bv, bd = _split(b, t)
    return Dual(av - bv, ad - bd, t)


def mul(a, b):
    t = max(_tag(a), _tag(b))
    if t == 0:
        return a * b
    av, ad = _split(a, t)
    bv, bd = _split(b, t)
    if _is_zero(bd):
        d = ad * bv
    elif _is_zero(ad):
        d = av * bd
    else:
        d = av * bd + ad * bv
    return Dual(av * bv, d, t)


def div(a, b):
    if primal(b) == 0.0:
        raise DomainError("division by zero")
    t = max(_tag(a), _tag(b))
    if t == 0:
        return a / b
    av, ad = _split(a, t)
    bv, bd = _split(b, t)
    q = av / bv
    if _is_zero(bd):
        return Dual(q, ad / bv, t)
    return Dual(q, (ad - q * bd) / bv, t)


def sin(x):
    if isinstance(x, Dual):
        return Dual(sin(x.value), cos(x.value) * x.deriv, x.tag)
    return math.sin(x)


def cos(x):
    if isinstance(x, Dual):
        return Dual(cos(x.value), -sin(x.value) * x.deriv, x.tag)
    return math.cos(x)


def tan(x):
    if math.cos(primal(x)) == 0.0:
        raise DomainError("tan at a pole")
    if isinstance(x, Dual):
        tv = tan(x.value)
        return Dual(tv, (1.0 + tv * tv) * x.deriv, x.tag)
    return math.tan(x)


def exp(x):
    if isinstance(x, Dual):
        ev = exp(x.value)
        return Dual(ev, ev * x.deriv, x.tag)
    try:
        return math.exp(x)
    except OverflowError:
        raise DomainError("exp overflow") from None


def log(x):
    if primal(x) <= 0.0:
        raise DomainError("ln of non-positive argument")
    if isinstance(x, Dual):
        return Dual(log(x.value), x.deriv / x.value, x.tag)
    return math.log(x)


def sqrt(x):
    p = primal(x)
    if p < 0.0:
        raise DomainError("sqrt of negative argument")
    if isinstance(x, Dual):
        if p == 0.0:
            raise DomainError("sqrt is not differentiable at 0")
        sv = sqrt(x.value)
        return Dual(sv, x.deriv / (2.0 * sv), x.tag)
    return math.sqrt(x)


def fabs(x):
    if isinstance(x, Dual):
        s = 1.0 if primal(x.value) > 0 else (-1.0 if primal(x.value) < 0 else 0.0)
        return Dual(fabs(x.value), s * x.deriv, x.tag)
    return abs(x)


def _int_pow(a, n):
    if n == 0:
        return 1.0
    if isinstance(a, Dual):
        return Dual(_int_pow(a.value, n), n * _int_pow(a.value, n - 1) * a.deriv, a.tag)
    if a == 0.0 and n < 0:
        raise DomainError("zero raised to a negative power")
    try:
        return float(a) ** n
    except OverflowError:
        raise DomainError("power overflow") from None


def power(a, b):
    """``a ** b`` with real-domain checks; integer exponents allow any base."""
    pb = primal(b)
    pa = primal(a)
    if not isinstance(b, Dual) and float(pb).is_integer():
        n = int(pb)
        if pa == 0.0 and n < 0:
            raise DomainError("zero raised to a negative power")
        return _int_pow(a, n)
    if pa < 0.0:
        raise DomainError("negative base with non-integer exponent")
    if pa == 0.0:
        if isinstance(b, Dual) or isinstance(a, Dual):
            raise DomainError("power is not differentiable at base 0")
        if pb < 0:
            raise DomainError("zero raised to a negative power")
        return 0.0 ** pb
    if isinstance(b, Dual):
        return exp(mul(b, log(a)))
    if isinstance(a, Dual):
        return Dual(power(a.value, b), b * power(a.value, b - 1.0) * a.deriv, a.tag)
    return a ** b


def derivative(fn, x: float) -> float:
    """d/dx fn at x for a scalar function written with these primitives."""
    tag = new_tag()
    return tangent(fn(Dual(x, 1.0, tag)), tag)
