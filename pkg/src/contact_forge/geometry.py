"""Charts, scalar/vector fields, differential forms and smooth maps.

Everything is evaluated pointwise.  Forms are stored as a *support* (the
strictly increasing multi-indices that may carry a nonzero coefficient) and
a batch function returning all coefficients at a point at once; derived
forms (``d a``, ``a ^ b``, ``m^* a`` ...) are closures over their inputs.
Partial derivatives come from tagged dual numbers, so points handed to any
of these closures may contain duals, and nesting (``d(d a)``) stays exact.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from .dual import Dual, _split, new_tag, primal, tangent
from .errors import (
    ArityMismatch,
    ChartMismatch,
    DegreeOverflow,
    DomainError,
    UnboundSymbol,
)
from .expr import BinOp, Expr, Neg, Num, compile_expr, parse, symbols

MAX_DIM = 9  # the n = 3 unwrapping target is R^3 x T*T^3

Index = tuple[int, ...]


@dataclass(frozen=True)
class Chart:
    name: str
    coordinate_names: tuple[str, ...]
    domain: Optional[Callable[[Sequence[float]], bool]] = field(
        default=None, compare=False, hash=False, repr=False)
    periodic: tuple[bool, ...] = ()

    def __post_init__(self):
        names = tuple(self.coordinate_names)
        object.__setattr__(self, "coordinate_names", names)
        if len(set(names)) != len(names):
            raise ValueError(f"chart {self.name!r}: coordinate names must be distinct")
        if not names:
            raise ValueError(f"chart {self.name!r} has no coordinates")
        if len(names) > MAX_DIM:
            raise ValueError(f"chart {self.name!r}: dimension {len(names)} exceeds the cap of {MAX_DIM}")
        periodic = tuple(self.periodic) or (False,) * len(names)
        if len(periodic) != len(names):
            raise ValueError("periodic flags must match the coordinate count")
        object.__setattr__(self, "periodic", periodic)

    @property
    def dim(self) -> int:
        return len(self.coordinate_names)

    def index(self, name: str) -> int:
        try:
            return self.coordinate_names.index(name)
        except ValueError:
            raise UnboundSymbol(name) from None

    def contains(self, point) -> bool:
        return True if self.domain is None else bool(self.domain([float(primal(x)) for x in point]))


def _same_chart(*objs):
    first = objs[0].chart
    for o in objs[1:]:
        if o.chart != first:
            raise ChartMismatch(f"{first.name!r} vs {o.chart.name!r}")
    return first


def _is_zero(x) -> bool:
    return not isinstance(x, Dual) and x == 0.0


# -- scalar fields ------------------------------------------------------------

class ScalarField:
    """A function on a chart, backed by an expression or a native callable.

    ``fn`` receives the point as a sequence in chart coordinate order and must
    only use arithmetic and :mod:`contact_forge.dual` primitives, so that it
    also works on dual-valued points.
    """

    __slots__ = ("chart", "fn", "expr", "const")

    def __init__(self, chart: Chart, fn, expr: Optional[Expr] = None, const: Optional[float] = None):
        self.chart = chart
        self.fn = fn
        self.expr = expr
        self.const = const

    @classmethod
    def from_expr(cls, chart: Chart, e: Union[str, Expr]) -> "ScalarField":
        e = parse(e) if isinstance(e, str) else e
        missing = symbols(e) - set(chart.coordinate_names)
        if missing:
            raise UnboundSymbol(sorted(missing)[0])
        fn = compile_expr(e, chart.coordinate_names)
        const = float(e.value) if isinstance(e, Num) else None
        return cls(chart, fn, e, const)

    @classmethod
    def constant(cls, chart: Chart, c: float) -> "ScalarField":
        c = float(c)
        return cls(chart, lambda p: c, Num(c) if c >= 0 else Neg(Num(-c)), c)

    @classmethod
    def coordinate(cls, chart: Chart, name: str) -> "ScalarField":
        return cls.from_expr(chart, name)

    @classmethod
    def lift(cls, chart: Chart, value) -> "ScalarField":
        if isinstance(value, ScalarField):
            if value.chart != chart:
                raise ChartMismatch(f"{value.chart.name!r} vs {chart.name!r}")
            return value
        if isinstance(value, (str, Expr)):
            return cls.from_expr(chart, value)
        if callable(value):
            return cls(chart, value)
        return cls.constant(chart, value)

    def __call__(self, point):
        return self.fn(point)

    def value(self, point) -> float:
        return float(primal(self.fn(point)))

    @property
    def is_zero(self) -> bool:
        return self.const == 0.0

    def __repr__(self):
        body = str(self.expr) if self.expr is not None else "<native>"
        return f"ScalarField({self.chart.name}: {body})"

    # arithmetic
    def _binary(self, other, op, sym, reverse=False):
        if isinstance(other, (int, float)):
            other = ScalarField.constant(self.chart, other)
        if not isinstance(other, ScalarField):
            return NotImplemented
        a, b = (other, self) if reverse else (self, other)
        _same_chart(a, b)
        if a.const is not None and b.const is not None:
            return ScalarField.constant(self.chart, op(a.const, b.const))
        expr = BinOp(sym, a.expr, b.expr) if a.expr is not None and b.expr is not None else None
        fa, fb = a.fn, b.fn
        return ScalarField(self.chart, lambda p: op(fa(p), fb(p)), expr)

    def __add__(self, other):
        if isinstance(other, ScalarField) and other.is_zero:
            return self
        if self.is_zero and isinstance(other, ScalarField):
            return other
        return self._binary(other, lambda x, y: x + y, "+")

    def __radd__(self, other):
        return self._binary(other, lambda x, y: x + y, "+", reverse=True)

    def __sub__(self, other):
        return self._binary(other, lambda x, y: x - y, "-")

    def __rsub__(self, other):
        return self._binary(other, lambda x, y: x - y, "-", reverse=True)

    def __mul__(self, other):
        if isinstance(other, ScalarField) and (self.is_zero or other.is_zero):
            return ScalarField.constant(self.chart, 0.0)
        return self._binary(other, lambda x, y: x * y, "*")

    def __rmul__(self, other):
        return self._binary(other, lambda x, y: x * y, "*", reverse=True)

    def __truediv__(self, other):
        from . import dual
        return self._binary(other, dual.div, "/")

    def __neg__(self):
        if self.const is not None:
            return ScalarField.constant(self.chart, -self.const)
        fn = self.fn
        return ScalarField(self.chart, lambda p: -fn(p), Neg(self.expr) if self.expr is not None else None)

    def partial(self, i: int) -> "ScalarField":
        """Exact partial derivative along coordinate ``i``."""
        if self.const is not None:
            return ScalarField.constant(self.chart, 0.0)
        fn = self.fn

        def d(p):
            tag = new_tag()
            q = list(p)
            q[i] = Dual(q[i], 1.0, tag)
            return tangent(fn(q), tag)

        return ScalarField(self.chart, d)

    def compose(self, m: "SmoothMap") -> "ScalarField":
        if m.target != self.chart:
            raise ChartMismatch(f"cannot compose field on {self.chart.name!r} with map into {m.target.name!r}")
        if self.const is not None:
            return ScalarField.constant(m.source, self.const)
        fn, mf = self.fn, m.fn
        return ScalarField(m.source, lambda p: fn(mf(p)))


# -- vector fields ------------------------------------------------------------

class VectorField:
    __slots__ = ("chart", "components")

    def __init__(self, chart: Chart, components: Sequence):
        comps = tuple(ScalarField.lift(chart, c) for c in components)
        if len(comps) != chart.dim:
            raise ArityMismatch(f"vector field needs {chart.dim} components, got {len(comps)}")
        self.chart = chart
        self.components = comps

    @classmethod
    def from_exprs(cls, chart: Chart, mapping: Mapping[str, object]) -> "VectorField":
        comps = [0.0] * chart.dim
        for name, e in mapping.items():
            comps[chart.index(name)] = e
        return cls(chart, comps)

    @classmethod
    def coordinate(cls, chart: Chart, name: str) -> "VectorField":
        return cls.from_exprs(chart, {name: 1.0})

    def __call__(self, point) -> list:
        return [c.fn(point) for c in self.components]

    def at(self, point) -> np.ndarray:
        return np.array([float(primal(c.fn(point))) for c in self.components])

    def __add__(self, other: "VectorField") -> "VectorField":
        _same_chart(self, other)
        return VectorField(self.chart, [a + b for a, b in zip(self.components, other.components)])

    def __rmul__(self, f) -> "VectorField":
        f = ScalarField.lift(self.chart, f)
        return VectorField(self.chart, [f * c for c in self.components])

    def apply(self, f: ScalarField) -> ScalarField:
        """Directional derivative ``v(f)``."""
        return interior_product(self, exterior_derivative(KForm.from_function(f))).coefficient(())


# -- differential forms -------------------------------------------------------

def _merge(I: Index, J: Index):
    """Sorted union of disjoint indices and the sign of the sorting permutation."""
    if set(I) & set(J):
        return None, 0
    inversions = sum(1 for i in I for j in J if i > j)
    return tuple(sorted(I + J)), (-1 if inversions % 2 else 1)


def wedge_values(a: Mapping[Index, object], b: Mapping[Index, object]) -> dict:
    # terms are summed in an order that does not depend on which factor comes
    # first, so a ^ b and b ^ a agree to the last bit up to the overall sign
    groups: dict = {}
    for I, ca in a.items():
        if _is_zero(ca):
            continue
        for J, cb in b.items():
            if _is_zero(cb):
                continue
            K, s = _merge(I, J)
            if K is None:
                continue
            term = ca * cb
            key = (min(I, J), max(I, J))
            bucket = groups.setdefault(K, {})
            bucket[key] = bucket[key] + s * term if key in bucket else s * term
    out: dict = {}
    for K, bucket in groups.items():
        total = None
        for key in sorted(bucket):
            total = bucket[key] if total is None else total + bucket[key]
        out[K] = total
    return out


def _det(m: list) -> object:
    """Determinant by cofactor expansion; generic over duals, skips zeros."""
    n = len(m)
    if n == 0:
        return 1.0
    if n == 1:
        return m[0][0]
    if n == 2:
        return m[0][0] * m[1][1] - m[0][1] * m[1][0]
    total = 0.0
    for r in range(n):
        a = m[r][0]
        if _is_zero(a):
            continue
        minor = [row[1:] for k, row in enumerate(m) if k != r]
        term = a * _det(minor)
        total = total + term if r % 2 == 0 else total - term
    return total


class KForm:
    """A degree-``k`` differential form on a chart."""

    def __init__(self, chart: Chart, degree: int, support: Iterable[Index], batch):
        if not 0 <= degree <= chart.dim:
            raise DegreeOverflow(f"degree {degree} on a {chart.dim}-dimensional chart")
        support = tuple(sorted(set(tuple(I) for I in support)))
        for I in support:
            if len(I) != degree or list(I) != sorted(set(I)):
                raise ValueError(f"bad multi-index {I} for a {degree}-form")
        self.chart = chart
        self.degree = degree
        self.support = support
        self._batch = batch

    # construction
    @classmethod
    def from_fields(cls, chart: Chart, degree: int, coeffs: Mapping[Index, object]) -> "KForm":
        fields = {}
        for I, c in coeffs.items():
            I = tuple(I)
            if len(set(I)) != len(I):
                continue
            f = ScalarField.lift(chart, c)
            order = sorted(range(len(I)), key=lambda k: I[k])
            sign = _perm_sign(order)
            key = tuple(I[k] for k in order)
            f = f if sign > 0 else -f
            fields[key] = fields[key] + f if key in fields else f
        fields = {I: f for I, f in fields.items() if not f.is_zero}
        items = tuple(fields.items())

        def batch(p):
            return {I: f.fn(p) for I, f in items}

        form = cls(chart, degree, fields, batch)
        form._fields = fields
        return form

    @classmethod
    def from_exprs(cls, chart: Chart, coeffs: Mapping[tuple[str, ...], object]) -> "KForm":
        """Build from ``{("r", "theta"): "r*sin(r)", ...}``; index order is respected with sign."""
        if not coeffs:
            raise ValueError("use KForm.zero for the zero form")
        degrees = {len(k) for k in coeffs}
        if len(degrees) != 1:
            raise ValueError("all multi-indices must have the same length")
        return cls.from_fields(chart, degrees.pop(),
                               {tuple(chart.index(n) for n in names): c for names, c in coeffs.items()})

    @classmethod
    def one_form(cls, chart: Chart, coeffs: Mapping[str, object]) -> "KForm":
        return cls.from_fields(chart, 1, {(chart.index(n),): c for n, c in coeffs.items()})

    @classmethod
    def from_function(cls, f: ScalarField) -> "KForm":
        return cls.from_fields(f.chart, 0, {(): f})

    @classmethod
    def zero(cls, chart: Chart, degree: int) -> "KForm":
        return cls(chart, degree, (), lambda p: {})

    @classmethod
    def volume(cls, chart: Chart, density=1.0) -> "KForm":
        return cls.from_fields(chart, chart.dim, {tuple(range(chart.dim)): density})

    # evaluation
    def at(self, point) -> dict:
        """All coefficients at ``point`` (values may be duals)."""
        return self._batch(point)

    def values(self, point) -> dict[Index, float]:
        return {I: float(primal(c)) for I, c in self._batch(point).items()}

    def coefficient(self, index) -> ScalarField:
        if index and isinstance(index[0], str):
            index = tuple(self.chart.index(n) for n in index)
        index = tuple(index)
        fields = getattr(self, "_fields", None)
        if fields is not None:
            return fields.get(index, ScalarField.constant(self.chart, 0.0))
        if index not in self.support:
            return ScalarField.constant(self.chart, 0.0)
        batch = self._batch
        return ScalarField(self.chart, lambda p: batch(p).get(index, 0.0))

    def top_coefficient(self, point) -> float:
        if self.degree != self.chart.dim:
            raise DegreeOverflow("top coefficient requested from a non-top form")
        return float(primal(self._batch(point).get(tuple(range(self.chart.dim)), 0.0)))

    def __repr__(self):
        names = self.chart.coordinate_names
        terms = []
        for I in self.support:
            basis = "^".join("d" + names[i] for i in I) or "1"
            terms.append(f"({self.coefficient(I)!r}) {basis}")
        return f"KForm[{self.chart.name}, deg {self.degree}](" + " + ".join(terms) + ")"

    # algebra
    def _combine(self, other: "KForm", sign: float) -> "KForm":
        _same_chart(self, other)
        if self.degree != other.degree:
            raise ValueError("cannot add forms of different degree")
        ba, bb = self._batch, other._batch

        def batch(p):
            out = dict(ba(p))
            for I, c in bb(p).items():
                out[I] = out[I] + sign * c if I in out else sign * c
            return out

        return KForm(self.chart, self.degree, set(self.support) | set(other.support), batch)

    def __add__(self, other: "KForm") -> "KForm":
        return self._combine(other, 1.0)

    def __sub__(self, other: "KForm") -> "KForm":
        return self._combine(other, -1.0)

    def __neg__(self) -> "KForm":
        return (-1.0) * self

    def __rmul__(self, f) -> "KForm":
        if isinstance(f, (int, float)):
            c = float(f)
            ba = self._batch
            return KForm(self.chart, self.degree, self.support,
                         lambda p: {I: c * v for I, v in ba(p).items()})
        if isinstance(f, ScalarField):
            _same_chart(self, f)
            ba, fn = self._batch, f.fn

            def batch(p):
                s = fn(p)
                return {I: s * v for I, v in ba(p).items()}

            return KForm(self.chart, self.degree, self.support, batch)
        return NotImplemented

    def __xor__(self, other: "KForm") -> "KForm":
        return wedge(self, other)


def _perm_sign(order: Sequence[int]) -> int:
    inversions = sum(1 for i in range(len(order)) for j in range(i + 1, len(order)) if order[i] > order[j])
    return -1 if inversions % 2 else 1


def wedge(a: KForm, b: KForm) -> KForm:
    chart = _same_chart(a, b)
    k = a.degree + b.degree
    if k > chart.dim:
        raise DegreeOverflow(f"wedge of degrees {a.degree} and {b.degree} on a {chart.dim}-chart")
    support = set()
    for I in a.support:
        for J in b.support:
            K, _ = _merge(I, J)
            if K is not None:
                support.add(K)
    ba, bb = a._batch, b._batch
    return KForm(chart, k, support, lambda p: wedge_values(ba(p), bb(p)))


def wedge_power(a: KForm, n: int) -> KForm:
    """``a ^ a ^ ... ^ a`` (``n`` factors); the empty product is the constant 1."""
    out = KForm.from_fields(a.chart, 0, {(): 1.0})
    for _ in range(n):
        out = wedge(out, a)
    return out


def exterior_derivative(a: KForm) -> KForm:
    chart = a.chart
    if a.degree >= chart.dim:
        raise DegreeOverflow(f"d of a {a.degree}-form on a {chart.dim}-chart")
    dim = chart.dim
    support = set()
    for I in a.support:
        for j in range(dim):
            if j not in I:
                support.add(tuple(sorted(I + (j,))))
    if not a.support:
        return KForm.zero(chart, a.degree + 1)
    ba = a._batch
    fields = getattr(a, "_fields", None)
    constant = fields is not None and all(f.const is not None for f in fields.values())
    if constant:
        return KForm.zero(chart, a.degree + 1)

    def batch(p):
        out: dict = {}
        for j in range(dim):
            tag = new_tag()
            q = list(p)
            q[j] = Dual(q[j], 1.0, tag)
            for I, c in ba(q).items():
                if j in I:
                    continue
                dc = tangent(c, tag)
                if _is_zero(dc):
                    continue
                before = sum(1 for i in I if i < j)
                K = tuple(sorted(I + (j,)))
                term = -dc if before % 2 else dc
                out[K] = out[K] + term if K in out else term
        return out

    return KForm(chart, a.degree + 1, support, batch)


def interior_product(v: VectorField, a: KForm) -> KForm:
    chart = _same_chart(v, a)
    if a.degree < 1:
        raise DegreeOverflow("interior product needs a form of degree >= 1")
    support = {I[:l] + I[l + 1:] for I in a.support for l in range(len(I))}
    ba, vf = a._batch, v

    def batch(p):
        vals = ba(p)
        if not vals:
            return {}
        vv = vf(p)
        out: dict = {}
        for I, c in vals.items():
            for l, i in enumerate(I):
                vi = vv[i]
                if _is_zero(vi):
                    continue
                J = I[:l] + I[l + 1:]
                term = vi * c
                if l % 2:
                    term = -term
                out[J] = out[J] + term if J in out else term
        return out

    return KForm(chart, a.degree - 1, support, batch)


def lie_derivative(v: VectorField, a: KForm) -> KForm:
    """Cartan's formula ``i_v da + d(i_v a)``."""
    _same_chart(v, a)
    dim = a.chart.dim
    if a.degree == 0:
        return interior_product(v, exterior_derivative(a))
    if a.degree == dim:
        return exterior_derivative(interior_product(v, a))
    return interior_product(v, exterior_derivative(a)) + exterior_derivative(interior_product(v, a))


def evaluate_form(a: KForm, point, vectors) -> float:
    vectors = [np.asarray(v, dtype=float) for v in vectors]
    if len(vectors) != a.degree:
        raise ArityMismatch(f"{a.degree}-form evaluated on {len(vectors)} vectors")
    for v in vectors:
        if v.shape != (a.chart.dim,):
            raise ArityMismatch(f"vector of shape {v.shape} on a {a.chart.dim}-chart")
    if not a.chart.contains(point):
        raise DomainError(f"point {list(point)} outside chart {a.chart.name!r}")
    vals = a.values(point)
    if a.degree == 0:
        return float(vals.get((), 0.0))
    V = np.column_stack(vectors)
    return float(sum(c * np.linalg.det(V[list(I), :]) for I, c in vals.items()))


# -- smooth maps --------------------------------------------------------------

class SmoothMap:
    """A map between charts given by its target-coordinate components."""

    def __init__(self, source: Chart, target: Chart, fn, name: str = ""):
        self.source = source
        self.target = target
        self.fn = fn
        self.name = name

    @classmethod
    def from_components(cls, source: Chart, target: Chart, components: Sequence, name: str = "") -> "SmoothMap":
        comps = [ScalarField.lift(source, c) for c in components]
        if len(comps) != target.dim:
            raise ArityMismatch(f"map into {target.name!r} needs {target.dim} components, got {len(comps)}")
        fns = [c.fn for c in comps]
        m = cls(source, target, lambda p: [f(p) for f in fns], name)
        m.components = comps
        return m

    @classmethod
    def from_exprs(cls, source: Chart, target: Chart, exprs: Mapping[str, object], name: str = "") -> "SmoothMap":
        missing = set(target.coordinate_names) - set(exprs)
        if missing:
            raise ArityMismatch(f"no component given for {sorted(missing)}")
        return cls.from_components(source, target, [exprs[n] for n in target.coordinate_names], name)

    @classmethod
    def identity(cls, chart: Chart) -> "SmoothMap":
        return cls(chart, chart, lambda p: list(p), "id")

    def __call__(self, point) -> np.ndarray:
        return np.array([float(primal(x)) for x in self.fn(point)])

    def jacobian(self, point) -> np.ndarray:
        return np.array([[float(primal(x)) for x in row] for row in _jacobian(self.fn, point, self.source.dim)[1]])

    def compose(self, inner: "SmoothMap") -> "SmoothMap":
        """``self o inner``."""
        if inner.target != self.source:
            raise ChartMismatch(f"cannot compose: {inner.target.name!r} is not {self.source.name!r}")
        f, g = self.fn, inner.fn
        return SmoothMap(inner.source, self.target, lambda p: f(g(p)), f"{self.name}o{inner.name}")


def _jacobian(fn, point, n_src):
    """Image and Jacobian rows (target x source) from ``n_src`` dual passes."""
    cols = []
    image = None
    for j in range(n_src):
        tag = new_tag()
        q = list(point)
        q[j] = Dual(q[j], 1.0, tag)
        y = fn(q)
        if image is None:
            image = [_split(c, tag)[0] for c in y]
        cols.append([tangent(c, tag) for c in y])
    rows = [[cols[j][i] for j in range(n_src)] for i in range(len(image))]
    return image, rows


def pullback(m: SmoothMap, a: KForm) -> KForm:
    if a.chart != m.target:
        raise ChartMismatch(f"form lives on {a.chart.name!r}, map targets {m.target.name!r}")
    k = a.degree
    n_src = m.source.dim
    if k > n_src:
        raise DegreeOverflow(f"cannot pull a {k}-form back to a {n_src}-chart")
    src_indices = list(itertools.combinations(range(n_src), k))
    ba, fn = a._batch, m.fn

    def batch(p):
        if k == 0:
            return {(): ba(fn(p)).get((), 0.0)}
        image, jac = _jacobian(fn, p, n_src)
        vals = ba(image)
        out: dict = {}
        for J in src_indices:
            total = 0.0
            for I, c in vals.items():
                if _is_zero(c):
                    continue
                minor = _det([[jac[i][j] for j in J] for i in I])
                if _is_zero(minor):
                    continue
                total = total + c * minor
            if not _is_zero(total):
                out[J] = total
        return out

    return KForm(m.source, k, src_indices if a.support else (), batch)


def max_coefficient_difference(a: KForm, b: KForm, points) -> tuple[float, Optional[np.ndarray]]:
    """Largest ``|a_I - b_I|`` over the points and the point where it occurs."""
    _same_chart(a, b)
    worst, where = 0.0, None
    for p in points:
        va, vb = a.values(p), b.values(p)
        for I in set(va) | set(vb):
            d = abs(va.get(I, 0.0) - vb.get(I, 0.0))
            if d > worst or (where is None and math.isnan(d)):
                worst, where = d, np.asarray(p, dtype=float)
    return worst, where


def product_chart(name: str, *charts: Chart, domain=None) -> Chart:
    names = tuple(n for c in charts for n in c.coordinate_names)
    periodic = tuple(f for c in charts for f in c.periodic)
    return Chart(name, names, domain, periodic)


def _positions(source: Chart, target: Chart) -> list[int]:
    try:
        return [target.coordinate_names.index(n) for n in source.coordinate_names]
    except ValueError:
        raise ChartMismatch(f"{source.name!r} is not a factor of {target.name!r}") from None


def lift_form(a: KForm, target: Chart) -> KForm:
    """Pull ``a`` back along the coordinate projection ``target -> a.chart`` (matched by name)."""
    pos = _positions(a.chart, target)
    remap = {i: pos[i] for i in range(len(pos))}
    ba = a._batch

    def key(I):
        order = sorted(range(len(I)), key=lambda k: remap[I[k]])
        return tuple(remap[I[k]] for k in order), _perm_sign(order)

    keys = {I: key(I) for I in a.support}

    def batch(p):
        out = {}
        for I, c in ba([p[i] for i in pos]).items():
            K, s = keys[I] if I in keys else key(I)
            out[K] = c if s > 0 else -c
        return out

    return KForm(target, a.degree, [k for k, _ in keys.values()], batch)


def lift_field(f: ScalarField, target: Chart) -> ScalarField:
    pos = _positions(f.chart, target)
    if f.const is not None:
        return ScalarField.constant(target, f.const)
    fn = f.fn
    return ScalarField(target, lambda p: fn([p[i] for i in pos]), f.expr)
