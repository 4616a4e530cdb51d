"""Random expressions, forms, fields and maps for randomized calculus checks.

Generated expressions stay finite on ``[-1.5, 1.5]^d``: divisions, logs and
roots only see arguments bounded away from their singularities.
"""

from __future__ import annotations

from itertools import combinations

import numpy as np

from .expr import parse, to_text
from .geometry import Chart, KForm, SmoothMap, VectorField


def random_expression(rng: np.random.Generator, names, depth: int = 3) -> str:
    names = list(names)

    def leaf():
        if rng.random() < 0.7:
            return str(rng.choice(names))
        return f"{rng.integers(1, 20) / 10:g}"

    def build(d):
        if d == 0 or rng.random() < 0.25:
            return leaf()
        a = build(d - 1)
        k = int(rng.integers(0, 10))
        if k == 0:
            return f"({a}) + ({build(d - 1)})"
        if k == 1:
            return f"({a}) - ({build(d - 1)})"
        if k == 2:
            return f"({a}) * ({build(d - 1)})"
        if k == 3:
            return f"({a}) / (2 + sin({build(d - 1)}))"
        if k == 4:
            return f"({a})^{int(rng.integers(2, 4))}"
        if k == 5:
            return f"sin({a})"
        if k == 6:
            return f"cos({a})"
        if k == 7:
            return f"exp(0.5*sin({a}))"
        if k == 8:
            return f"ln(2 + cos({a}))"
        return f"sqrt(1.5 + sin({a}))"

    # round-trip through the parser normalizes the text
    return to_text(parse(build(depth)))


def random_chart(dim: int, name: str = "") -> Chart:
    return Chart(name or f"rand{dim}", tuple(f"u{i}" for i in range(dim)))


def random_form(rng: np.random.Generator, chart: Chart, degree: int, depth: int = 2, density: float = 0.7) -> KForm:
    if degree == 0:
        return KForm.from_fields(chart, 0, {(): random_expression(rng, chart.coordinate_names, depth)})
    coeffs = {}
    for idx in combinations(range(chart.dim), degree):
        if rng.random() < density:
            coeffs[idx] = random_expression(rng, chart.coordinate_names, depth)
    if not coeffs:
        idx = tuple(sorted(rng.choice(chart.dim, degree, replace=False).tolist()))
        coeffs[idx] = random_expression(rng, chart.coordinate_names, depth)
    return KForm.from_fields(chart, degree, coeffs)


def random_vector_field(rng: np.random.Generator, chart: Chart, depth: int = 2) -> VectorField:
    return VectorField.from_exprs(chart, {n: random_expression(rng, chart.coordinate_names, depth)
                                          for n in chart.coordinate_names})


def random_map(rng: np.random.Generator, source: Chart, target: Chart, depth: int = 2) -> SmoothMap:
    return SmoothMap.from_exprs(source, target, {n: random_expression(rng, source.coordinate_names, depth)
                                                 for n in target.coordinate_names}, "random")


def random_points(rng: np.random.Generator, chart: Chart, k: int, half_width: float = 1.0) -> np.ndarray:
    return rng.uniform(-half_width, half_width, (k, chart.dim))
