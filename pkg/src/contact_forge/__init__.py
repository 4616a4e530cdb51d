"""Numerical verification toolkit for explicit contact-geometry constructions.

Modules: ``expr`` and ``dual`` (expression language and forward-mode AD),
``geometry`` (charts, forms, pullbacks), ``contact`` (models and pointwise
solvers), ``ode`` and ``flows`` (the radial flow and its G bound),
``embeddings`` (unwrapping maps and Legendrian spheres), ``suites``,
``config`` and ``cli`` (the batch front end).
"""

__version__ = "0.1.0"
