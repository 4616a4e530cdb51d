"""Verification outcome records and their reduction."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

PASS, FAIL, ERROR = "PASS", "FAIL", "ERROR"
_RANK = {PASS: 0, FAIL: 1, ERROR: 2}


def _plain(x):
    if isinstance(x, np.ndarray):
        return [_plain(v) for v in x.tolist()]
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    return x


@dataclass(frozen=True)
class Report:
    check: str
    status: str
    parameters: dict = field(default_factory=dict)
    samples: int = 0
    max_residual: float = 0.0
    witness: Optional[list] = None
    wall_time: float = 0.0
    seed: Optional[int] = None
    message: str = ""
    metrics: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.status not in _RANK:
            raise ValueError(f"unknown status {self.status!r}")
        r = float(self.max_residual)
        if not (r >= 0.0 or math.isnan(r)):
            raise ValueError("residuals are non-negative")
        object.__setattr__(self, "max_residual", r)
        if self.status != PASS and self.witness is None and not self.message:
            raise ValueError(f"a {self.status} report needs a witness or a message")
        if self.witness is not None:
            object.__setattr__(self, "witness", _plain(self.witness))
        object.__setattr__(self, "parameters", _plain(dict(self.parameters)))
        object.__setattr__(self, "metrics", _plain(dict(self.metrics)))

    @property
    def passed(self) -> bool:
        return self.status == PASS

    def to_dict(self, wall_time: bool = True) -> dict:
        d = {
            "check": self.check,
            "status": self.status,
            "parameters": self.parameters,
            "samples": int(self.samples),
            "max_residual": _json_float(self.max_residual),
            "witness": self.witness,
            "wall_time": self.wall_time if wall_time else None,
            "seed": self.seed,
            "message": self.message,
            "metrics": {k: _json_float(v) if isinstance(v, float) else v for k, v in self.metrics.items()},
        }
        return d


def _json_float(x: float):
    return x if math.isfinite(x) else str(x)


def _residual_key(r: Report):
    res = r.max_residual
    return (math.isnan(res), -math.inf if math.isnan(res) else res)


def _pick(a: Report, b: Report, key) -> Report:
    ka, kb = key(a), key(b)
    if ka != kb:
        return a if ka > kb else b
    return a if repr(a.witness) <= repr(b.witness) else b


def _by_residual(r: Report):
    return _residual_key(r), r.witness is not None


def _by_status(r: Report):
    # failing parts keep their witness so the merged report stays explained
    return _RANK[r.status], r.witness is not None, _residual_key(r)


def _merge_keywise(x: dict, y: dict) -> dict:
    out = dict(x)
    for k, v in y.items():
        if k not in out or repr(v) < repr(out[k]):
            out[k] = v
    return {k: out[k] for k in sorted(out)}


def combine(a: Report, b: Report) -> Report:
    """Merge two partial reports of the same check.

    Associative and commutative (``wall_time`` up to float rounding): worst
    status, summed samples, the larger residual, the witness of the worst
    part, and key-wise merged parameters and metrics with ties broken on ``repr``.
    """
    if a.check != b.check:
        raise ValueError(f"cannot combine {a.check!r} with {b.check!r}")
    status = a.status if _RANK[a.status] >= _RANK[b.status] else b.status
    top = _pick(a, b, _by_residual)
    blame = _pick(a, b, _by_status)
    parts = {m for r in (a, b) for m in r.message.split("; ") if m}
    seeds = [s for s in (a.seed, b.seed) if s is not None]
    return Report(
        check=a.check,
        status=status,
        parameters=_merge_keywise(a.parameters, b.parameters),
        samples=a.samples + b.samples,
        max_residual=top.max_residual,
        witness=blame.witness,
        wall_time=a.wall_time + b.wall_time,
        seed=min(seeds) if seeds else None,
        message="; ".join(sorted(parts)),
        metrics=_merge_keywise(a.metrics, b.metrics),
    )


def reduce_reports(reports: Sequence[Report]) -> Report:
    it = iter(reports)
    out = next(it)
    for r in it:
        out = combine(out, r)
    return out


def error_report(check: str, exc: BaseException, parameters=None, seed=None, wall_time=0.0) -> Report:
    return Report(check, ERROR, parameters or {}, 0, 0.0, None, wall_time, seed,
                  f"{type(exc).__name__}: {exc}")


class Stopwatch:
    def __init__(self):
        self.start = time.perf_counter()

    @property
    def elapsed(self) -> float:
        return time.perf_counter() - self.start


def with_time(report: Report, seconds: float) -> Report:
    return replace(report, wall_time=seconds)
