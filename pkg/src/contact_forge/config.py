"""Scenario configuration: a flat ``key = value`` text format with ``[section]`` headers.

Values are numbers, ``true``/``false``, bare comma-separated lists, or
double-quoted strings (expressions must be quoted).  ``[form NAME]`` and
``[map NAME]`` sections declare user objects in the expression grammar.
Every key is validated against a schema; unknown keys and out-of-range
values raise :class:`ConfigError` pointing at the offending line and column.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

from .errors import ConfigError

SUITES = ("constants", "g_profile", "conformal", "contact", "G_bound", "squeeze", "unwrap", "rescale",
          "legendrian", "calculus", "pointwise", "user")


@dataclass(frozen=True)
class Value:
    raw: Any
    line: int
    column: int


def _positive(x):
    return x > 0


def _non_negative(x):
    return x >= 0


class _Kind:
    def __init__(self, name: str, convert: Callable, check: Optional[Callable] = None, what: str = ""):
        self.name, self.convert, self.check, self.what = name, convert, check, what


def _to_float(v):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ValueError("expected a number")
    x = float(v)
    if not math.isfinite(x):
        raise ValueError("expected a finite number")
    return x


def _to_int(v):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or float(v) != int(v):
        raise ValueError("expected an integer")
    return int(v)


def _to_bool(v):
    if not isinstance(v, bool):
        raise ValueError("expected true or false")
    return v


def _to_list(v):
    if isinstance(v, list):
        return [str(x) for x in v]
    return [str(v)]


def _to_int_list(v):
    return [_to_int(x) for x in (v if isinstance(v, list) else [v])]


def _to_float_list(v):
    return [_to_float(x) for x in (v if isinstance(v, list) else [v])]


def _to_str(v):
    if not isinstance(v, str):
        raise ValueError("expected a quoted string")
    return v


POS = _Kind("positive number", _to_float, _positive, "must be positive")
REAL = _Kind("number", _to_float)
COUNT = _Kind("positive integer", _to_int, lambda x: x >= 1, "must be at least 1")
NONNEG_INT = _Kind("integer", _to_int, _non_negative, "must be non-negative")
BOOL = _Kind("boolean", _to_bool)
NAMES = _Kind("list", _to_list)
ORDERS = _Kind("list of integers", _to_int_list, lambda xs: all(1 <= x <= 3 for x in xs), "orders must lie in 1..3")
POS_LIST = _Kind("list of numbers", _to_float_list, lambda xs: all(x > 0 for x in xs), "entries must be positive")
TEXT = _Kind("string", _to_str)

SCHEMA: dict[str, dict[str, _Kind]] = {
    "run": {"suites": NAMES, "seed": NONNEG_INT, "parallel": BOOL},
    "constants": {},
    "g_profile": {"points": _Kind("integer", _to_int, lambda x: x >= 2, "must be at least 2"), "r_max": POS},
    "conformal": {"samples": COUNT, "h": POS, "tol": POS},
    "contact": {"samples": COUNT, "h": POS, "c": POS, "n": COUNT},
    "G_bound": {"grid": _Kind("integer", _to_int, lambda x: x >= 100, "must be at least 100"),
                "closed_form_radii": COUNT, "rtol": POS, "atol": POS},
    "squeeze": {"h": POS, "h_prime": POS, "c": POS, "samples": COUNT, "target_factor": POS, "delta": POS,
                "n": COUNT, "scan_grid": NONNEG_INT},
    "unwrap": {"orders": ORDERS, "C": POS, "epsilon": POS, "delta": POS, "samples": COUNT, "hbars": POS_LIST},
    "rescale": {"C_OT": POS, "delta": POS, "n": COUNT, "samples": COUNT, "f": TEXT, "rho": POS,
                "stretch": REAL},
    "legendrian": {"n": COUNT, "samples": COUNT},
    "calculus": {"samples": COUNT, "corpus": COUNT},
    "pointwise": {"samples": COUNT},
}

FORM_KEYS = {"coordinates": NAMES, "samples": COUNT, "half_width": POS, "center": _Kind("list of numbers", _to_float_list)}
MAP_KEYS = {"source": NAMES, "target": NAMES, "samples": COUNT, "half_width": POS, "tol": POS,
            "center": _Kind("list of numbers", _to_float_list)}


@dataclass
class UserObject:
    kind: str
    name: str
    values: dict[str, Value]
    line: int


@dataclass
class ScenarioConfig:
    sections: dict[str, dict[str, Any]] = field(default_factory=dict)
    users: list[UserObject] = field(default_factory=list)
    locations: dict[tuple[str, str], tuple[int, int]] = field(default_factory=dict)

    def get(self, section: str, key: str, default):
        return self.sections.get(section, {}).get(key, default)

    @property
    def suites(self) -> list[str]:
        return self.get("run", "suites", list(SUITES))

    @property
    def seed(self) -> Optional[int]:
        return self.get("run", "seed", None)


_SECTION_RE = re.compile(r"^\[\s*([A-Za-z_][A-Za-z0-9_]*)(?:\s+([A-Za-z_][A-Za-z0-9_]*))?\s*\]\s*$")
_KEY_RE = re.compile(r"^([A-Za-z_][A-Za-z0-9_.]*)\s*=")
_NUMBER_RE = re.compile(r"^[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?$")


def _parse_scalar(text: str, line: int, col: int):
    t = text.strip()
    if not t:
        raise ConfigError("missing value", line, col)
    if t.startswith('"'):
        if len(t) < 2 or not t.endswith('"') or '"' in t[1:-1]:
            raise ConfigError("unterminated or malformed quoted string", line, col)
        return t[1:-1]
    if t in ("true", "false"):
        return t == "true"
    if _NUMBER_RE.match(t):
        x = float(t)
        return int(x) if re.match(r"^[+-]?\d+$", t) else x
    if re.match(r"^[A-Za-z_][A-Za-z0-9_]*$", t):
        return t
    raise ConfigError(f"cannot read value {t!r} (expressions must be quoted)", line, col)


def _parse_value(text: str, line: int, col: int):
    stripped = text.strip()
    lead = len(text) - len(text.lstrip())
    if stripped.startswith('"'):
        return _parse_scalar(stripped, line, col + lead)
    if "," in stripped:
        parts, offset = [], col
        for piece in text.split(","):
            lead = len(piece) - len(piece.lstrip())
            parts.append(_parse_scalar(piece, line, offset + lead))
            offset += len(piece) + 1
        return parts
    return _parse_scalar(stripped, line, col + lead)


def _strip_comment(line: str) -> str:
    out, quoted = [], False
    for ch in line:
        if ch == '"':
            quoted = not quoted
        if ch in "#;" and not quoted:
            break
        out.append(ch)
    return "".join(out).rstrip()


def _validate(kind: _Kind, value: Value, key: str):
    try:
        x = kind.convert(value.raw)
    except ValueError as err:
        raise ConfigError(f"{key}: {err}", value.line, value.column) from None
    if kind.check is not None and not kind.check(x):
        raise ConfigError(f"{key} {kind.what}", value.line, value.column)
    return x


def parse_config(text: str) -> ScenarioConfig:
    cfg = ScenarioConfig()
    current: Optional[str] = None
    user: Optional[UserObject] = None
    raw: dict[str, dict[str, Value]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = _strip_comment(line)
        if not body.strip():
            continue
        indent = len(body) - len(body.lstrip())
        stripped = body.strip()
        if stripped.startswith("["):
            m = _SECTION_RE.match(stripped)
            if not m:
                raise ConfigError("malformed section header", lineno, indent + 1)
            name, label = m.group(1), m.group(2)
            if name in ("form", "map"):
                if label is None:
                    raise ConfigError(f"[{name}] sections need a name", lineno, indent + 1)
                if any(u.name == label for u in cfg.users):
                    raise ConfigError(f"duplicate user object {label!r}", lineno, indent + 1)
                user = UserObject(name, label, {}, lineno)
                cfg.users.append(user)
                current = None
                continue
            if label is not None or name not in SCHEMA:
                raise ConfigError(f"unknown section [{stripped[1:-1].strip()}]", lineno, indent + 1)
            if name in raw:
                raise ConfigError(f"duplicate section [{name}]", lineno, indent + 1)
            current, user = name, None
            raw[name] = {}
            continue
        m = _KEY_RE.match(stripped)
        if not m:
            raise ConfigError("expected 'key = value'", lineno, indent + 1)
        key = m.group(1)
        rest = stripped[m.end():]
        rest_col = indent + m.end() + 1
        value_col = rest_col + len(rest) - len(rest.lstrip())
        value = Value(_parse_value(rest, lineno, rest_col), lineno, value_col)
        if user is not None:
            if key in user.values:
                raise ConfigError(f"duplicate key {key!r}", lineno, indent + 1)
            user.values[key] = value
            continue
        if current is None:
            raise ConfigError("key outside of any section", lineno, indent + 1)
        if key not in SCHEMA[current]:
            raise ConfigError(f"unknown key {key!r} in [{current}]", lineno, indent + 1)
        if key in raw[current]:
            raise ConfigError(f"duplicate key {key!r}", lineno, indent + 1)
        raw[current][key] = value

    for section, entries in raw.items():
        out = cfg.sections.setdefault(section, {})
        for key, value in entries.items():
            out[key] = _validate(SCHEMA[section][key], value, key)
            cfg.locations[(section, key)] = (value.line, value.column)
    if "run" in raw and "suites" in raw["run"]:
        v = raw["run"]["suites"]
        for s in cfg.sections["run"]["suites"]:
            if s not in SUITES:
                raise ConfigError(f"unknown suite {s!r}", v.line, v.column)
    sq = cfg.sections.get("squeeze", {})
    if sq.get("h_prime", 1.0) > sq.get("h", 5.0):
        v = raw["squeeze"].get("h_prime") or raw["squeeze"]["h"]
        raise ConfigError("h_prime must not exceed h", v.line, v.column)
    for u in cfg.users:
        _check_user(u)
    return cfg


def _check_user(u: UserObject):
    if u.kind == "form":
        coords = u.values.get("coordinates")
        if coords is None:
            raise ConfigError(f"[form {u.name}] needs 'coordinates'", u.line, 1)
        names = _validate(NAMES, coords, "coordinates")
        for key, v in u.values.items():
            if key in FORM_KEYS:
                _validate(FORM_KEYS[key], v, key)
            elif key.startswith("d") and key[1:] in names:
                _validate(TEXT, v, key)
            else:
                raise ConfigError(f"unknown key {key!r} in [form {u.name}]", v.line, v.column)
        if len(names) % 2 == 0:
            raise ConfigError("a contact form needs an odd number of coordinates", coords.line, coords.column)
    else:
        for need in ("source", "target"):
            if need not in u.values:
                raise ConfigError(f"[map {u.name}] needs {need!r}", u.line, 1)
        src = _validate(NAMES, u.values["source"], "source")
        tgt = _validate(NAMES, u.values["target"], "target")
        for key, v in u.values.items():
            if key in MAP_KEYS:
                _validate(MAP_KEYS[key], v, key)
            elif key in tgt:
                _validate(TEXT, v, key)
            elif key.startswith("form.") and key[5:] in tgt:
                _validate(TEXT, v, key)
            elif key.startswith("expected.") and key[9:] in src:
                _validate(TEXT, v, key)
            else:
                raise ConfigError(f"unknown key {key!r} in [map {u.name}]", v.line, v.column)
        for name in tgt:
            if name not in u.values:
                raise ConfigError(f"[map {u.name}] has no component for {name!r}", u.line, 1)


def load_config(path: str) -> ScenarioConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as err:
        raise ConfigError(f"cannot read {path}: {err.strerror}") from None
    return parse_config(text)
