"""Deterministic JSON output with floats written at 17 significant digits."""
from __future__ import annotations

import json
import math
from fractions import Fraction

import numpy as np


def fmt_float(x: float) -> str:
    x = float(x)
    if math.isnan(x) or math.isinf(x):
        # JSON has no literal for these; the reader maps the strings back
        return json.dumps(repr(x))
    out = format(x, ".17g")
    if not any(ch in out for ch in ".en"):
        out += ".0"
    return out


def dumps(obj, indent: int | None = 1) -> str:
    return _write(obj, indent, 0)


def _write(obj, indent, level):
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return json.dumps(None if obj is None else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating, Fraction)):
        return fmt_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return _write([obj.real, obj.imag], indent, level)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    pad = "" if indent is None else "\n" + " " * (indent * (level + 1))
    end = "" if indent is None else "\n" + " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [json.dumps(str(k)) + ": " + _write(v, indent, level + 1) for k, v in obj.items()]
        return "{" + ",".join(pad + it for it in items) + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        # flat numeric rows stay on one line
        if all(isinstance(v, (int, float, np.integer, np.floating, Fraction)) for v in obj):
            return "[" + ", ".join(_write(v, None, 0) for v in obj) + "]"
        return "[" + ",".join(pad + _write(v, indent, level + 1) for v in obj) + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")
