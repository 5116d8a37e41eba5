"""Deterministic JSON emission with fixed float precision.

Floats are written with 17 significant digits so every value round-trips
bit-exactly; keys keep insertion order. Parsing is plain stdlib json.
"""

from __future__ import annotations

import json
import math


def _emit(obj, out: list[str], indent: int) -> None:
    pad = "  " * indent
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, float):
        if not math.isfinite(obj):
            raise ValueError(f"non-finite float {obj!r} in JSON document")
        out.append("%.17g" % obj)
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, (list, tuple)):
        if not obj:
            out.append("[]")
            return
        out.append("[")
        for i, item in enumerate(obj):
            out.append("\n" + pad + "  ")
            _emit(item, out, indent + 1)
            if i != len(obj) - 1:
                out.append(",")
        out.append("\n" + pad + "]")
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{")
        items = list(obj.items())
        for i, (key, value) in enumerate(items):
            if not isinstance(key, str):
                raise TypeError(f"JSON object keys must be strings, got {key!r}")
            out.append("\n" + pad + "  " + json.dumps(key) + ": ")
            _emit(value, out, indent + 1)
            if i != len(items) - 1:
                out.append(",")
        out.append("\n" + pad + "}")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__} to JSON")


def dumps_json(obj) -> str:
    out: list[str] = []
    _emit(obj, out, 0)
    out.append("\n")
    return "".join(out)


def loads_json(text: str):
    return json.loads(text)
