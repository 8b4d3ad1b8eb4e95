"""Deterministic JSON output.

Result files must be byte-identical across reruns, so floats are printed
with a fixed 17-significant-digit format (enough to round-trip float64) and
object keys are emitted sorted.  The stdlib encoder offers no hook for float
formatting, hence this small emitter; files it writes are plain JSON and are
read back with json.loads.
"""

from __future__ import annotations

import math
from pathlib import Path


def format_float(x: float) -> str:
    if math.isnan(x):
        raise ValueError("NaN is not representable in strict JSON; use None")
    if math.isinf(x):
        raise ValueError("Infinity is not representable in strict JSON; use None")
    text = format(x, ".17g")
    # keep a float marker so round-tripped types stay floats
    if "." not in text and "e" not in text and "E" not in text:
        text += ".0"
    return text


_ESCAPES = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\t": "\\t", "\r": "\\r", "\b": "\\b", "\f": "\\f"}


def _quote(text: str) -> str:
    out = ['"']
    for ch in text:
        if ch in _ESCAPES:
            out.append(_ESCAPES[ch])
        elif ord(ch) < 0x20:
            out.append(f"\\u{ord(ch):04x}")
        else:
            out.append(ch)
    out.append('"')
    return "".join(out)


def _encode(obj, pieces: list, indent: int) -> None:
    pad = "  " * indent
    if obj is None:
        pieces.append("null")
    elif obj is True:
        pieces.append("true")
    elif obj is False:
        pieces.append("false")
    elif isinstance(obj, str):
        pieces.append(_quote(obj))
    elif isinstance(obj, int):
        pieces.append(str(obj))
    elif isinstance(obj, float):
        pieces.append(format_float(obj))
    elif isinstance(obj, dict):
        if not obj:
            pieces.append("{}")
            return
        pieces.append("{\n")
        keys = sorted(obj)
        for i, key in enumerate(keys):
            if not isinstance(key, str):
                raise TypeError(f"JSON object keys must be strings, got {type(key)}")
            pieces.append(pad + '  "' + key + '": ')
            _encode(obj[key], pieces, indent + 1)
            pieces.append(",\n" if i < len(keys) - 1 else "\n")
        pieces.append(pad + "}")
    elif isinstance(obj, (list, tuple)):
        if not obj:
            pieces.append("[]")
            return
        pieces.append("[\n")
        for i, item in enumerate(obj):
            pieces.append(pad + "  ")
            _encode(item, pieces, indent + 1)
            pieces.append(",\n" if i < len(obj) - 1 else "\n")
        pieces.append(pad + "]")
    else:
        raise TypeError(f"cannot serialize {type(obj)}")


def dumps(obj) -> str:
    pieces: list[str] = []
    _encode(obj, pieces, 0)
    pieces.append("\n")
    return "".join(pieces)


def dump(obj, path) -> None:
    Path(path).write_text(dumps(obj))
