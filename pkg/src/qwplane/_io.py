"""Number formatting and CSV / JSON writers shared by the analysis modules and the CLI."""
from __future__ import annotations

import enum
import json
import math
import os

import numpy as np

__all__ = ["fmt", "to_native", "dumps_json", "write_text", "write_csv", "write_json", "write_jsonl"]


def fmt(v) -> str:
    """Render a scalar with 17 significant digits (integers and booleans verbatim)."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    if isinstance(v, enum.Enum):
        return str(v.value)
    return str(v)


def to_native(obj):
    """Recursively convert numpy scalars/arrays, tuples and enums into JSON-ready Python values."""
    if isinstance(obj, dict):
        return {str(k): to_native(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_native(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_native(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else None
    if isinstance(obj, (complex, np.complexfloating)):
        return [to_native(obj.real), to_native(obj.imag)]
    if isinstance(obj, enum.Enum):
        return obj.value
    return obj


class _Encoder(json.JSONEncoder):
    # floats are emitted with repr(), which round-trips exactly (at most 17 significant digits)
    def default(self, o):
        return to_native(o)


def dumps_json(obj, indent=2) -> str:
    return json.dumps(to_native(obj), indent=indent, sort_keys=False, cls=_Encoder, allow_nan=False)


def write_text(path, text: str) -> None:
    d = os.path.dirname(os.fspath(path))
    if d:
        os.makedirs(d, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def csv_text(header, rows) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(fmt(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def write_csv(path, header, rows) -> None:
    write_text(path, csv_text(header, rows))


def write_json(path, obj) -> None:
    write_text(path, dumps_json(obj) + "\n")


def write_jsonl(path, records) -> None:
    write_text(path, "".join(dumps_json(r, indent=None) + "\n" for r in records))
