"""Byte-stable JSON and CSV serialization of reports."""

import json
import math
import sys

import numpy as np

REPORT_KEYS = ("command", "inputs", "scalars", "flags", "timing_ms")


def _float(x):
    if not math.isfinite(x):
        return "null"
    return "%.17g" % x


def to_json(obj, indent=2, _level=0):
    """JSON text with sorted keys and floats written to 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{to_json(str(k))}: {to_json(obj[k], indent, _level + 1)}" for k in sorted(obj, key=str)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(to_json(v) for v in obj) + "]"
        items = [pad + to_json(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def to_csv(matrix):
    """Row-major CSV of a vector or full (symmetric) matrix."""
    M = np.atleast_2d(np.asarray(matrix, dtype=float))
    return "".join(",".join(_float(float(x)) for x in row) + "\n" for row in M)


def emit_report(report, format="json", path=None, matrix=None):
    """Write ``report`` (or ``matrix`` for CSV) to ``path`` or stdout.

    Raises OSError on I/O failure.
    """
    if format == "json":
        text = to_json(report) + "\n"
    elif format == "csv":
        if matrix is None:
            raise ValueError("csv output needs a matrix")
        text = to_csv(matrix)
    else:
        raise ValueError(f"unknown format {format!r}")
    if path is None or path == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
