"""Field CSV and report JSON with 17 significant digits, written atomically."""
from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .grid import Grid, GridMismatch


def fmt(x: float) -> str:
    return "%.17g" % x


def atomic_write(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def field_csv(g: Grid, values) -> str:
    values = g.check(values)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["x", "value"] if g.dim == 1 else ["x", "y", "value"])
    for coords, val in zip(g.coordinates(), values):
        writer.writerow([fmt(c) for c in coords] + [fmt(val)])
    return buf.getvalue()


def write_field_csv(path, g: Grid, values) -> None:
    atomic_write(path, field_csv(g, values))


def read_field_csv(path, g: Grid) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], [r for r in rows[1:] if r]
    expected = ["x", "value"] if g.dim == 1 else ["x", "y", "value"]
    if [h.strip() for h in header] != expected:
        raise GridMismatch(f"{path}: header {header} does not match {expected}")
    data = np.array(body, dtype=float).reshape(-1, g.dim + 1)
    if data.shape[0] != g.size or not np.allclose(data[:, :-1], g.coordinates(), rtol=0, atol=1e-12):
        raise GridMismatch(f"{path}: node coordinates do not match the grid")
    return data[:, -1].copy()


def _encode(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(isinstance(x, (int, float, np.number)) and not isinstance(x, bool) for x in seq):
            return "[" + ", ".join(_encode(x, indent, level) for x in seq) + "]"
        return "[\n" + ",\n".join(pad + _encode(x, indent, level + 1) for x in seq) + "\n" + end + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "NaN"
        if math.isinf(x):
            return "Infinity" if x > 0 else "-Infinity"
        return fmt(x)
    if isinstance(obj, str):
        return json.dumps(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    """JSON text with every float at 17 significant digits."""
    return _encode(obj, indent, 0) + "\n"


def write_json(path, obj) -> None:
    atomic_write(path, dumps(obj))
