"""Sweep grids and their CSV/JSON serialisation."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

from ..errors import ConfigError

GRID_JSON_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "qnuel sweep grid",
    "type": "object",
    "required": ["axes", "columns", "rows"],
    "properties": {
        "axes": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["name", "values"],
                "properties": {
                    "name": {"type": "string"},
                    "values": {"type": "array", "minItems": 2, "items": {"type": "number"}},
                },
            },
        },
        "columns": {"type": "array", "items": {"type": "string"}},
        "rows": {
            "type": "array",
            "items": {"type": "array", "items": {"type": ["number", "string"]}},
        },
        "meta": {"type": "object"},
    },
}


@dataclass
class SweepGrid:
    """Values on the Cartesian product of named axes.

    Every entry of ``values`` has shape ``tuple(len(v) for _, v in axes)``;
    entries are floats or string labels.
    """

    axes: list[tuple[str, NDArray]]
    values: dict[str, NDArray]
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.axes = [(name, np.asarray(v, dtype=np.float64)) for name, v in self.axes]
        shape = self.shape
        for name, v in self.axes:
            if v.size < 2:
                raise ConfigError(f"axis {name!r} needs at least 2 points")
        for key, arr in self.values.items():
            if np.shape(arr) != shape:
                raise ConfigError(f"column {key!r} has shape {np.shape(arr)}, expected {shape}")

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(v.size for _, v in self.axes)

    def axis(self, name: str) -> NDArray:
        return dict(self.axes)[name]

    def rows(self):
        names = list(self.values)
        for idx in np.ndindex(*self.shape):
            coords = [self.axes[k][1][i] for k, i in enumerate(idx)]
            yield coords + [self.values[c][idx] for c in names]


def _fmt(x) -> str:
    if isinstance(x, str):
        return str(x)
    return format(float(x), ".17g")


def emit_grid(g: SweepGrid, fmt: str, path: str | Path) -> Path:
    """Write ``g`` row-major over its axes. Raises ``OSError`` if unwritable."""
    path = Path(path)
    columns = [name for name, _ in g.axes] + list(g.values)
    if fmt == "csv":
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(columns)
            for row in g.rows():
                w.writerow([_fmt(x) for x in row])
    elif fmt == "json":
        doc = {
            "axes": [{"name": n, "values": v.tolist()} for n, v in g.axes],
            "columns": columns,
            "rows": [[str(x) if isinstance(x, str) else float(x) for x in row] for row in g.rows()],
            "meta": g.meta,
        }
        path.write_text(json.dumps(doc), encoding="utf-8")
    else:
        raise ConfigError(f"unknown grid format {fmt!r}")
    return path


def _parse_cell(text: str):
    try:
        return float(text)
    except ValueError:
        return text


def read_grid(path: str | Path) -> SweepGrid:
    """Inverse of :func:`emit_grid` for files it wrote (format by suffix)."""
    path = Path(path)
    if path.suffix == ".json":
        doc = json.loads(path.read_text(encoding="utf-8"))
        axes = [(a["name"], np.array(a["values"])) for a in doc["axes"]]
        columns, rows, meta = doc["columns"], doc["rows"], doc.get("meta", {})
    else:
        with path.open(newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            columns = next(reader)
            rows = [[_parse_cell(x) for x in r] for r in reader]
        axes = []
        # recover axis values from the row-major ordering
        naxes = _count_axes(columns, rows)
        for k in range(naxes):
            seen = list(dict.fromkeys(r[k] for r in rows))
            axes.append((columns[k], np.array(seen)))
        meta = {}
    shape = tuple(len(v) for _, v in axes)
    values = {}
    for c, name in enumerate(columns[len(axes):], start=len(axes)):
        col = [r[c] for r in rows]
        arr = np.array(col, dtype=object if any(isinstance(x, str) for x in col) else np.float64)
        values[name] = arr.reshape(shape)
    return SweepGrid(axes, values, meta)


def _count_axes(columns: list[str], rows: list[list]) -> int:
    # axes come first and their product equals the row count
    for k in range(1, len(columns)):
        size = 1
        for j in range(k):
            size *= len(dict.fromkeys(r[j] for r in rows))
        if size == len(rows):
            return k
    raise ConfigError("cannot infer grid axes from CSV")
