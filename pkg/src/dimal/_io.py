"""Locale-independent CSV/JSON helpers shared by the modules."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np


def format_float(x) -> str:
    """Shortest decimal string that round-trips to the same double."""
    return repr(float(x))


def write_matrix_csv(path, matrix, header=None) -> None:
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if header is not None:
            writer.writerow(header)
        for row in matrix:
            if row.size:
                writer.writerow([format_float(v) for v in row])


def read_matrix_csv(path, has_header=None) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        return np.zeros((0, 0))
    if has_header is None:
        try:
            float(rows[0][0])
            has_header = False
        except ValueError:
            has_header = True
    width = len(rows[0])
    if has_header:
        rows = rows[1:]
    if not rows:
        return np.zeros((0, width))
    return np.array([[float(v) for v in r] for r in rows], dtype=float)


def write_column_csv(path, values) -> None:
    Path(path).write_text("".join(format_float(v) + "\n" for v in values))


def read_column_csv(path) -> np.ndarray:
    lines = [ln.strip() for ln in Path(path).read_text().splitlines() if ln.strip()]
    return np.array([float(v) for v in lines], dtype=float)


def dump_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=False) + "\n")
