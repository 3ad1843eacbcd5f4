"""File formats: CSV and JSON readers and writers.

All writers produce deterministic text (fixed float formatting, sorted JSON
keys) so repeated runs give byte-identical files.
"""
from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .complex import CellComplex, Skeleton, build_b2, build_skeleton

FLOAT_FMT = "%.17g"


class ParseError(ValueError):
    """Malformed input file; carries the file name and 1-based line."""

    def __init__(self, path, line: int | None, message: str):
        loc = f"{path}:{line}" if line is not None else str(path)
        super().__init__(f"{loc}: {message}")
        self.path = str(path)
        self.line = line


def _rows(path) -> Iterable[tuple[int, list[str]]]:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(path, None, f"cannot read file ({exc.strerror})") from exc
    for lineno, row in enumerate(csv.reader(text.splitlines()), start=1):
        row = [c.strip() for c in row]
        if not row or all(c == "" for c in row) or row[0].startswith("#"):
            continue
        yield lineno, row


def _ints(path, lineno, row):
    try:
        return [int(c) for c in row if c != ""]
    except ValueError:
        raise ParseError(path, lineno, f"expected integers, got {','.join(row)!r}") from None


def _floats(path, lineno, row):
    try:
        return [float(c) for c in row if c != ""]
    except ValueError:
        raise ParseError(path, lineno, f"expected numbers, got {','.join(row)!r}") from None


def _is_header(row) -> bool:
    try:
        [float(c) for c in row if c != ""]
        return False
    except ValueError:
        return True


def read_edges(path, index_base: int = 0) -> Skeleton:
    """Edge list CSV ``tail,head``; an optional leading header is skipped."""
    pairs = []
    for k, (lineno, row) in enumerate(_rows(path)):
        if k == 0 and _is_header(row):
            continue
        vals = _ints(path, lineno, row)
        if len(vals) != 2:
            raise ParseError(path, lineno, f"expected 2 node ids, got {len(vals)}")
        pairs.append(vals)
    if not pairs:
        raise ParseError(path, None, "no edges")
    try:
        return build_skeleton(pairs, index_base=index_base)
    except ValueError as exc:
        raise ParseError(path, None, str(exc)) from exc


def read_cells(path, skeleton: Skeleton, index_base: int = 0) -> CellComplex:
    """Cell CSV, one node cycle per line."""
    cycles = []
    for lineno, row in _rows(path):
        vals = [v - index_base for v in _ints(path, lineno, row)]
        if len(vals) < 3:
            raise ParseError(path, lineno, "a cell needs at least 3 nodes")
        cycles.append(vals)
    try:
        return build_b2(skeleton, cycles)
    except ValueError as exc:
        raise ParseError(path, None, str(exc)) from exc


def write_edges(path, skeleton: Skeleton) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("tail,head\n")
        for t, h in skeleton.edges:
            fh.write(f"{t},{h}\n")


def write_cells(path, cx: CellComplex) -> None:
    with open(path, "w", newline="") as fh:
        for c in cx.cells:
            fh.write(",".join(map(str, c.node_cycle)) + "\n")


def complex_to_dict(cx: CellComplex) -> dict:
    return {
        "num_nodes": cx.skeleton.num_nodes,
        "edges": [list(e) for e in cx.skeleton.edges],
        "cells": [list(c.node_cycle) for c in cx.cells],
        "B1": cx.B1.astype(int).tolist(),
        "B2": cx.B2.astype(int).reshape(cx.skeleton.num_edges, cx.num_cells).tolist(),
    }


def complex_from_dict(d: dict) -> CellComplex:
    sk = build_skeleton(d["edges"])
    if sk.num_nodes != d.get("num_nodes", sk.num_nodes):
        raise ValueError("num_nodes does not match the edge list")
    cx = build_b2(sk, d.get("cells", []))
    if "B2" in d and cx.num_cells and not np.array_equal(np.asarray(d["B2"]), cx.B2):
        raise ValueError("stored B2 differs from the one rebuilt from cells")
    return cx


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise ParseError(path, None, f"cannot read file ({exc.strerror})") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(path, exc.lineno, exc.msg) from exc


def write_complex(path, cx: CellComplex) -> None:
    write_json(path, complex_to_dict(cx))


def read_complex(path) -> CellComplex:
    d = read_json(path)
    try:
        return complex_from_dict(d)
    except (KeyError, ValueError) as exc:
        raise ParseError(path, None, f"invalid complex: {exc}") from exc


def read_matrix(path, rows: int | None = None) -> np.ndarray:
    """Numeric CSV as a 2-D array (rows = edges); a text header is skipped."""
    data = []
    for k, (lineno, row) in enumerate(_rows(path)):
        if k == 0 and _is_header(row):
            continue
        vals = _floats(path, lineno, row)
        if data and len(vals) != len(data[0]):
            raise ParseError(path, lineno, f"expected {len(data[0])} columns, got {len(vals)}")
        data.append(vals)
    if not data:
        raise ParseError(path, None, "no data rows")
    X = np.array(data, dtype=float)
    if rows is not None and X.shape[0] != rows:
        raise ParseError(path, None, f"expected {rows} rows (one per edge), got {X.shape[0]}")
    return X


def read_signal(path, num_edges: int | None = None) -> np.ndarray:
    X = read_matrix(path, num_edges)
    if X.shape[1] != 1:
        raise ParseError(path, None, f"expected one value per line, got {X.shape[1]} columns")
    return X[:, 0]


def write_table(path, columns: dict[str, Sequence], fmt: str = FLOAT_FMT) -> None:
    """CSV with a header row; numbers written with ``fmt``, others with ``str``."""
    names = list(columns)
    cols = [list(columns[n]) for n in names]
    n = len(cols[0]) if cols else 0
    if any(len(c) != n for c in cols):
        raise ValueError("columns differ in length")

    def cell(v):
        if isinstance(v, (int, np.integer)):
            return str(int(v))
        if isinstance(v, (float, np.floating)):
            return fmt % v
        return str(v)

    with open(path, "w", newline="") as fh:
        fh.write(",".join(names) + "\n")
        for i in range(n):
            fh.write(",".join(cell(c[i]) for c in cols) + "\n")


def write_signal(path, x) -> None:
    np.savetxt(path, np.asarray(x, dtype=float).reshape(-1, 1), fmt=FLOAT_FMT)


def read_samples(path) -> tuple[np.ndarray, np.ndarray]:
    """Sample CSV ``edge_index,value``; returns indices and values."""
    idx, val = [], []
    for k, (lineno, row) in enumerate(_rows(path)):
        if k == 0 and _is_header(row):
            continue
        if len(row) != 2:
            raise ParseError(path, lineno, "expected edge_index,value")
        try:
            idx.append(int(row[0]))
            val.append(float(row[1]))
        except ValueError:
            raise ParseError(path, lineno, f"bad sample {','.join(row)!r}") from None
    return np.array(idx, dtype=int), np.array(val, dtype=float)


def write_samples(path, indices, values) -> None:
    write_table(path, {"edge_index": [int(i) for i in indices], "value": [float(v) for v in values]})


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()
