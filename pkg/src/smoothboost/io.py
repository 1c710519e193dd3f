"""File formats: the game matrix text format and boosting traces.

Matrix files: a header line ``m n`` followed by m lines of n
space-separated entries, each ``-1``, ``1`` or ``+1``.  The parse is
strict; any other token (including floats like ``1.0``) is an error.

Traces: one record per line with the fields
``t j r gamma alpha s g mu logF`` in that fixed order, either as
delimited text with a header row (csv) or one JSON object per line
(jsonl).  Floats are written with ``repr`` so a written trace re-parses
to bit-identical records; undefined values (g and mu before the first
step) round-trip as ``nan`` / ``null``.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .core import GameMatrix, IterationRecord

__all__ = [
    "load_matrix",
    "dump_matrix",
    "write_trace",
    "read_trace",
    "records_equal",
    "TRACE_FIELDS",
]

TRACE_FIELDS = ("t", "j", "r", "gamma", "alpha", "s", "g", "mu", "logF")

_VALID_TOKENS = {"-1": -1.0, "1": 1.0, "+1": 1.0}


def load_matrix(path) -> GameMatrix:
    lines = Path(path).read_text().splitlines()
    rows: list[list[float]] = []
    header = None
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        if header is None:
            parts = line.split()
            if len(parts) != 2 or not all(p.isdigit() for p in parts):
                raise ValueError(f"{path}:{lineno}: header must be 'm n', got {line!r}")
            header = (int(parts[0]), int(parts[1]))
            continue
        row = []
        for tok in line.split():
            if tok not in _VALID_TOKENS:
                raise ValueError(f"{path}:{lineno}: invalid entry {tok!r}")
            row.append(_VALID_TOKENS[tok])
        rows.append(row)
    if header is None:
        raise ValueError(f"{path}: empty matrix file")
    m, n = header
    if len(rows) != m:
        raise ValueError(f"{path}: header promises {m} rows, found {len(rows)}")
    for i, row in enumerate(rows):
        if len(row) != n:
            raise ValueError(f"{path}: row {i + 1} has {len(row)} entries, expected {n}")
    return GameMatrix(np.array(rows))


def dump_matrix(path, M: GameMatrix) -> None:
    lines = [f"{M.m} {M.n}"]
    for row in M.entries:
        lines.append(" ".join("1" if v > 0 else "-1" for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def _record_values(rec: IterationRecord) -> list:
    return [rec.t, rec.j, rec.r, rec.gamma, rec.alpha, rec.s, rec.g, rec.mu,
            rec.log_loss]


def write_trace(path, records: Sequence[IterationRecord], fmt: str = "csv") -> None:
    path = Path(path)
    if fmt == "csv":
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(TRACE_FIELDS)
            for rec in records:
                writer.writerow([repr(v) if isinstance(v, float) else v
                                 for v in _record_values(rec)])
    elif fmt == "jsonl":
        with path.open("w") as fh:
            for rec in records:
                obj = dict(zip(TRACE_FIELDS, _record_values(rec)))
                for key, val in obj.items():
                    if isinstance(val, float) and math.isnan(val):
                        obj[key] = None
                fh.write(json.dumps(obj) + "\n")
    else:
        raise ValueError(f"unknown trace format {fmt!r}")


def _to_record(vals: dict) -> IterationRecord:
    def num(key):
        v = vals[key]
        if v is None:
            return math.nan
        return float(v)

    return IterationRecord(
        t=int(vals["t"]), j=int(vals["j"]), r=num("r"), gamma=num("gamma"),
        alpha=num("alpha"), s=num("s"), g=num("g"), mu=num("mu"),
        log_loss=num("logF"),
    )


def read_trace(path) -> list[IterationRecord]:
    path = Path(path)
    records: list[IterationRecord] = []
    with path.open() as fh:
        first = fh.read(1)
        fh.seek(0)
        if first == "{":
            for line in fh:
                if line.strip():
                    records.append(_to_record(json.loads(line)))
        else:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or tuple(reader.fieldnames) != TRACE_FIELDS:
                raise ValueError(f"{path}: unexpected trace header {reader.fieldnames}")
            for row in reader:
                records.append(_to_record(row))
    return records


def _float_eq(a: float, b: float) -> bool:
    if math.isnan(a) and math.isnan(b):
        return True
    return a == b


def records_equal(a: Iterable[IterationRecord], b: Iterable[IterationRecord]) -> bool:
    """Exact record comparison treating NaN fields as equal to themselves."""
    a, b = list(a), list(b)
    if len(a) != len(b):
        return False
    for ra, rb in zip(a, b):
        if ra.t != rb.t or ra.j != rb.j:
            return False
        for fld in ("r", "gamma", "alpha", "s", "g", "mu", "log_loss"):
            if not _float_eq(getattr(ra, fld), getattr(rb, fld)):
                return False
    return True
