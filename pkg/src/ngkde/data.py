"""CSV ingestion for two-column observational data."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = ["IngestResult", "ingest_csv"]


@dataclass
class IngestResult:
    """Clean ``(n, 2)`` sample plus the rows that were dropped and why.

    ``rejected`` holds ``(line_number, reason)`` pairs, 1-based as in a text
    editor.
    """

    sample: np.ndarray
    rejected: list = field(default_factory=list)
    columns: tuple = ("x1", "x2")

    @property
    def n_rejected(self) -> int:
        return len(self.rejected)

    def to_dict(self) -> dict:
        return {
            "n": int(self.sample.shape[0]),
            "columns": list(self.columns),
            "rejected": [{"line": ln, "reason": why} for ln, why in self.rejected],
        }


def _is_number(text):
    try:
        float(text)
    except ValueError:
        return False
    return True


def _resolve(col, header):
    if isinstance(col, int):
        return col
    name = str(col).strip()
    if header is not None and name in header:
        return header.index(name)
    if name.lstrip("-").isdigit():
        return int(name)
    if header is None:
        raise ValueError(f"column {name!r} given by name but the file has no header row")
    raise ValueError(f"column {name!r} not found; header is {header}")


def ingest_csv(path, col_x1=0, col_x2=1, log10_x1=False, log10_x2=False) -> IngestResult:
    """Read two columns of a comma-separated file as observations on R x [0, inf).

    Columns are selected by header name or 0-based index.  A first row whose
    selected cells are not all numeric is taken as a header.  Rows with
    missing or non-numeric cells, non-finite values after the optional
    ``log10`` transforms, or a negative ``x2`` are dropped and reported.
    """
    path = Path(path)
    if not path.is_file():
        raise ValueError(f"no such file: {path}")
    with path.open(newline="") as fh:
        rows = [(i + 1, row) for i, row in enumerate(csv.reader(fh)) if row and any(c.strip() for c in row)]
    if not rows:
        raise ValueError(f"{path} is empty")

    first = [c.strip() for c in rows[0][1]]
    header = None
    if not all(_is_number(c) for c in first):
        header = first
        rows = rows[1:]
    j1, j2 = _resolve(col_x1, header), _resolve(col_x2, header)
    width = len(header) if header is not None else max(len(r) for _, r in rows) if rows else 0
    for j in (j1, j2):
        if not -width <= j < width:
            raise ValueError(f"column index {j} out of range for {width} columns")

    good, rejected = [], []
    for line, row in rows:
        try:
            a, b = float(row[j1]), float(row[j2])
        except (IndexError, ValueError):
            rejected.append((line, "missing or non-numeric value"))
            continue
        with np.errstate(divide="ignore", invalid="ignore"):
            if log10_x1:
                a = float(np.log10(a))
            if log10_x2:
                b = float(np.log10(b))
        if not (math.isfinite(a) and math.isfinite(b)):
            rejected.append((line, "non-finite value after transform"))
        elif b < 0:
            rejected.append((line, "negative x2"))
        else:
            good.append((a, b))
    if not good:
        raise ValueError(f"no usable rows in {path} ({len(rejected)} rejected)")
    names = (
        header[j1] if header else f"column {j1}",
        header[j2] if header else f"column {j2}",
    )
    return IngestResult(np.array(good, dtype=float), rejected, names)
