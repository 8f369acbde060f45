"""CSV ingestion for regression datasets, addressed by column name."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from mtreg.errors import MtregError


class DatasetError(MtregError):
    """Base class for ingestion failures."""


class DataFileError(DatasetError):
    pass


class MissingColumnError(DatasetError):
    pass


class CellParseError(DatasetError):
    def __init__(self, message: str, row: int, column: str):
        super().__init__(message)
        self.row = row
        self.column = column


class TooFewRowsError(DatasetError):
    pass


@dataclass(frozen=True, eq=False)
class Dataset:
    a: np.ndarray  # (n, m)
    x: np.ndarray | None  # (n,), None when no response was requested
    source: str
    response_name: str | None
    explanatory_names: tuple[str, ...]

    @property
    def n(self) -> int:
        return self.a.shape[0]

    @property
    def m(self) -> int:
        return self.a.shape[1]


def _parse_cell(raw: str, row: int, column: str) -> float:
    text = raw.strip()
    if not text:
        raise CellParseError(f"row {row}, column {column!r}: missing value", row, column)
    try:
        value = float(text)
    except ValueError:
        raise CellParseError(f"row {row}, column {column!r}: cannot parse {text!r} as a number", row, column) from None
    if not math.isfinite(value):
        raise CellParseError(f"row {row}, column {column!r}: value {text!r} is not finite", row, column)
    return value


def ingest_csv(path: str | Path, response_column: str | None, explanatory_columns: Sequence[str]) -> Dataset:
    """Read the named columns of a comma-separated UTF-8 file with a header row.

    Rows are numbered from 1, starting at the first line after the header.
    At least m + 2 rows are required so that a fit leaves one residual
    degree of freedom.
    """
    path = Path(path)
    explanatory = tuple(explanatory_columns)
    if not explanatory:
        raise MissingColumnError("at least one explanatory column is required")
    try:
        handle = path.open(newline="", encoding="utf-8-sig")
    except (FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        raise DataFileError(f"cannot open data file {str(path)!r}: {exc.strerror or exc}") from None
    with handle:
        reader = csv.reader(handle, delimiter=",")
        try:
            header = next(reader)
        except StopIteration:
            raise DataFileError(f"data file {str(path)!r} is empty") from None
        header = [h.strip() for h in header]
        wanted = list(explanatory) + ([response_column] if response_column is not None else [])
        index = {}
        for name in wanted:
            if name not in header:
                raise MissingColumnError(f"column {name!r} not found; header has {header}")
            index[name] = header.index(name)

        a_rows, x_rows = [], []
        for row_no, cells in enumerate(reader, start=1):
            if not cells or all(not c.strip() for c in cells):
                continue
            def cell(name: str) -> float:
                j = index[name]
                return _parse_cell(cells[j] if j < len(cells) else "", row_no, name)
            a_rows.append([cell(name) for name in explanatory])
            if response_column is not None:
                x_rows.append(cell(response_column))

    n, m = len(a_rows), len(explanatory)
    if n < m + 2:
        raise TooFewRowsError(f"{n} data rows for {m} explanatory column(s); need at least {m + 2}")
    return Dataset(
        a=np.array(a_rows, dtype=float).reshape(n, m),
        x=np.array(x_rows, dtype=float) if response_column is not None else None,
        source=str(path),
        response_name=response_column,
        explanatory_names=explanatory,
    )
