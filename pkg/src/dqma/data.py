"""Loading response/regressor series from delimited text."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, DomainError


@dataclass(frozen=True)
class SeriesData:
    """``y`` and a design whose column 0 is the intercept; lagged-y columns come last."""

    y: np.ndarray
    X: np.ndarray
    column_names: tuple[str, ...]
    lag_count: int = 0

    def __post_init__(self):
        if self.X.ndim != 2 or self.X.shape[0] != self.y.shape[0]:
            raise DomainError(f"design {self.X.shape} does not match {self.y.shape[0]} observations")
        if self.y.shape[0] < 2:
            raise DomainError("need at least two observations")
        if not np.all(self.X[:, 0] == 1.0):
            raise DomainError("column 0 must be the intercept")
        if not (np.all(np.isfinite(self.y)) and np.all(np.isfinite(self.X))):
            raise DomainError("series contains non-finite values")
        if len(self.column_names) != self.X.shape[1]:
            raise DomainError("column_names must match the design width")

    @property
    def T(self) -> int:
        return self.y.shape[0]

    @property
    def M(self) -> int:
        return self.X.shape[1]


def _parse(cell: str, row: int, col: str) -> float:
    s = cell.strip()
    if s == "" or s.lower() in {"na", "nan", "null", "none"}:
        raise DomainError(f"missing value at row {row}, column {col!r}")
    try:
        v = float(s)
    except ValueError:
        raise DomainError(f"non-numeric value {s!r} at row {row}, column {col!r}") from None
    if not math.isfinite(v):
        raise DomainError(f"non-finite value {s!r} at row {row}, column {col!r}")
    return v


def _is_number(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


def load_csv(path, lag_count: int = 0) -> SeriesData:
    """Read ``y, x_1, ..., x_p`` with a header row; prepend the intercept and append y lags.

    Row numbers in error messages count the header as row 1, as a spreadsheet does.
    Lines starting with ``#`` are ignored.
    """
    if lag_count < 0:
        raise ConfigError("lag_count must be non-negative")
    path = Path(path)
    with path.open(newline="") as fh:
        rows = [(i, r) for i, r in enumerate(csv.reader(fh), start=1) if r and not r[0].lstrip().startswith("#")]
    if not rows:
        raise DomainError(f"{path}: empty file")
    header_no, header = rows[0]
    header = [h.strip() for h in header]
    if all(_is_number(h) for h in header):
        raise DomainError(f"{path}: a header row is required")
    if len(set(header)) != len(header):
        raise DomainError(f"{path}: duplicate column names")
    values = []
    for i, r in rows[1:]:
        if len(r) != len(header):
            raise DomainError(f"{path}: row {i} has {len(r)} fields, expected {len(header)}")
        values.append([_parse(c, i, header[j]) for j, c in enumerate(r)])
    arr = np.array(values, dtype=float).reshape(-1, len(header))
    y, Z = arr[:, 0], arr[:, 1:]
    names = ["const", *header[1:]]
    if lag_count:
        lags = np.column_stack([y[lag_count - j: len(y) - j] for j in range(1, lag_count + 1)])
        y, Z = y[lag_count:], np.column_stack([Z[lag_count:], lags])
        names += [f"{header[0]}_lag{j}" for j in range(1, lag_count + 1)]
    X = np.column_stack([np.ones(len(y)), Z])
    return SeriesData(y, X, tuple(names), lag_count)


def write_series_csv(data: SeriesData, path, response: str = "y") -> Path:
    """Write ``y`` and the non-intercept columns so that :func:`load_csv` reads them back exactly."""
    path = Path(path)
    keep = [j for j in range(1, data.M) if j < data.M - data.lag_count]
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([response, *(data.column_names[j] for j in keep)])
        for s in range(data.T):
            w.writerow([repr(float(data.y[s])), *(repr(float(data.X[s, j])) for j in keep)])
    return path
