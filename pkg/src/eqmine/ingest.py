"""Loading numeric relations from delimited text and cutting per-candidate views."""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field
from typing import Literal, Optional, Sequence

import numpy as np

from .model import PairSet

HeaderMode = Literal["auto", "present", "absent"]


class IngestError(Exception):
    pass


class RaggedRowsError(IngestError):
    pass


class NoNumericColumnsError(IngestError):
    pass


class EmptyAfterFilteringError(IngestError):
    pass


@dataclass(frozen=True, eq=False)
class Relation:
    """A named table of float64 columns; NaN marks a missing cell.

    ``data`` is rows x columns and is made read-only on construction.
    """

    name: str
    column_names: tuple[str, ...]
    data: np.ndarray
    source: Optional[str] = field(default=None, compare=False)

    def __post_init__(self) -> None:
        data = np.array(self.data, dtype=np.float64, copy=True)
        if data.ndim != 2:
            raise ValueError("relation data must be two-dimensional")
        if data.shape[1] != len(self.column_names):
            raise ValueError(
                f"{len(self.column_names)} names for {data.shape[1]} columns"
            )
        if len(set(self.column_names)) != len(self.column_names):
            raise ValueError(f"duplicate column names in {self.name!r}")
        data[~np.isfinite(data)] = np.nan
        data.flags.writeable = False
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "column_names", tuple(self.column_names))

    @property
    def row_count(self) -> int:
        return self.data.shape[0]

    @property
    def column_count(self) -> int:
        return self.data.shape[1]

    def column(self, index: int) -> np.ndarray:
        return self.data[:, index]

    def column_index(self, name: str) -> int:
        try:
            return self.column_names.index(name)
        except ValueError:
            raise KeyError(f"no column {name!r} in relation {self.name!r}") from None

    def numeric_columns(self) -> list[int]:
        """Indices of columns holding at least one finite value."""
        present = ~np.isnan(self.data)
        return [int(j) for j in np.flatnonzero(present.any(axis=0))]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Relation):
            return NotImplemented
        return (
            self.name == other.name
            and self.column_names == other.column_names
            and self.data.shape == other.data.shape
            and np.array_equal(self.data, other.data, equal_nan=True)
        )

    __hash__ = None  # type: ignore[assignment]


def _parse_cell(token: str) -> float:
    token = token.strip()
    if not token:
        return math.nan
    try:
        value = float(token)
    except ValueError:
        return math.nan
    return value if math.isfinite(value) else math.nan


def _looks_numeric(token: str) -> bool:
    token = token.strip()
    if not token:
        return True
    try:
        float(token)
    except ValueError:
        return False
    return True


def load_relation(
    path: str | os.PathLike,
    delimiter: str = ",",
    header: HeaderMode = "auto",
    name: Optional[str] = None,
) -> Relation:
    """Read a delimited text file into a :class:`Relation`.

    Cells that are empty, non-numeric, or non-finite become missing.  With
    ``header="auto"`` the first row is taken as a header when at least one of
    its cells is non-numeric.
    """
    path = os.fspath(path)
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [row for row in csv.reader(fh, delimiter=delimiter) if row]
    except OSError as exc:
        raise IngestError(f"cannot read {path}: {exc}") from exc

    if not rows:
        raise NoNumericColumnsError(f"{path} is empty")

    width = len(rows[0])
    for lineno, row in enumerate(rows, start=1):
        if len(row) != width:
            raise RaggedRowsError(
                f"{path}: row {lineno} has {len(row)} fields, expected {width}"
            )

    if header == "auto":
        has_header = not all(_looks_numeric(tok) for tok in rows[0])
    else:
        has_header = header == "present"

    if has_header:
        names = [tok.strip() for tok in rows[0]]
        body = rows[1:]
    else:
        names = [f"col{j}" for j in range(width)]
        body = rows

    data = np.array([[_parse_cell(tok) for tok in row] for row in body], dtype=np.float64)
    data = data.reshape(len(body), width)

    if name is None:
        name = os.path.splitext(os.path.basename(path))[0]
    relation = Relation(name, tuple(names), data, source=os.path.abspath(path))
    if not relation.numeric_columns():
        raise NoNumericColumnsError(f"{path} has no numeric column")
    return relation


def write_relation(relation: Relation, path: str | os.PathLike, delimiter: str = ",") -> None:
    """Write ``relation`` with a header row; missing cells are left empty.

    Values are written with ``repr`` so a reload reproduces them exactly.
    """
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        writer.writerow(relation.column_names)
        for row in relation.data:
            writer.writerow(["" if math.isnan(v) else repr(float(v)) for v in row])


@dataclass(frozen=True)
class CandidateView:
    """Complete-case samples for one candidate; column j matches pair j."""

    left_matrix: np.ndarray
    right_matrix: np.ndarray

    @property
    def left_rows(self) -> int:
        return self.left_matrix.shape[0]

    @property
    def right_rows(self) -> int:
        return self.right_matrix.shape[0]

    @property
    def arity(self) -> int:
        return self.left_matrix.shape[1]


def _complete_block(
    relation: Relation, columns: Sequence[int], max_rows: int, rng: np.random.Generator
) -> np.ndarray:
    block = relation.data[:, list(columns)]
    block = block[~np.isnan(block).any(axis=1)]
    if block.shape[0] == 0:
        raise EmptyAfterFilteringError(
            f"no complete rows in {relation.name!r} for columns {list(columns)}"
        )
    if block.shape[0] > max_rows:
        keep = np.sort(rng.choice(block.shape[0], size=max_rows, replace=False))
        block = block[keep]
    return np.ascontiguousarray(block)


def candidate_view(
    left: Relation, right: Relation, p: PairSet, max_rows: int = 2000, seed: int = 0
) -> CandidateView:
    """Cut the complete-case sample of each side for candidate ``p``.

    Rows are dropped per side, only when missing in a column ``p`` uses on
    that side.  Sides longer than ``max_rows`` are subsampled uniformly
    without replacement with a generator seeded by ``seed``.
    """
    for a, b in p:
        if not 0 <= a < left.column_count:
            raise IndexError(f"left column {a} out of range for {left.name!r}")
        if not 0 <= b < right.column_count:
            raise IndexError(f"right column {b} out of range for {right.name!r}")
    if max_rows < 1:
        raise ValueError("max_rows must be positive")
    rng = np.random.default_rng(seed)
    return CandidateView(
        _complete_block(left, p.lefts, max_rows, rng),
        _complete_block(right, p.rights, max_rows, rng),
    )
