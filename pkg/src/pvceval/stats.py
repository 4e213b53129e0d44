"""Rating statistics: Pearson correlation, Likert aggregation, MOS summaries.

Severity labels are means of five expert ratings on a 1-5 Likert scale
(5 = healthy), interrater agreement is the mean pairwise Pearson
correlation over raters, identity/severity similarity uses a 1-4 scale
mapped linearly to percentages, and naturalness MOS is collected on a 1-5
scale with half-point increments.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    EmptyInput,
    InvalidIncrement,
    LengthMismatch,
    OutOfScale,
    ParseError,
    ZeroVariance,
)

_GRID_TOL = 1e-9


@dataclass(frozen=True)
class RatingScale:
    minimum: float
    maximum: float
    step: float

    def check(self, value: float, where: str = "") -> None:
        prefix = f"{where}: " if where else ""
        if not (self.minimum <= value <= self.maximum):
            raise OutOfScale(
                f"{prefix}rating {value} outside [{self.minimum}, {self.maximum}]"
            )
        offset = (value - self.minimum) / self.step
        if abs(offset - round(offset)) > _GRID_TOL:
            raise InvalidIncrement(
                f"{prefix}rating {value} not on the {self.step}-step grid"
            )


SEVERITY_SCALE = RatingScale(1.0, 5.0, 1.0)
MOS_SCALE = RatingScale(1.0, 5.0, 0.5)
SIMILARITY_SCALE = RatingScale(1.0, 4.0, 1.0)


@dataclass(frozen=True)
class RatingMatrix:
    """raters x items rating matrix on a declared scale."""

    values: np.ndarray
    scale: RatingScale
    item_ids: tuple
    rater_ids: tuple = ()

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError("ratings must be a raters x items matrix")
        if values.shape[1] != len(self.item_ids):
            raise ValueError("item_ids must match the number of columns")
        for (r, c), v in np.ndenumerate(values):
            self.scale.check(v, where=f"rater {r}, item {self.item_ids[c]}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "item_ids", tuple(self.item_ids))
        object.__setattr__(self, "rater_ids", tuple(self.rater_ids))

    @property
    def raters(self) -> int:
        return self.values.shape[0]

    @property
    def items(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class CorrelationResult:
    r: float
    n: int


def pearson(x: Sequence[float], y: Sequence[float]) -> CorrelationResult:
    """Sample Pearson product-moment correlation."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.size != y.size:
        raise LengthMismatch(f"lengths differ: {x.size} vs {y.size}")
    if x.size < 2:
        raise LengthMismatch("need at least two paired values")
    xd = x - x.mean()
    yd = y - y.mean()
    sx = float(np.sqrt(xd @ xd))
    sy = float(np.sqrt(yd @ yd))
    if sx == 0.0 or sy == 0.0:
        raise ZeroVariance("correlation undefined for a constant sample")
    return CorrelationResult(r=float((xd @ yd) / (sx * sy)), n=int(x.size))


def likert_to_percent(rating: float) -> float:
    """Map the 1-4 similarity scale linearly onto 0-100%."""
    if not (1.0 <= rating <= 4.0):
        raise OutOfScale(f"similarity rating {rating} outside [1, 4]")
    return 100.0 * (rating - 1.0) / 3.0


def aggregate_severity(ratings: RatingMatrix) -> dict[str, float]:
    """Per-item mean of integer 1-5 ratings, reported to one decimal."""
    if ratings.scale != SEVERITY_SCALE:
        raise OutOfScale("severity ratings must be integers on the 1-5 scale")
    means = ratings.values.mean(axis=0)
    return {item: round(float(m), 1) for item, m in zip(ratings.item_ids, means)}


def interrater_correlation(ratings: RatingMatrix) -> CorrelationResult:
    """Mean pairwise Pearson correlation over all rater pairs."""
    if ratings.raters < 2:
        raise EmptyInput("need at least two raters")
    if ratings.items < 2:
        raise LengthMismatch("need at least two items")
    rs = []
    for i in range(ratings.raters):
        for j in range(i + 1, ratings.raters):
            rs.append(pearson(ratings.values[i], ratings.values[j]).r)
    return CorrelationResult(r=float(np.mean(rs)), n=ratings.items)


@dataclass(frozen=True)
class MosSummary:
    mean: float
    count: int
    interval: tuple | None  # 95% normal-approximation interval, None for n < 2


def mos_aggregate(ratings: Sequence[float]) -> MosSummary:
    """Mean opinion score over half-step 1-5 ratings with a 95% interval."""
    if len(ratings) == 0:
        raise EmptyInput("no MOS ratings")
    for value in ratings:
        MOS_SCALE.check(float(value))
    arr = np.asarray(ratings, dtype=np.float64)
    mean = float(arr.mean())
    if arr.size < 2:
        return MosSummary(mean=mean, count=int(arr.size), interval=None)
    half_width = 1.96 * float(arr.std(ddof=1)) / math.sqrt(arr.size)
    return MosSummary(
        mean=mean, count=int(arr.size), interval=(mean - half_width, mean + half_width)
    )


def read_rating_matrix(path, scale: RatingScale) -> RatingMatrix:
    """Read a delimited rating file: header row of item ids, one row per rater.

    The first column holds rater ids. Scale violations are reported with
    their file row number.
    """
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        rows = [row for row in reader if row]
    if len(rows) < 2:
        raise ParseError(f"{path}: need a header and at least one rater row")
    header = rows[0]
    if len(header) < 2:
        raise ParseError(f"{path}: header must name at least one item")
    item_ids = tuple(h.strip() for h in header[1:])
    rater_ids = []
    values = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise ParseError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
        rater_ids.append(row[0].strip())
        try:
            parsed = [float(cell) for cell in row[1:]]
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno}: {exc}") from exc
        for item, value in zip(item_ids, parsed):
            try:
                scale.check(value, where=f"item {item}")
            except (OutOfScale, InvalidIncrement) as exc:
                raise type(exc)(f"{path}:{lineno}: {exc}") from exc
        values.append(parsed)
    return RatingMatrix(
        values=np.asarray(values), scale=scale, item_ids=item_ids, rater_ids=tuple(rater_ids)
    )
