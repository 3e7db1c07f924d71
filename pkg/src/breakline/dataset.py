"""Bivariate dataset ingestion, column transforms, and summary statistics.

A :class:`BivariateDataset` is an immutable, x-sorted set of (x, y) pairs with
optional per-point group labels.  All fitters in this package consume this
type and may share instances across workers.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats


class DataError(ValueError):
    """Malformed input data, missing columns, or an invalid transform."""


@dataclass(frozen=True)
class TransformSpec:
    """Column transform applied at ingestion.

    ``kind`` is one of ``"identity"``, ``"log10"``, or ``"affine"`` where
    affine means ``a + b * x``.  ``log10`` requires strictly positive input.
    """

    kind: str = "identity"
    a: float = 0.0
    b: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in ("identity", "log10", "affine"):
            raise DataError(f"unknown transform kind {self.kind!r}")

    def apply(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        if self.kind == "identity":
            return values.copy()
        if self.kind == "log10":
            if values.size and np.any(values <= 0.0):
                bad = float(values[values <= 0.0][0])
                raise DataError(f"log10 transform requires strictly positive values, got {bad}")
            return np.log10(values)
        return self.a + self.b * values

    @classmethod
    def parse(cls, text: str) -> "TransformSpec":
        """Parse ``identity``, ``log10``, or ``affine:a,b``."""
        text = text.strip()
        if text in ("identity", "log10"):
            return cls(kind=text)
        if text.startswith("affine:"):
            body = text[len("affine:"):]
            parts = body.split(",")
            if len(parts) != 2:
                raise DataError(f"affine transform needs two coefficients, got {text!r}")
            try:
                a, b = float(parts[0]), float(parts[1])
            except ValueError as exc:
                raise DataError(f"non-numeric affine coefficient in {text!r}") from exc
            return cls(kind="affine", a=a, b=b)
        raise DataError(f"cannot parse transform {text!r}")

    def to_jsonable(self) -> dict:
        if self.kind == "affine":
            return {"kind": "affine", "a": self.a, "b": self.b}
        return {"kind": self.kind}

    @classmethod
    def from_jsonable(cls, obj: dict) -> "TransformSpec":
        kind = obj.get("kind", "identity")
        if kind == "affine":
            return cls(kind="affine", a=float(obj["a"]), b=float(obj["b"]))
        return cls(kind=kind)


IDENTITY = TransformSpec()


@dataclass(frozen=True, eq=False)
class BivariateDataset:
    """Paired (x, y) observations, stored sorted by x ascending.

    ``source_index`` records, for each stored point, its position in the
    original input (stable sort, so ties in x keep input order).  Instances
    are immutable; the arrays are marked read-only.
    """

    xs: np.ndarray
    ys: np.ndarray
    labels: tuple | None
    x_name: str
    y_name: str
    x_transform: TransformSpec
    y_transform: TransformSpec
    source_index: np.ndarray

    def __post_init__(self) -> None:
        xs = np.asarray(self.xs, dtype=float)
        ys = np.asarray(self.ys, dtype=float)
        if xs.ndim != 1 or ys.ndim != 1 or xs.shape != ys.shape:
            raise DataError("xs and ys must be 1-d arrays of equal length")
        if xs.size < 1:
            raise DataError("empty dataset")
        if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
            raise DataError("all x and y values must be finite")
        if np.any(np.diff(xs) < 0):
            raise DataError("points must be sorted by x ascending; use from_arrays()")
        if self.labels is not None and len(self.labels) != xs.size:
            raise DataError("labels must align with the points")
        for arr in (xs, ys, self.source_index):
            np.asarray(arr).setflags(write=False)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)

    @property
    def n(self) -> int:
        return int(self.xs.size)

    @classmethod
    def from_arrays(
        cls,
        xs,
        ys,
        labels: Sequence[str] | None = None,
        x_name: str = "x",
        y_name: str = "y",
        x_transform: TransformSpec = IDENTITY,
        y_transform: TransformSpec = IDENTITY,
    ) -> "BivariateDataset":
        """Build a dataset from already-transformed values, sorting by x.

        The transforms are recorded as metadata only; they are not applied
        here (``load_dataset`` applies them before calling this).
        """
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        if xs.ndim != 1 or ys.ndim != 1 or xs.shape != ys.shape:
            raise DataError("xs and ys must be 1-d arrays of equal length")
        order = np.argsort(xs, kind="stable")
        sorted_labels = None
        if labels is not None:
            labels = list(labels)
            if len(labels) != xs.size:
                raise DataError("labels must align with the points")
            sorted_labels = tuple(labels[i] for i in order)
        return cls(
            xs=xs[order],
            ys=ys[order],
            labels=sorted_labels,
            x_name=x_name,
            y_name=y_name,
            x_transform=x_transform,
            y_transform=y_transform,
            source_index=order.copy(),
        )

    def equals(self, other: "BivariateDataset") -> bool:
        """Value equality on points and metadata (provenance excluded)."""
        return (
            np.array_equal(self.xs, other.xs)
            and np.array_equal(self.ys, other.ys)
            and self.labels == other.labels
            and self.x_name == other.x_name
            and self.y_name == other.y_name
            and self.x_transform == other.x_transform
            and self.y_transform == other.y_transform
        )


def load_dataset(
    path,
    x_column: str,
    y_column: str,
    label_column: str | None = None,
    x_transform: TransformSpec = IDENTITY,
    y_transform: TransformSpec = IDENTITY,
) -> BivariateDataset:
    """Load a CSV file (header row, comma delimiter, UTF-8) into a dataset.

    Parameters
    ----------
    path : path-like
        CSV file with a header row naming the columns.
    x_column, y_column : str
        Names of the predictor and response columns.
    label_column : str, optional
        Per-point group tag column (site / region).
    x_transform, y_transform : TransformSpec
        Applied to the raw columns before sorting; recorded in the result.

    Raises
    ------
    DataError
        Missing column, non-numeric cell, empty file, or a transform that is
        invalid on the data (for example log10 of a non-positive value).
    """
    xs: list[float] = []
    ys: list[float] = []
    labels: list[str] = []
    try:
        handle = open(path, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    with handle:
        reader = csv.DictReader(handle)
        header = reader.fieldnames or []
        for name in (x_column, y_column) + ((label_column,) if label_column else ()):
            if name not in header:
                raise DataError(f"column {name!r} not found in {path} (header: {header})")
        for lineno, row in enumerate(reader, start=2):
            for col, dest in ((x_column, xs), (y_column, ys)):
                cell = row[col]
                try:
                    value = float(cell)
                except (TypeError, ValueError) as exc:
                    raise DataError(f"non-numeric cell {cell!r} in column {col!r}, line {lineno}") from exc
                if not math.isfinite(value):
                    raise DataError(f"non-finite value {cell!r} in column {col!r}, line {lineno}")
                dest.append(value)
            if label_column:
                labels.append(row[label_column])
    if not xs:
        raise DataError(f"empty dataset: {path}")
    try:
        txs = x_transform.apply(np.array(xs))
    except DataError as exc:
        raise DataError(f"x column {x_column!r}: {exc}") from exc
    try:
        tys = y_transform.apply(np.array(ys))
    except DataError as exc:
        raise DataError(f"y column {y_column!r}: {exc}") from exc
    return BivariateDataset.from_arrays(
        txs,
        tys,
        labels=labels if label_column else None,
        x_name=x_column,
        y_name=y_column,
        x_transform=x_transform,
        y_transform=y_transform,
    )


def dataset_to_json(ds: BivariateDataset) -> str:
    """Serialize to the JSON echo format.

    ``{x_name, y_name, transforms, points: [{x, y, label}]}``; point values
    are the stored (already transformed) numbers, so reloading must not
    re-apply the transforms.
    """
    points = []
    for i in range(ds.n):
        points.append(
            {
                "x": float(ds.xs[i]),
                "y": float(ds.ys[i]),
                "label": None if ds.labels is None else ds.labels[i],
            }
        )
    doc = {
        "x_name": ds.x_name,
        "y_name": ds.y_name,
        "transforms": {"x": ds.x_transform.to_jsonable(), "y": ds.y_transform.to_jsonable()},
        "points": points,
    }
    return json.dumps(doc, indent=2)


def dataset_from_json(text: str) -> BivariateDataset:
    """Inverse of :func:`dataset_to_json` (transforms stay metadata)."""
    doc = json.loads(text)
    points = doc["points"]
    if not points:
        raise DataError("empty dataset in JSON document")
    xs = [p["x"] for p in points]
    ys = [p["y"] for p in points]
    labels = [p.get("label") for p in points]
    has_labels = any(lab is not None for lab in labels)
    return BivariateDataset.from_arrays(
        xs,
        ys,
        labels=labels if has_labels else None,
        x_name=doc["x_name"],
        y_name=doc["y_name"],
        x_transform=TransformSpec.from_jsonable(doc["transforms"]["x"]),
        y_transform=TransformSpec.from_jsonable(doc["transforms"]["y"]),
    )


def write_dataset_csv(path, ds: BivariateDataset) -> None:
    """Write points back out as CSV (column names from the dataset)."""
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        header = [ds.x_name, ds.y_name] + (["label"] if ds.labels is not None else [])
        writer.writerow(header)
        for i in range(ds.n):
            row = [repr(float(ds.xs[i])), repr(float(ds.ys[i]))]
            if ds.labels is not None:
                row.append(ds.labels[i])
            writer.writerow(row)


@dataclass(frozen=True)
class SummaryRow:
    group: str
    variable: str
    n: int
    mean: float
    ci_lower: float
    ci_upper: float


def _mean_ci(values: np.ndarray, level: float) -> tuple[float, float, float]:
    n = values.size
    if n < 2:
        raise DataError(f"need at least 2 observations for a confidence interval, got {n}")
    mean = float(values.mean())
    sd = float(values.std(ddof=1))
    half = stats.t.ppf(0.5 + level / 2.0, n - 1) * sd / math.sqrt(n)
    return mean, mean - half, mean + half


def summarize(ds: BivariateDataset, level: float = 0.95) -> list[SummaryRow]:
    """Per-variable mean and t-based CI of the mean, per group and combined.

    Groups appear in order of first occurrence in the stored points, followed
    by a ``"combined"`` row pair.  Raises :class:`DataError` if any group has
    fewer than 2 points.
    """
    rows: list[SummaryRow] = []
    groups: list[str] = []
    if ds.labels is not None:
        for lab in ds.labels:
            if lab not in groups:
                groups.append(lab)
    for group in groups:
        mask = np.array([lab == group for lab in ds.labels])
        if mask.sum() < 2:
            raise DataError(f"group {group!r} has fewer than 2 points; variance undefined")
        for variable, values in ((ds.x_name, ds.xs[mask]), (ds.y_name, ds.ys[mask])):
            mean, lo, hi = _mean_ci(values, level)
            rows.append(SummaryRow(group, variable, int(mask.sum()), mean, lo, hi))
    for variable, values in ((ds.x_name, ds.xs), (ds.y_name, ds.ys)):
        mean, lo, hi = _mean_ci(values, level)
        rows.append(SummaryRow("combined", variable, ds.n, mean, lo, hi))
    return rows
