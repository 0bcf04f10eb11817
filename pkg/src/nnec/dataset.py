"""Loading and preprocessing of numeric point sets."""

from __future__ import annotations

import csv
import hashlib
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np


class DataError(ValueError):
    """Raised when input data cannot be parsed or violates a precondition."""


@dataclass(frozen=True)
class Dataset:
    """A dense ``n x d`` point matrix with optional integer class labels.

    Labels, when present, are re-encoded to the contiguous range
    ``0..C-1`` on construction.
    """

    points: np.ndarray
    labels: Optional[np.ndarray] = None

    def __post_init__(self):
        pts = np.ascontiguousarray(np.asarray(self.points, dtype=np.float64))
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        if pts.ndim != 2:
            raise DataError(f"points must be a 2-D matrix, got shape {pts.shape}")
        if pts.shape[0] < 2:
            raise DataError(f"need at least 2 points, got {pts.shape[0]}")
        if pts.shape[1] < 1:
            raise DataError("need at least 1 column")
        if not np.all(np.isfinite(pts)):
            raise DataError("all coordinates must be finite")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        if self.labels is not None:
            lab = encode_labels(self.labels)
            if len(lab) != pts.shape[0]:
                raise DataError(
                    f"got {len(lab)} labels for {pts.shape[0]} points"
                )
            lab.setflags(write=False)
            object.__setattr__(self, "labels", lab)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def with_points(self, points: np.ndarray) -> "Dataset":
        return Dataset(points, self.labels)

    def content_hash(self) -> str:
        """SHA-256 of the point matrix (shape and float64 bytes)."""
        h = hashlib.sha256()
        h.update(np.asarray(self.points.shape, dtype=np.int64).tobytes())
        h.update(self.points.tobytes())
        return h.hexdigest()


def encode_labels(values: Sequence) -> np.ndarray:
    """Map arbitrary label values onto ``0..C-1`` in sorted order of the values.

    Values that all parse as numbers are sorted numerically, otherwise as
    strings.
    """
    raw = [v.strip() if isinstance(v, str) else v for v in values]
    try:
        keys = [float(v) for v in raw]
    except (TypeError, ValueError):
        keys = [str(v) for v in raw]
    uniq = sorted(set(keys))
    index = {v: i for i, v in enumerate(uniq)}
    return np.array([index[v] for v in keys], dtype=np.int64)


def _parse_cell(text: str, row: int, col: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise DataError(
            f"cannot parse {text!r} as a number at row {row}, column {col}"
        ) from None
    if not math.isfinite(value):
        raise DataError(f"non-finite value {text!r} at row {row}, column {col}")
    return value


def load_delimited(
    path: Union[str, Path],
    delimiter: str = ",",
    has_header: bool = False,
    label_column: Optional[Union[int, str]] = None,
) -> Dataset:
    """Read a delimited text file into a :class:`Dataset`.

    Parameters
    ----------
    path : str or Path
        File to read.
    delimiter : str
        Field separator. ``None``-like whitespace splitting is requested with
        ``"whitespace"``.
    has_header : bool
        Whether the first non-empty line holds column names.
    label_column : int or str, optional
        Column holding class labels, by 0-based index (negative indices count
        from the end) or by header name. It is excluded from the points.

    Raises
    ------
    DataError
        On empty files, ragged rows or unparseable cells. Row and column
        numbers in messages are 1-based file positions.
    FileNotFoundError
        If ``path`` does not exist.
    """
    path = Path(path)
    with open(path, newline="") as fh:
        if delimiter == "whitespace":
            rows = [(i, line.split()) for i, line in enumerate(fh, start=1)]
        else:
            rows = list(enumerate(csv.reader(fh, delimiter=delimiter), start=1))
    rows = [(i, r) for i, r in rows if r and any(c.strip() for c in r)]
    if not rows:
        raise DataError(f"{path}: file is empty")

    header = None
    if has_header:
        header = [c.strip() for c in rows[0][1]]
        rows = rows[1:]
        if not rows:
            raise DataError(f"{path}: no data rows after header")

    width = len(rows[0][1])
    if header is not None and len(header) != width:
        raise DataError(
            f"{path}: header has {len(header)} columns but row {rows[0][0]} has {width}"
        )
    for lineno, r in rows:
        if len(r) != width:
            raise DataError(
                f"{path}: row {lineno} has {len(r)} columns, expected {width}"
            )

    label_idx = None
    if label_column is not None:
        if isinstance(label_column, str) and not label_column.lstrip("-").isdigit():
            if header is None or label_column not in header:
                raise DataError(f"{path}: no column named {label_column!r}")
            label_idx = header.index(label_column)
        else:
            label_idx = int(label_column)
            if not -width <= label_idx < width:
                raise DataError(
                    f"{path}: label column {label_idx} out of range for {width} columns"
                )
            label_idx %= width
        if width < 2:
            raise DataError(f"{path}: label column leaves no numeric columns")

    cols = [c for c in range(width) if c != label_idx]
    points = np.empty((len(rows), len(cols)), dtype=np.float64)
    for r_i, (lineno, r) in enumerate(rows):
        for c_i, c in enumerate(cols):
            points[r_i, c_i] = _parse_cell(r[c].strip(), lineno, c + 1)
    labels = None
    if label_idx is not None:
        labels = [r[label_idx] for _, r in rows]
    return Dataset(points, labels)


def load_labels(path: Union[str, Path]) -> np.ndarray:
    """Read a single-column label file (one value per non-empty line)."""
    path = Path(path)
    with open(path) as fh:
        values = [line.strip() for line in fh if line.strip()]
    if not values:
        raise DataError(f"{path}: label file is empty")
    return encode_labels(values)


def standardize(data: Dataset) -> Dataset:
    """Scale each column to unit sample variance (divisor ``n-1``).

    The mean is not removed. Columns with zero variance are left unchanged.
    """
    sd = data.points.std(axis=0, ddof=1)
    scale = np.where(sd > 0, sd, 1.0)
    return data.with_points(data.points / scale)


def pca_reduce(data: Dataset, max_dim: int = 100) -> Dataset:
    """Project onto the leading ``max_dim`` principal components.

    Expects already-standardised data. Returns the input unchanged when it
    has at most ``max_dim`` columns. Components come from a symmetric
    eigendecomposition of the covariance of the centred data, ordered by
    decreasing eigenvalue, each signed so its largest-magnitude loading is
    positive.
    """
    if max_dim < 1:
        raise DataError(f"max_dim must be >= 1, got {max_dim}")
    if data.d <= max_dim:
        return data
    centred = data.points - data.points.mean(axis=0)
    cov = centred.T @ centred / (data.n - 1)
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(-evals, kind="stable")[:max_dim]
    comps = evecs[:, order]
    pivot = np.argmax(np.abs(comps), axis=0)
    signs = np.sign(comps[pivot, np.arange(comps.shape[1])])
    signs[signs == 0] = 1.0
    comps = comps * signs
    return data.with_points(centred @ comps)


def preprocess(data: Dataset, max_dim: int = 100) -> Dataset:
    """Unit-variance scaling followed by PCA when wider than ``max_dim``."""
    return pca_reduce(standardize(data), max_dim)
