"""External cluster validity metrics and per-dataset standardisation of results."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.special import gammaln


@dataclass(frozen=True)
class ContingencyTable:
    """Counts of points per (predicted cluster, true class) pair."""

    counts: np.ndarray

    @classmethod
    def from_labels(cls, pred, truth) -> "ContingencyTable":
        pred = np.asarray(pred).ravel()
        truth = np.asarray(truth).ravel()
        if pred.shape != truth.shape:
            raise ValueError(f"label lengths differ: {pred.size} vs {truth.size}")
        if pred.size == 0:
            raise ValueError("empty labelings")
        _, p = np.unique(pred, return_inverse=True)
        _, t = np.unique(truth, return_inverse=True)
        counts = np.zeros((p.max() + 1, t.max() + 1), dtype=np.int64)
        np.add.at(counts, (p, t), 1)
        return cls(counts)

    @property
    def n(self) -> int:
        return int(self.counts.sum())

    @property
    def rows(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def cols(self) -> np.ndarray:
        return self.counts.sum(axis=0)


def _comb2(x):
    x = np.asarray(x, dtype=np.float64)
    return x * (x - 1) / 2


def ari(pred, truth) -> float:
    """Adjusted Rand index. Returns 1.0 when the chance-corrected range is zero."""
    table = ContingencyTable.from_labels(pred, truth)
    index = _comb2(table.counts).sum()
    a = _comb2(table.rows).sum()
    b = _comb2(table.cols).sum()
    expected = a * b / _comb2(table.n)
    maximum = (a + b) / 2
    if maximum == expected:
        return 1.0
    return float((index - expected) / (maximum - expected))


def _entropy(counts: np.ndarray, n: int) -> float:
    p = counts[counts > 0] / n
    return float(-(p * np.log(p)).sum())


def mutual_info(table: ContingencyTable) -> float:
    n = table.n
    nz = table.counts > 0
    nij = table.counts[nz].astype(np.float64)
    outer = np.outer(table.rows, table.cols)[nz].astype(np.float64)
    return float((nij / n * (np.log(n * nij) - np.log(outer))).sum())


def expected_mutual_info(table: ContingencyTable) -> float:
    """Expected mutual information under the hypergeometric permutation model."""
    n = table.n
    a = table.rows
    b = table.cols
    lfact = gammaln(np.arange(n + 1, dtype=np.float64) + 1)  # log k!
    emi = 0.0
    for ai in a:
        for bj in b:
            lo = max(1, ai + bj - n)
            hi = min(ai, bj)
            if lo > hi:
                continue
            nij = np.arange(lo, hi + 1)
            term = nij / n * (np.log(n * nij) - np.log(ai * bj))
            logp = (lfact[ai] + lfact[bj] + lfact[n - ai] + lfact[n - bj] - lfact[n]
                    - lfact[nij] - lfact[ai - nij] - lfact[bj - nij] - lfact[n - ai - bj + nij])
            emi += float((term * np.exp(logp)).sum())
    return emi


_AVERAGES = {
    "arithmetic": lambda a, b: (a + b) / 2,
    "geometric": lambda a, b: np.sqrt(a * b),
    "min": min,
    "max": max,
}


def ami(pred, truth, average: str = "arithmetic") -> float:
    """Adjusted mutual information.

    ``average`` picks how the two entropies are combined in the normaliser
    (``"arithmetic"``, ``"geometric"``, ``"min"`` or ``"max"``). Identical
    partitions score exactly 1.0 when they have at least two clusters; a
    vanishing normaliser otherwise gives 0.0.
    """
    if average not in _AVERAGES:
        raise ValueError(f"unknown average {average!r}")
    table = ContingencyTable.from_labels(pred, truth)
    c = table.counts
    identical = c.shape[0] == c.shape[1] and np.count_nonzero(c) == c.shape[0]
    if identical:
        return 1.0 if c.shape[0] >= 2 else 0.0
    n = table.n
    h_pred = _entropy(table.rows, n)
    h_true = _entropy(table.cols, n)
    mi = mutual_info(table)
    emi = expected_mutual_info(table)
    denom = _AVERAGES[average](h_pred, h_true) - emi
    if abs(denom) <= 1e-12 * max(1.0, abs(emi)):
        return 0.0
    return float((mi - emi) / denom)


def accuracy(pred, truth) -> float:
    """Fraction of points matched under the best one-to-one cluster/class pairing.

    Unpaired clusters (when counts differ) contribute nothing.
    """
    table = ContingencyTable.from_labels(pred, truth)
    rows, cols = linear_sum_assignment(table.counts, maximize=True)
    return float(table.counts[rows, cols].sum() / table.n)


def evaluate(pred, truth, ami_average: str = "arithmetic") -> Dict[str, float]:
    return {
        "ami": ami(pred, truth, ami_average),
        "ari": ari(pred, truth),
        "accuracy": accuracy(pred, truth),
    }


def rank_scores(row: Sequence[float]) -> np.ndarray:
    """Per-method rank: how many methods scored no better (best gets ``L``)."""
    v = np.asarray(row, dtype=np.float64)
    if v.size == 0:
        raise ValueError("need at least one value")
    return (v[None, :] <= v[:, None]).sum(axis=1)


def minmax_map(row: Sequence[float]) -> Tuple[np.ndarray, bool]:
    """Map to [0, 1] by the row range. A constant row maps to zeros and is flagged."""
    v = np.asarray(row, dtype=np.float64)
    lo, hi = v.min(), v.max()
    if hi <= lo:
        return np.zeros_like(v), True
    return (v - lo) / (hi - lo), False


def studentize(row: Sequence[float]) -> Tuple[np.ndarray, bool]:
    """Centre by the row mean and divide by its sample sd. Zero sd gives zeros, flagged."""
    v = np.asarray(row, dtype=np.float64)
    if v.size < 2:
        return np.zeros_like(v), True
    sd = v.std(ddof=1)
    if not sd > 0:
        return np.zeros_like(v), True
    return (v - v.mean()) / sd, False


def aggregate(matrix) -> Dict[str, object]:
    """Standardise a datasets-by-methods result matrix row by row.

    Returns the ``rank``, ``minmax`` and ``student`` tables, their column
    means, and the indices of rows flagged degenerate by either map.
    """
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2 or m.shape[1] < 1:
        raise ValueError("result matrix must be 2-D with at least one method")
    rank = np.vstack([rank_scores(r) for r in m])
    mm, st, degenerate = [], [], []
    for i, r in enumerate(m):
        a, fa = minmax_map(r)
        b, fb = studentize(r)
        mm.append(a)
        st.append(b)
        if fa or fb:
            degenerate.append(i)
    mm = np.vstack(mm)
    st = np.vstack(st)
    return {
        "rank": rank,
        "minmax": mm,
        "student": st,
        "mean_rank": rank.mean(axis=0),
        "mean_minmax": mm.mean(axis=0),
        "mean_student": st.mean(axis=0),
        "degenerate_rows": degenerate,
    }


def read_results_csv(path) -> Tuple[List[str], List[str], np.ndarray]:
    """Parse a results matrix CSV: header ``dataset,<method>,...``, one row per dataset."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if len(rows) < 2:
        raise ValueError(f"{path}: need a header and at least one data row")
    methods = [c.strip() for c in rows[0][1:]]
    names, values = [], []
    for lineno, r in enumerate(rows[1:], start=2):
        if len(r) != len(methods) + 1:
            raise ValueError(f"{path}: row {lineno} has {len(r)} columns, expected {len(methods) + 1}")
        names.append(r[0].strip())
        try:
            values.append([float(c) for c in r[1:]])
        except ValueError:
            raise ValueError(f"{path}: non-numeric value in row {lineno}") from None
    return names, methods, np.array(values)
