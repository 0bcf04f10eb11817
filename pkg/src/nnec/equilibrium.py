"""Equilibrium predicate and the iterative cluster grower.

All threshold comparisons run in integer arithmetic. With ``lam = p/q`` the
membership test ``m/k > lam * |C| / n`` becomes ``q * n * m > p * k * |C|``.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Callable, Optional, Union

import numpy as np

from .neighbours import NeighbourGraph, OverlapCounter, _as_indices, overlap_counts

CONVERGED = "converged"
CYCLED = "cycled"
CAPPED = "capped"

LambdaLike = Union[int, float, str, Fraction]

# floats are snapped to the nearest fraction with at most this denominator
LAMBDA_MAX_DENOMINATOR = 1000


def as_fraction(value: LambdaLike) -> Fraction:
    """Exact rational form of a threshold value.

    Integers, ``Fraction``s and strings such as ``"1.2"`` or ``"4/3"`` convert
    exactly. Floats are rounded to the closest fraction with denominator at
    most ``LAMBDA_MAX_DENOMINATOR``, so ``1/3`` computed in floating point
    becomes exactly ``Fraction(1, 3)``.
    """
    if isinstance(value, Rational):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    return Fraction(float(value)).limit_denominator(LAMBDA_MAX_DENOMINATOR)


@dataclass(frozen=True)
class EquilibriumParams:
    lam: Fraction
    k: int
    r: int = 5
    t_max: int = 100

    def __post_init__(self):
        lam = as_fraction(self.lam)
        object.__setattr__(self, "lam", lam)
        if lam <= 0:
            raise ValueError(f"lambda must be positive, got {lam}")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.r < 1:
            raise ValueError(f"r must be >= 1, got {self.r}")
        if self.t_max < 1:
            raise ValueError(f"t_max must be >= 1, got {self.t_max}")

    def threshold_terms(self, n: int):
        """``(lhs_scale, rhs_scale)`` so membership is ``lhs_scale*m > rhs_scale*|C|``."""
        return self.lam.denominator * n, self.lam.numerator * self.k


@dataclass(frozen=True)
class EquilibriumClusterResult:
    members: np.ndarray
    status: str
    iterations: int

    @property
    def size(self) -> int:
        return len(self.members)

    def __contains__(self, i) -> bool:
        pos = np.searchsorted(self.members, i)
        return bool(pos < len(self.members) and self.members[pos] == i)


def _member_mask(counts: np.ndarray, size: int, params: EquilibriumParams, n: int) -> np.ndarray:
    lhs, rhs = params.threshold_terms(n)
    return lhs * counts > rhs * size


def update_map(graph: NeighbourGraph, params: EquilibriumParams, cluster) -> np.ndarray:
    """One application of the growth update, returning the sorted new member indices."""
    idx = _as_indices(cluster, graph.n)
    size = len(np.unique(idx))
    counts = overlap_counts(graph, params.k, idx)
    return np.flatnonzero(_member_mask(counts, size, params, graph.n))


def is_equilibrium(graph: NeighbourGraph, params: EquilibriumParams, cluster) -> bool:
    """Whether ``cluster`` satisfies both sides of the equilibrium condition.

    Members need strictly more than ``lam*|C|/n`` of their ``k`` neighbours
    inside ``C``; non-members at most that fraction. The empty set qualifies.
    """
    n = graph.n
    idx = np.unique(_as_indices(cluster, n))
    mask = np.zeros(n, dtype=bool)
    mask[idx] = True
    counts = overlap_counts(graph, params.k, idx)
    lhs, rhs = params.threshold_terms(n)
    scaled = lhs * counts
    bound = rhs * len(idx)
    return bool(np.all(scaled[mask] > bound) and np.all(scaled[~mask] <= bound))


def grow_cluster(
    graph: NeighbourGraph,
    params: EquilibriumParams,
    seed: int,
    trace: Optional[Callable[[dict], None]] = None,
) -> EquilibriumClusterResult:
    """Grow an equilibrium cluster from ``seed`` by repeated application of the update.

    Starting from ``{seed}``, each sweep keeps every point whose neighbour
    overlap with the current set beats the size-scaled threshold. Iteration
    stops when the new set repeats one of the previous ``r`` sets (status
    ``converged`` if it repeats the immediately preceding set, ``cycled``
    otherwise), or after ``t_max`` sweeps without a repeat (``capped``).

    ``trace``, if given, receives one dict per sweep with keys ``t``, ``size``,
    ``added`` and ``removed``.
    """
    n = graph.n
    if not 0 <= seed < n:
        raise IndexError(f"seed {seed} out of range for n={n}")
    graph._check_k(params.k)

    counter = OverlapCounter(graph, params.k, [seed])
    history = deque([np.packbits(counter.mask).tobytes()], maxlen=params.r)
    status = CAPPED
    t = 0
    while t < params.t_max:
        t += 1
        new_mask = _member_mask(counter.counts, counter.size, params, n)
        added, removed = counter.set_members(new_mask)
        if trace is not None:
            trace({"t": t, "size": counter.size, "added": added.tolist(), "removed": removed.tolist()})
        key = np.packbits(new_mask).tobytes()
        if key in history:
            status = CONVERGED if key == history[-1] else CYCLED
            break
        history.append(key)
    return EquilibriumClusterResult(np.flatnonzero(counter.mask), status, t)


def trace_lines(records) -> str:
    """Render sweep records as line-delimited JSON."""
    return "".join(json.dumps(r, sort_keys=True) + "\n" for r in records)
