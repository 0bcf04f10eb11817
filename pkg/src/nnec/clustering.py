"""Complete clustering: cover the data with equilibrium clusters, then assign by strength."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, List, Optional, Sequence

import numpy as np

from .equilibrium import (
    EquilibriumParams,
    LambdaLike,
    as_fraction,
    grow_cluster,
)
from .neighbours import NeighbourGraph

DUMMY = "dummy"


class ClusteringError(RuntimeError):
    """Internal invariant violated during clustering."""


@dataclass
class ClusteringSolution:
    """Result of one run of the covering procedure for fixed ``(lambda, k)``.

    Attributes
    ----------
    clusters : list of ndarray
        Sorted member indices of every equilibrium cluster in discovery
        order, dummy singletons included.
    statuses : list of str
        Grower status per cluster, or ``"dummy"``.
    seeds : list of int
        Seed index behind each cluster (a dummy carries its own seed).
    strength_numerators : ndarray of int, shape (n, C)
        Membership strengths scaled by ``k * n * q`` where ``lambda = p/q``;
        exact integers.
    raw_assignment : ndarray of int
        Index into ``clusters`` chosen for each point.
    labels : ndarray of int
        Compacted labels ``0..K-1``: clusters that received no points are
        dropped and the rest keep discovery order.
    label_map : list of int
        ``label_map[label]`` is the index into ``clusters``.
    fallback_points : ndarray of int
        Points whose strength was zero for every cluster and were placed by
        the nearest-neighbour fallback.
    """

    params: EquilibriumParams
    n: int
    clusters: List[np.ndarray]
    statuses: List[str]
    seeds: List[int]
    strength_numerators: np.ndarray
    raw_assignment: np.ndarray
    labels: np.ndarray
    label_map: List[int]
    fallback_points: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))

    @property
    def strength_scale(self) -> int:
        return self.params.k * self.n * self.params.lam.denominator

    @property
    def strengths(self) -> np.ndarray:
        """Membership strengths as floats, shape ``(n, C)``."""
        return self.strength_numerators / self.strength_scale

    @property
    def n_clusters(self) -> int:
        """Number of non-empty clusters in the final hard partition."""
        return len(self.label_map)

    @property
    def n_equilibrium(self) -> int:
        """Number of non-dummy, non-empty equilibrium clusters found."""
        return sum(1 for c, s in zip(self.clusters, self.statuses) if s != DUMMY and len(c))

    def summary(self) -> dict:
        return {
            "lambda": str(self.params.lam),
            "lambda_float": float(self.params.lam),
            "k": self.params.k,
            "r": self.params.r,
            "t_max": self.params.t_max,
            "n": self.n,
            "n_clusters": self.n_clusters,
            "seeds": [int(s) for s in self.seeds],
            "cluster_sizes": [int(len(c)) for c in self.clusters],
            "statuses": list(self.statuses),
            "label_map": [int(c) for c in self.label_map],
            "fallback_count": int(len(self.fallback_points)),
        }


def select_seed(graph: NeighbourGraph, k: int, covered) -> int:
    """Uncovered point with the largest reverse-neighbour count (smallest index on ties)."""
    covered_mask = np.zeros(graph.n, dtype=bool)
    if isinstance(covered, np.ndarray) and covered.dtype == bool:
        covered_mask[:] = covered
    else:
        covered_mask[list(covered)] = True
    if covered_mask.all():
        raise ValueError("all points are already covered")
    score = np.where(covered_mask, -1, graph.indegrees(k))
    return int(np.argmax(score))


def strength_numerators(graph: NeighbourGraph, k: int, lam: LambdaLike, clusters: Sequence) -> np.ndarray:
    """Integer strengths ``max(0, q*n*m_ic - p*k*|C_c|)`` where ``lambda = p/q``.

    Dividing by ``k*n*q`` gives the membership strength
    ``max(0, m_ic/k - lambda*|C_c|/n)``.
    """
    lam = as_fraction(lam)
    n = graph.n
    knn = graph.knn(k)
    out = np.zeros((n, len(clusters)), dtype=np.int64)
    lhs = lam.denominator * n
    for c, members in enumerate(clusters):
        members = np.unique(np.asarray(members, dtype=np.int64))
        if members.size == 0:
            continue
        mask = np.zeros(n, dtype=bool)
        mask[members] = True
        m = mask[knn].sum(axis=1)
        out[:, c] = np.maximum(0, lhs * m - lam.numerator * k * members.size)
    return out


def strength_matrix(graph: NeighbourGraph, k: int, lam: LambdaLike, clusters: Sequence) -> np.ndarray:
    """Membership strengths ``s[i, c]`` as floats."""
    lam = as_fraction(lam)
    return strength_numerators(graph, k, lam, clusters) / (k * graph.n * lam.denominator)


def assign(graph: NeighbourGraph, k: int, numerators: np.ndarray, candidates: np.ndarray):
    """Hard assignment by maximum strength over candidate columns.

    Ties go to the smallest cluster index. Rows that are zero across all
    candidates take the cluster of their nearest neighbour (in ``N_k`` order)
    that was resolved before the current sweep, sweeping until nothing
    changes; anything left goes to the first candidate.

    Returns ``(assignment, fallback_points)``.
    """
    if candidates.size == 0:
        raise ClusteringError("no non-empty clusters to assign to")
    sub = numerators[:, candidates]
    assignment = candidates[np.argmax(sub, axis=1)]
    unresolved = sub.max(axis=1) == 0
    fallback = np.flatnonzero(unresolved)
    if fallback.size:
        knn = graph.knn(k)
        resolved = ~unresolved
        changed = True
        while changed and not resolved.all():
            changed = False
            # each sweep only reads points resolved before it began, so the
            # outcome does not depend on point order
            snapshot = resolved.copy()
            for i in np.flatnonzero(~snapshot):
                hits = knn[i][snapshot[knn[i]]]
                if hits.size:
                    assignment[i] = assignment[hits[0]]
                    resolved[i] = True
                    changed = True
        assignment[~resolved] = candidates[0]
    return assignment, fallback


def cluster(
    graph: NeighbourGraph,
    params: EquilibriumParams,
    n: Optional[int] = None,
    trace: Optional[Callable[[dict], None]] = None,
) -> ClusteringSolution:
    """Cover all points with equilibrium clusters and assign each to its strongest one.

    Seeds are chosen among uncovered points by reverse-neighbour count. When a
    grown cluster does not contain its own seed, a singleton cluster holding
    the seed is appended so it cannot be chosen again.

    ``trace`` receives every grower sweep record, tagged with ``cluster``
    and ``seed``.
    """
    if n is not None and n != graph.n:
        raise ValueError(f"graph has {graph.n} points, expected {n}")
    n = graph.n
    k = params.k
    if k > graph.k_max:
        raise ValueError(f"k={k} exceeds graph k_max={graph.k_max}")

    covered = np.zeros(n, dtype=bool)
    clusters: List[np.ndarray] = []
    statuses: List[str] = []
    seeds: List[int] = []
    loops = 0
    while not covered.all():
        loops += 1
        if loops > n:
            raise ClusteringError("covering loop exceeded n iterations")
        seed = select_seed(graph, k, covered)
        sink = None
        if trace is not None:
            tag = {"cluster": len(clusters), "seed": seed}
            sink = lambda rec, tag=tag: trace({**tag, **rec})
        result = grow_cluster(graph, params, seed, trace=sink)
        clusters.append(result.members)
        statuses.append(result.status)
        seeds.append(seed)
        covered[result.members] = True
        if seed not in result:
            clusters.append(np.array([seed], dtype=np.int64))
            statuses.append(DUMMY)
            seeds.append(seed)
            covered[seed] = True

    numer = strength_numerators(graph, k, params.lam, clusters)
    candidates = np.array([c for c, m in enumerate(clusters) if len(m)], dtype=np.int64)
    raw, fallback = assign(graph, k, numer, candidates)
    used = np.unique(raw)
    relabel = np.full(len(clusters), -1, dtype=np.int64)
    relabel[used] = np.arange(len(used))
    return ClusteringSolution(
        params=params,
        n=n,
        clusters=clusters,
        statuses=statuses,
        seeds=seeds,
        strength_numerators=numer,
        raw_assignment=raw,
        labels=relabel[raw],
        label_map=used.tolist(),
        fallback_points=fallback,
    )


def fit(graph: NeighbourGraph, lam: LambdaLike, k: int, r: int = 5, t_max: int = 100) -> ClusteringSolution:
    """Convenience wrapper around :func:`cluster` taking plain parameter values."""
    return cluster(graph, EquilibriumParams(Fraction(as_fraction(lam)), k, r, t_max))
