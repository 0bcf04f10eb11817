"""Exact k-nearest-neighbour graph with reverse adjacency and overlap counting."""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, Iterable, Optional, Tuple, Union

import numpy as np

from .dataset import DataError, Dataset

GRAPH_CACHE_VERSION = 1

# bytes budget for one block of pairwise coordinate differences
_BLOCK_BYTES = 32 * 2**20


class NeighbourGraph:
    """Ordered k-nearest-neighbour lists for every point, built once for ``k_max``.

    ``neighbours[i, :k]`` is ``N_k(x_i)``: the ``k`` nearest other points to
    ``x_i`` sorted by (squared Euclidean distance, index). Any ``k <= k_max``
    is served by slicing.
    """

    def __init__(self, neighbours: np.ndarray):
        nb = np.ascontiguousarray(np.asarray(neighbours, dtype=np.int64))
        if nb.ndim != 2 or nb.shape[1] < 1:
            raise DataError(f"neighbour array must be n x k_max, got {nb.shape}")
        n = nb.shape[0]
        if nb.shape[1] > n - 1:
            raise DataError(f"k_max={nb.shape[1]} exceeds n-1={n - 1}")
        if nb.min() < 0 or nb.max() >= n:
            raise DataError("neighbour index out of range")
        if np.any(nb == np.arange(n)[:, None]):
            raise DataError("a point cannot be its own neighbour")
        nb.setflags(write=False)
        self.neighbours = nb
        self._reverse: Dict[int, Tuple[np.ndarray, np.ndarray]] = {}
        self._indegree: Dict[int, np.ndarray] = {}

    @property
    def n(self) -> int:
        return self.neighbours.shape[0]

    @property
    def k_max(self) -> int:
        return self.neighbours.shape[1]

    def _check_k(self, k: int):
        if not 1 <= k <= self.k_max:
            raise ValueError(f"k={k} outside [1, {self.k_max}]")

    def knn(self, k: int) -> np.ndarray:
        """The ``n x k`` slice of neighbour lists."""
        self._check_k(k)
        return self.neighbours[:, :k]

    def reverse(self, k: int) -> Tuple[np.ndarray, np.ndarray]:
        """Reverse adjacency for ``k`` in CSR form ``(indptr, indices)``.

        ``indices[indptr[j]:indptr[j+1]]`` lists, in ascending order, every
        ``i`` with ``j`` in ``N_k(x_i)``.
        """
        self._check_k(k)
        cached = self._reverse.get(k)
        if cached is None:
            targets = self.neighbours[:, :k].ravel()
            sources = np.repeat(np.arange(self.n, dtype=np.int64), k)
            order = np.argsort(targets, kind="stable")
            counts = np.bincount(targets, minlength=self.n)
            indptr = np.zeros(self.n + 1, dtype=np.int64)
            np.cumsum(counts, out=indptr[1:])
            indices = sources[order]
            indptr.setflags(write=False)
            indices.setflags(write=False)
            cached = (indptr, indices)
            self._reverse[k] = cached
        return cached

    def indegrees(self, k: int) -> np.ndarray:
        """``|{i : j in N_k(x_i)}|`` for every ``j``."""
        self._check_k(k)
        deg = self._indegree.get(k)
        if deg is None:
            deg = np.bincount(self.neighbours[:, :k].ravel(), minlength=self.n)
            deg.setflags(write=False)
            self._indegree[k] = deg
        return deg

    def __eq__(self, other):
        if not isinstance(other, NeighbourGraph):
            return NotImplemented
        return np.array_equal(self.neighbours, other.neighbours)

    def __repr__(self):
        return f"NeighbourGraph(n={self.n}, k_max={self.k_max})"


def _knn_block(points: np.ndarray, rows: np.ndarray, k_max: int) -> np.ndarray:
    diff = points[rows, None, :] - points[None, :, :]
    dist = np.einsum("ijk,ijk->ij", diff, diff)
    dist[np.arange(len(rows)), rows] = np.inf
    # stable sort keeps index order among equal distances
    order = np.argsort(dist, axis=1, kind="stable")
    return order[:, :k_max]


def build_graph(
    data: Union[Dataset, np.ndarray],
    k_max: int,
    metric: str = "euclidean",
    workers: int = 1,
) -> NeighbourGraph:
    """Exact brute-force k-NN graph.

    Distances are squared Euclidean, evaluated in row blocks. Ties are broken
    in favour of the smaller index.
    """
    if metric != "euclidean":
        raise ValueError(f"unsupported metric {metric!r}; only 'euclidean' is available")
    points = data.points if isinstance(data, Dataset) else np.asarray(data, dtype=np.float64)
    n, d = points.shape
    if not 1 <= k_max <= n - 1:
        raise ValueError(f"k_max={k_max} must lie in [1, n-1={n - 1}]")

    block = max(1, _BLOCK_BYTES // (8 * n * max(d, 1)))
    starts = range(0, n, block)

    def run(start):
        rows = np.arange(start, min(start + block, n))
        return _knn_block(points, rows, k_max)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, starts))
    else:
        parts = [run(s) for s in starts]
    return NeighbourGraph(np.vstack(parts))


def reverse_count(graph: NeighbourGraph, k: int, j: int) -> int:
    """Number of points having ``j`` among their ``k`` nearest neighbours."""
    if not 0 <= j < graph.n:
        raise IndexError(f"point index {j} out of range")
    return int(graph.indegrees(k)[j])


def _as_indices(cluster, n: int) -> np.ndarray:
    idx = np.asarray(
        sorted(cluster) if isinstance(cluster, (set, frozenset)) else cluster,
        dtype=np.int64,
    ).ravel()
    if idx.size and (idx.min() < 0 or idx.max() >= n):
        raise IndexError("cluster index out of range")
    return idx


def gather_reverse(graph: NeighbourGraph, k: int, points: np.ndarray) -> np.ndarray:
    """Concatenated reverse-neighbour lists of ``points`` (with repetition)."""
    indptr, indices = graph.reverse(k)
    points = np.asarray(points, dtype=np.int64)
    if points.size == 0:
        return np.empty(0, dtype=np.int64)
    starts = indptr[points]
    lens = indptr[points + 1] - starts
    total = int(lens.sum())
    if total == 0:
        return np.empty(0, dtype=np.int64)
    offsets = np.repeat(starts - np.cumsum(lens) + lens, lens)
    return indices[offsets + np.arange(total)]


def overlap_counts(graph: NeighbourGraph, k: int, cluster: Iterable[int]) -> np.ndarray:
    """``m[i] = |N_k(x_i) ∩ cluster|`` for every point, computed from scratch."""
    idx = _as_indices(cluster, graph.n)
    mask = np.zeros(graph.n, dtype=bool)
    mask[idx] = True
    return mask[graph.knn(k)].sum(axis=1).astype(np.int64)


class OverlapCounter:
    """Incrementally maintained overlap counts for an evolving cluster.

    Holds a membership mask and ``counts[i] = |N_k(x_i) ∩ C|``. Edits apply
    +/-1 deltas over the reverse adjacency of the changed members only.
    Instances are caller-owned scratch state and not thread-safe.
    """

    def __init__(self, graph: NeighbourGraph, k: int, cluster: Optional[Iterable[int]] = None):
        self.graph = graph
        self.k = k
        graph._check_k(k)
        self.mask = np.zeros(graph.n, dtype=bool)
        self.counts = np.zeros(graph.n, dtype=np.int64)
        if cluster is not None:
            self.update(_as_indices(cluster, graph.n), ())

    @property
    def size(self) -> int:
        return int(self.mask.sum())

    def update(self, added, removed):
        """Add members, then remove members. Indices already in the requested state are ignored."""
        n = self.graph.n
        added = _as_indices(added, n)
        removed = _as_indices(removed, n)
        added = np.unique(added[~self.mask[added]])
        if added.size:
            self.mask[added] = True
            self.counts += np.bincount(gather_reverse(self.graph, self.k, added), minlength=n)
        removed = np.unique(removed[self.mask[removed]])
        if removed.size:
            self.mask[removed] = False
            self.counts -= np.bincount(gather_reverse(self.graph, self.k, removed), minlength=n)

    def set_members(self, new_mask: np.ndarray):
        """Move to the membership given by boolean ``new_mask``."""
        added = np.flatnonzero(new_mask & ~self.mask)
        removed = np.flatnonzero(self.mask & ~new_mask)
        self.update(added, removed)
        return added, removed


def save_graph(graph: NeighbourGraph, path: Union[str, Path], content_hash: str = ""):
    """Write the graph as versioned JSON (``k_max`` and flattened neighbour lists)."""
    payload = {
        "version": GRAPH_CACHE_VERSION,
        "n": graph.n,
        "k_max": graph.k_max,
        "content_hash": content_hash,
        "neighbours": graph.neighbours.ravel().tolist(),
    }
    Path(path).write_text(json.dumps(payload))


def load_graph(path: Union[str, Path], content_hash: Optional[str] = None) -> NeighbourGraph:
    """Read a graph written by :func:`save_graph`.

    When ``content_hash`` is given it must match the stored hash.
    """
    payload = json.loads(Path(path).read_text())
    if payload.get("version") != GRAPH_CACHE_VERSION:
        raise DataError(f"{path}: unsupported graph cache version {payload.get('version')}")
    if content_hash is not None and payload.get("content_hash") != content_hash:
        raise DataError(f"{path}: graph cache belongs to different data")
    nb = np.asarray(payload["neighbours"], dtype=np.int64).reshape(payload["n"], payload["k_max"])
    return NeighbourGraph(nb)
