import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nnec.dataset import DataError
from nnec.neighbours import (
    NeighbourGraph,
    OverlapCounter,
    build_graph,
    load_graph,
    overlap_counts,
    reverse_count,
    save_graph,
)
from oracles import knn_bruteforce


def test_line_neighbours(line6_graph):
    assert set(line6_graph.knn(2)[0]) == {1, 2}
    assert set(line6_graph.knn(2)[3]) == {4, 5}
    np.testing.assert_array_equal(line6_graph.neighbours, [[1, 2], [0, 2], [1, 0], [4, 5], [3, 5], [4, 3]])


def test_equidistant_tie_break():
    # vertices of an equilateral triangle plus its centre are not equidistant;
    # a regular simplex in 3-D is
    pts = np.eye(4)
    g = build_graph(pts, 1)
    np.testing.assert_array_equal(g.neighbours[:, 0], [1, 0, 0, 0])
    g3 = build_graph(pts, 3)
    np.testing.assert_array_equal(g3.neighbours, [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]])


def test_two_points():
    g = build_graph(np.array([[0.0], [5.0]]), 1)
    np.testing.assert_array_equal(g.neighbours, [[1], [0]])


def test_duplicates_order_by_index():
    pts = np.array([[0.0], [0.0], [0.0], [1.0]])
    g = build_graph(pts, 3)
    np.testing.assert_array_equal(g.neighbours, [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]])


@pytest.mark.parametrize("k_max", [0, 6])
def test_k_max_out_of_range(k_max):
    with pytest.raises(ValueError):
        build_graph(np.arange(6.0).reshape(-1, 1), k_max)


def test_only_euclidean():
    with pytest.raises(ValueError, match="euclidean"):
        build_graph(np.arange(6.0).reshape(-1, 1), 2, metric="cosine")


def test_graph_validation():
    with pytest.raises(DataError):
        NeighbourGraph(np.array([[0], [0]]))
    with pytest.raises(DataError):
        NeighbourGraph(np.array([[1, 2], [0, 2]]))


def test_reverse_count_line(line6_graph):
    assert reverse_count(line6_graph, 2, 1) == 2
    assert sum(reverse_count(line6_graph, 2, j) for j in range(6)) == 12


def test_reverse_count_outlier():
    g = build_graph(np.array([[0.0], [1.0], [2.0], [100.0]]), 1)
    assert reverse_count(g, 1, 3) == 0


def test_reverse_count_range(line6_graph):
    with pytest.raises(IndexError):
        reverse_count(line6_graph, 2, 6)
    with pytest.raises(ValueError):
        reverse_count(line6_graph, 3, 0)


def test_reverse_adjacency_consistent(blobs_graph):
    for k in (1, 7, 25):
        indptr, indices = blobs_graph.reverse(k)
        assert indptr[-1] == blobs_graph.n * k
        for j in (0, 17, 999):
            expected = np.flatnonzero((blobs_graph.knn(k) == j).any(axis=1))
            np.testing.assert_array_equal(indices[indptr[j]:indptr[j + 1]], expected)


def test_overlap_counts_examples(line6_graph):
    np.testing.assert_array_equal(overlap_counts(line6_graph, 2, []), np.zeros(6))
    np.testing.assert_array_equal(overlap_counts(line6_graph, 2, range(6)), np.full(6, 2))
    np.testing.assert_array_equal(overlap_counts(line6_graph, 2, {0, 1, 2}), [2, 2, 2, 0, 0, 0])


def test_overlap_counts_range(line6_graph):
    with pytest.raises(IndexError):
        overlap_counts(line6_graph, 2, [6])


def test_incremental_matches_scratch(blobs_graph):
    rng = np.random.default_rng(11)
    n = blobs_graph.n
    for k in (1, 10, 25):
        counter = OverlapCounter(blobs_graph, k)
        members = set()
        for _ in range(100):
            add = rng.choice(n, size=rng.integers(0, 30), replace=True)
            rem = rng.choice(n, size=rng.integers(0, 30), replace=True)
            counter.update(add, rem)
            members = (members | set(add.tolist())) - set(rem.tolist())
            np.testing.assert_array_equal(counter.counts, overlap_counts(blobs_graph, k, members))
            assert counter.size == len(members)


points_strategy = st.integers(2, 60).flatmap(
    lambda n: st.tuples(
        st.lists(st.lists(st.integers(-4, 4), min_size=2, max_size=2), min_size=n, max_size=n),
        st.integers(1, n - 1),
    )
)


@settings(max_examples=60, deadline=None)
@given(points_strategy)
def test_graph_matches_bruteforce_integer_grid(case):
    pts, k = case
    g = build_graph(np.array(pts, dtype=float), k)
    assert g.neighbours.tolist() == knn_bruteforce(pts, k)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 120), st.integers(1, 6))
def test_graph_matches_bruteforce_random(seed, n, d):
    pts = np.random.default_rng(seed).normal(size=(n, d))
    k = min(n - 1, 10)
    g = build_graph(pts, k)
    assert g.neighbours.tolist() == knn_bruteforce(pts.tolist(), k)


def test_parallel_build_identical(blobs):
    assert build_graph(blobs, 20, workers=1) == build_graph(blobs, 20, workers=4)


def test_graph_cache_roundtrip(tmp_path, line6_graph):
    p = tmp_path / "g.json"
    save_graph(line6_graph, p, "abc")
    assert load_graph(p, "abc") == line6_graph
    assert json.loads(p.read_text())["k_max"] == 2
    with pytest.raises(DataError, match="different data"):
        load_graph(p, "other")
