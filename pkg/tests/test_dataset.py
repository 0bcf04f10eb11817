import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from nnec.dataset import (
    DataError,
    Dataset,
    encode_labels,
    load_delimited,
    load_labels,
    pca_reduce,
    preprocess,
    standardize,
)


@pytest.fixture
def three_rows(tmp_path):
    p = tmp_path / "pts.csv"
    p.write_text("1,2\n3,4\n5,6\n")
    return p


def test_load_plain(three_rows):
    d = load_delimited(three_rows)
    assert (d.n, d.d) == (3, 2)
    assert d.labels is None
    np.testing.assert_array_equal(d.points, [[1, 2], [3, 4], [5, 6]])


def test_load_label_column(three_rows):
    d = load_delimited(three_rows, label_column=1)
    np.testing.assert_array_equal(d.points, [[1], [3], [5]])
    np.testing.assert_array_equal(d.labels, [0, 1, 2])


def test_load_label_by_header_name(tmp_path):
    p = tmp_path / "h.csv"
    p.write_text("x;y;cls\n1;2;b\n3;4;a\n5;6;b\n")
    d = load_delimited(p, delimiter=";", has_header=True, label_column="cls")
    np.testing.assert_array_equal(d.points, [[1, 2], [3, 4], [5, 6]])
    np.testing.assert_array_equal(d.labels, [1, 0, 1])


def test_load_whitespace(tmp_path):
    p = tmp_path / "w.txt"
    p.write_text("1.5 2\t7\n\n3 4 8\n")
    d = load_delimited(p, delimiter="whitespace", label_column=-1)
    np.testing.assert_array_equal(d.points, [[1.5, 2], [3, 4]])
    np.testing.assert_array_equal(d.labels, [0, 1])


def test_parse_error_names_row_and_column(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("1,2\n3,abc\n")
    with pytest.raises(DataError, match=r"row 2, column 2"):
        load_delimited(p)


def test_ragged_rows(tmp_path):
    p = tmp_path / "ragged.csv"
    p.write_text("1,2\n3\n")
    with pytest.raises(DataError, match="row 2 has 1 columns"):
        load_delimited(p)


def test_empty_file(tmp_path):
    p = tmp_path / "empty.csv"
    p.write_text("\n\n")
    with pytest.raises(DataError, match="empty"):
        load_delimited(p)


def test_non_finite_rejected(tmp_path):
    p = tmp_path / "inf.csv"
    p.write_text("1,2\n3,inf\n")
    with pytest.raises(DataError, match="non-finite"):
        load_delimited(p)


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_delimited(tmp_path / "nope.csv")


def test_label_file(tmp_path):
    p = tmp_path / "labels.txt"
    p.write_text("10\n2\n10\n")
    np.testing.assert_array_equal(load_labels(p), [1, 0, 1])


def test_encode_labels_strings():
    np.testing.assert_array_equal(encode_labels(["b", "a", "c", "a"]), [1, 0, 2, 0])


def test_dataset_invariants():
    with pytest.raises(DataError):
        Dataset(np.array([[1.0]]))
    with pytest.raises(DataError):
        Dataset(np.array([[1.0], [np.nan]]))
    with pytest.raises(DataError):
        Dataset(np.zeros((3, 1)), labels=[0, 1])


def test_standardize_hand_value():
    d = standardize(Dataset(np.array([[0.0], [2.0]])))
    # sample sd of (0, 2) is sqrt(2)
    np.testing.assert_allclose(d.points[:, 0], [0.0, math.sqrt(2)], rtol=0, atol=1e-15)


def test_standardize_constant_column_untouched():
    pts = np.array([[5.0, 1.0], [5.0, 2.0], [5.0, 4.0]])
    d = standardize(Dataset(pts))
    np.testing.assert_array_equal(d.points[:, 0], [5, 5, 5])


def test_standardize_keeps_mean_offset():
    pts = np.array([[10.0], [12.0], [14.0]])
    d = standardize(Dataset(pts))
    np.testing.assert_allclose(d.points[:, 0], [5.0, 6.0, 7.0])


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(2, 30), st.integers(1, 5)),
              elements=st.floats(-1e3, 1e3, allow_nan=False)))
def test_standardize_idempotent(pts):
    once = standardize(Dataset(pts))
    twice = standardize(once)
    sd = once.points.std(axis=0, ddof=1)
    positive = pts.std(axis=0, ddof=1) > 1e-6
    np.testing.assert_allclose(sd[positive], 1.0, atol=1e-12)
    np.testing.assert_allclose(twice.points[:, positive], once.points[:, positive], rtol=1e-12, atol=1e-12)


def test_pca_identity_when_narrow():
    d = Dataset(np.random.default_rng(0).normal(size=(10, 2)))
    assert pca_reduce(d, 100) is d


def test_pca_bad_dim():
    with pytest.raises(DataError):
        pca_reduce(Dataset(np.zeros((3, 2)) + [[0, 0], [1, 0], [0, 1]]), 0)


def _pairwise(x):
    return np.sqrt(((x[:, None, :] - x[None, :, :]) ** 2).sum(-1))


def test_pca_line_in_3d_preserves_distances():
    rng = np.random.default_rng(3)
    t = rng.normal(size=40)
    direction = np.array([1.0, -2.0, 0.5])
    pts = np.outer(t, direction) + np.array([3.0, 1.0, -7.0])
    reduced = pca_reduce(Dataset(pts), max_dim=1)
    assert reduced.d == 1
    np.testing.assert_allclose(_pairwise(reduced.points), _pairwise(pts), atol=1e-9)


def test_pca_low_rank_preserves_distances_and_orders_variance():
    rng = np.random.default_rng(4)
    latent = rng.normal(size=(60, 3)) * [5.0, 2.0, 0.5]
    mix = rng.normal(size=(3, 8))
    pts = latent @ mix
    reduced = pca_reduce(Dataset(pts), max_dim=3)
    np.testing.assert_allclose(_pairwise(reduced.points), _pairwise(pts), atol=1e-9)
    var = reduced.points.var(axis=0)
    assert np.all(np.diff(var) <= 1e-12)


def test_pca_sign_convention():
    rng = np.random.default_rng(5)
    pts = rng.normal(size=(50, 6))
    reduced = pca_reduce(Dataset(pts), max_dim=2)
    centred = pts - pts.mean(axis=0)
    # recover loadings by least squares and check the largest entry is positive
    loadings, *_ = np.linalg.lstsq(centred, reduced.points, rcond=None)
    for col in loadings.T:
        assert col[np.argmax(np.abs(col))] > 0


def test_preprocess_deterministic(tmp_path):
    rng = np.random.default_rng(6)
    p = tmp_path / "wide.csv"
    p.write_text("\n".join(",".join(repr(float(v)) for v in row) for row in rng.normal(size=(30, 120))))
    a = preprocess(load_delimited(p))
    b = preprocess(load_delimited(p))
    assert a.d == 100
    assert a.points.tobytes() == b.points.tobytes()
    assert a.content_hash() == b.content_hash()
