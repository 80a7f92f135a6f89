import numpy as np
import pytest
from scipy import ndimage

from oracles import random_blob, union_find_labels
from rootseg import skeleton


def n_components(mask):
    return skeleton.label_components(mask).count


def test_fill_gaps_examples():
    assert not skeleton.fill_gaps(np.zeros((5, 5), bool)).any()
    m = np.zeros((5, 7), bool)
    m[2, 2] = m[2, 4] = True
    assert skeleton.fill_gaps(m)[2, 3]
    block = np.zeros((9, 9), bool)
    block[2:7, 2:7] = True
    np.testing.assert_array_equal(skeleton.fill_gaps(block), block)


def test_fill_gaps_is_extensive(rng):
    for _ in range(30):
        m = rng.random((12, 12)) < 0.3
        assert (skeleton.fill_gaps(m) >= m).all()


def test_skeleton_simple_cases():
    assert not skeleton.skeletonize(np.zeros((6, 6), bool)).any()
    line = np.zeros((7, 9), bool)
    line[3, 1:8] = True
    np.testing.assert_array_equal(skeleton.skeletonize(line), line)
    diag = np.eye(8, dtype=bool)
    np.testing.assert_array_equal(skeleton.skeletonize(diag), diag)


def test_skeleton_of_bar():
    bar = np.zeros((9, 26), bool)
    bar[2:7, 3:23] = True
    sk = skeleton.skeletonize(bar)
    assert (sk <= bar).all()
    assert n_components(sk) == 1
    # thin: every column carries at most one skeleton pixel and it spans most of the bar
    assert sk.sum(axis=0).max() == 1
    cols = np.flatnonzero(sk.any(axis=0))
    assert cols.max() - cols.min() >= 14


def test_skeleton_keeps_small_squares():
    # plain parallel Zhang-Suen deletes a 2x2 block entirely
    m = np.zeros((6, 6), bool)
    m[2:4, 2:4] = True
    sk = skeleton.skeletonize(m)
    assert sk.any() and n_components(sk) == 1


def test_skeleton_keeps_thick_diagonal():
    m = np.eye(10, dtype=bool) | np.eye(10, k=1, dtype=bool)
    sk = skeleton.skeletonize(m)
    assert n_components(sk) == 1
    assert sk.sum() >= 9


def test_skeleton_is_one_pixel_wide_on_blobs(rng):
    for _ in range(20):
        sk = skeleton.skeletonize(random_blob(rng))
        # no 2x2 fully-on square survives thinning
        quads = sk[:-1, :-1] & sk[1:, :-1] & sk[:-1, 1:] & sk[1:, 1:]
        assert not quads.any()


def test_skeleton_invariants_on_blobs(rng):
    for _ in range(40):
        m = random_blob(rng)
        sk = skeleton.skeletonize(m)
        assert (sk <= m).all()
        assert n_components(sk) == n_components(m)
        np.testing.assert_array_equal(skeleton.skeletonize(m), sk)


def test_label_components_examples():
    assert skeleton.label_components(np.zeros((3, 3), bool)).count == 0
    assert skeleton.label_components(np.eye(2, dtype=bool)).count == 1
    assert skeleton.label_components(np.eye(2, dtype=bool), connectivity=4).count == 2
    assert skeleton.label_components(np.array([[1, 0, 1]], bool)).count == 2


def test_label_components_against_union_find(rng):
    for _ in range(20):
        m = rng.random((15, 17)) < 0.35
        cm = skeleton.label_components(m)
        labels, k = union_find_labels(m)
        assert cm.count == k
        # same partition, same scan-order numbering
        np.testing.assert_array_equal(cm.labels, labels)
        np.testing.assert_array_equal(cm.areas, np.bincount(labels.ravel())[1:])
        assert (cm.labels[m] > 0).all() and (cm.labels[~m] == 0).all()


def _segments(sizes, width=120):
    m = np.zeros((2 * len(sizes) + 1, width), bool)
    for i, s in enumerate(sizes):
        m[2 * i + 1, :s] = True
    return m


def test_filter_small_examples():
    m = _segments([5, 20, 100])
    np.testing.assert_array_equal(skeleton.filter_small(m, 0), m)
    assert not skeleton.filter_small(_segments([19]), 20).any()
    out = skeleton.filter_small(m, 20)
    kept = sorted(skeleton.label_components(out).areas.tolist())
    assert kept == [20, 100]


def test_filter_small_invariants(rng):
    for _ in range(20):
        m = rng.random((20, 20)) < 0.3
        alpha = int(rng.integers(1, 15))
        out = skeleton.filter_small(m, alpha)
        assert (out <= m).all()
        areas = skeleton.label_components(out).areas
        assert areas.size == 0 or areas.min() >= alpha


def test_postprocess_deterministic(rng):
    m = rng.random((30, 30)) < 0.4
    a = skeleton.postprocess(m)
    b = skeleton.postprocess(m.copy())
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x, y)
