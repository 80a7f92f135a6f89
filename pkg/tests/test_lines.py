import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_line_strength
from rootseg import lines
from rootseg.errors import InvalidLength


def test_default_detector():
    p = lines.LineDetectorParams()
    assert p.lengths == (3, 5, 7, 9, 11, 13, 15)
    assert p.angles_deg == tuple(range(0, 166, 15))


@pytest.mark.parametrize("bad", [2, 1, 4, 0])
def test_invalid_length(bad):
    with pytest.raises(InvalidLength):
        lines.line_strength(np.zeros((5, 5)), bad)
    with pytest.raises(InvalidLength):
        lines.LineDetectorParams(lengths=(3, bad))


def test_invalid_angle():
    with pytest.raises(ValueError):
        lines.LineDetectorParams(angles_deg=(0, 180))


def test_offsets_horizontal_and_vertical():
    np.testing.assert_array_equal(lines.line_offsets(3, 0), [[0, -1], [0, 0], [0, 1]])
    np.testing.assert_array_equal(lines.line_offsets(3, 90), [[1, 0], [0, 0], [-1, 0]])


def test_offsets_are_symmetric():
    for a in lines.DEFAULT_ANGLES:
        off = lines.line_offsets(15, a)
        np.testing.assert_array_equal(off, -off[::-1])


def test_constant_image_has_zero_strength():
    img = np.full((9, 9), 37.0)
    np.testing.assert_allclose(lines.line_strength(img, 5), 0, atol=1e-12)
    np.testing.assert_allclose(lines.enhance(img), 0, atol=1e-12)


def _horizontal_line():
    img = np.zeros((5, 5))
    img[2, :] = 90
    return img


def test_line_strength_hand_count():
    s = lines.line_strength(_horizontal_line(), 3, angles=(0,))
    assert s[2, 2] == pytest.approx(60.0)
    s_all = lines.line_strength(_horizontal_line(), 3)
    assert s_all[2, 2] == pytest.approx(60.0)


def test_line_strength_across_the_line():
    s = lines.line_strength(_horizontal_line(), 3, angles=(90,))
    assert s[2, 2] == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("length", [3, 5, 7])
def test_matches_brute_force(length, rng):
    img = rng.integers(0, 255, size=(11, 9)).astype(float)
    np.testing.assert_allclose(
        lines.line_strength(img, length),
        brute_line_strength(img, length, lines.DEFAULT_ANGLES),
        atol=1e-9,
    )


def test_enhance_is_max_over_lengths(rng):
    img = rng.normal(size=(16, 16))
    params = lines.LineDetectorParams(lengths=(3, 5, 9))
    out = lines.enhance(img, params)
    stack = np.stack([lines.line_strength(img, k) for k in params.lengths])
    np.testing.assert_array_equal(out, stack.max(axis=0))
    assert all((out >= s).all() for s in stack)


def test_bright_line_stands_out(rng):
    img = rng.normal(50, 5, size=(48, 48))
    img[:, 20:22] += 80
    out = lines.enhance(img)
    on = out[:, 20:22]
    off = np.delete(out, np.s_[16:26], axis=1)
    assert np.median(on) > np.median(off) + 20


@pytest.mark.parametrize("angle", lines.DEFAULT_ANGLES)
def test_orientation_recovered(angle):
    img = np.zeros((41, 41))
    for dr, dc in lines.line_offsets(41, angle):
        img[20 + dr, 20 + dc] = 100
    best = lines.best_orientation(img, 15)[20, 20]
    diff = abs(best - angle) % 180
    assert min(diff, 180 - diff) <= 15
    means = lines._line_means(img, 15, lines.DEFAULT_ANGLES)[:, 20, 20]
    assert means[lines.DEFAULT_ANGLES.index(angle)] == means.max()


@settings(max_examples=25, deadline=None)
@given(st.floats(0.1, 10), st.integers(0, 2**32 - 1))
def test_affine_response(scale, seed):
    img = np.random.default_rng(seed).uniform(0, 100, size=(12, 12))
    np.testing.assert_allclose(lines.enhance(scale * img), scale * lines.enhance(img), rtol=1e-9, atol=1e-9)


def test_shift_invariance_in_interior(rng):
    img = rng.uniform(0, 100, size=(40, 40))
    shifted = np.roll(img, (3, 5), axis=(0, 1))
    a = lines.enhance(img)
    b = lines.enhance(shifted)
    # 7 px = half the longest line; stay that far from every border and the wrap seam
    np.testing.assert_allclose(b[3 + 7 : 40 - 7, 5 + 7 : 40 - 7], a[7 : 40 - 10, 7 : 40 - 12], atol=1e-9)
