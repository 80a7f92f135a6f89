import csv

import numpy as np
import pytest
from scipy import ndimage

from rootseg import synth
from rootseg.errors import InvalidParams


def test_noiseless_render_matches_strokes():
    p = synth.SynthParams(noise_sigma=0, n_laterals=0, leaf_radius=0)
    img, gt = synth.generate(p, seed=1)
    bright = img == p.root_intensity
    assert set(np.unique(img)) == {p.background_intensity, p.root_intensity}
    assert (gt <= bright).all()
    stroke = ndimage.binary_dilation(gt, structure=np.ones((p.stroke_width,) * 2, bool))
    np.testing.assert_array_equal(bright, stroke)


def test_deterministic():
    a = synth.generate(synth.SynthParams(), seed=5)
    b = synth.generate(synth.SynthParams(), seed=5)
    np.testing.assert_array_equal(a[0], b[0])
    np.testing.assert_array_equal(a[1], b[1])
    assert not np.array_equal(a[0], synth.generate(synth.SynthParams(), seed=6)[0])


@pytest.mark.parametrize("seed", range(10))
def test_three_laterals_give_three_junctions(seed):
    _, gt = synth.generate(synth.SynthParams(noise_sigma=0, n_laterals=3), seed)
    assert synth.junction_clusters(gt) == 3
    # one tree: a single 8-connected component
    assert ndimage.label(gt, structure=np.ones((3, 3)))[1] == 1


@pytest.mark.parametrize("seed", range(5))
def test_ground_truth_properties(seed):
    p = synth.SynthParams(leaf_radius=10)
    img, gt = synth.generate(p, seed)
    assert img.min() >= 0 and img.max() <= 255
    clean, _ = synth.generate(synth.SynthParams(leaf_radius=10, noise_sigma=0), seed)
    assert (clean[gt] == p.root_intensity).all()
    assert synth.junction_clusters(gt) == 3


def test_leaves_are_bright_but_not_ground_truth():
    p = synth.SynthParams(noise_sigma=0, leaf_radius=12)
    img, gt = synth.generate(p, seed=0)
    blobs = synth._leaves(p.height, p.width, (synth.MARGIN + 2.0, (p.width - 1) / 2), 12)
    assert (img[blobs] == p.root_intensity).all()
    assert blobs.sum() > 200


@pytest.mark.parametrize(
    "kwargs",
    [dict(root_intensity=50, background_intensity=60), dict(noise_sigma=-1), dict(lateral_angle_range=(0, 40)), dict(width=8)],
)
def test_invalid_params(kwargs):
    with pytest.raises(InvalidParams):
        synth.SynthParams(**kwargs)


def test_suite_counts_and_determinism(tmp_path):
    m0 = synth.generate_suite(0, None, 3, tmp_path / "empty")
    assert list(csv.DictReader(open(m0))) == []
    assert sorted(p.name for p in (tmp_path / "empty").iterdir()) == ["manifest.csv"]

    params = synth.SynthParams(width=64, height=64)
    m1 = synth.generate_suite(3, params, 9, tmp_path / "a")
    m2 = synth.generate_suite(3, params, 9, tmp_path / "b")
    rows = list(csv.DictReader(open(m1)))
    assert len(rows) == 3
    assert len(list((tmp_path / "a").glob("synth_*_gt.png"))) == 3
    assert len(list((tmp_path / "a").glob("synth_???.png"))) == 3
    for f in (tmp_path / "a").iterdir():
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()
