import numpy as np
import pytest

from glyphrec import svm
from glyphrec.errors import NoSamples
from glyphrec.features import KINDS, extract_all
from glyphrec.harness.dataset import ingest
from glyphrec.harness.scaling import ScalerModel
from glyphrec.harness.synth import class_templates, synth_glyphs, write_dataset
from glyphrec.imagecore import normalize, read_pgm


def test_deterministic_and_seed_dependent():
    a = synth_glyphs(3, 2, noise=0.0, seed=4)
    b = synth_glyphs(3, 2, noise=0.0, seed=4)
    c = synth_glyphs(3, 2, noise=0.0, seed=5)
    assert all(np.array_equal(x, y) for x, y in zip(a.images, b.images))
    assert not all(np.array_equal(x, y) for x, y in zip(a.images, c.images))
    assert a.labels.tolist() == [0, 0, 1, 1, 2, 2]
    assert a.images[0].shape == (100, 100) and a.images[0].dtype == bool


def test_sample_depends_only_on_seed_class_index():
    small = synth_glyphs(2, 2, noise=0.03, seed=1)
    large = synth_glyphs(4, 5, noise=0.03, seed=1)
    assert np.array_equal(small.images[3], large.images[6])  # class 1, sample 1


def test_templates_are_distinct():
    t = class_templates(49)
    assert len(t) == 49 and len(set(t)) == 49
    assert not set(t[0]) & set(t[1])


def test_noise_flips_roughly_the_rate():
    clean = synth_glyphs(1, 1, noise=0.0, seed=2).images[0]
    noisy = synth_glyphs(1, 1, noise=0.05, seed=2).images[0]
    # same rng stream up to the flip step, so the strokes coincide
    rate = np.mean(clean ^ noisy)
    assert 0.03 < rate < 0.07


def test_empty_dataset_rejected_downstream(tmp_path):
    ds = synth_glyphs(3, 0)
    assert len(ds) == 0
    with pytest.raises(NoSamples):
        ds.manifest()


def test_argument_checks():
    with pytest.raises(ValueError):
        synth_glyphs(50, 1)
    with pytest.raises(ValueError):
        synth_glyphs(2, 1, noise=1.0)


def test_written_dataset_ingests(tmp_path):
    ds = synth_glyphs(2, 3, noise=0.01, seed=0)
    path = write_dataset(ds, tmp_path)
    man = ingest(path)
    assert len(man) == 6 and man.entries[0].source == "synthetic"
    img = read_pgm(man.resolve(man.entries[4]))
    assert np.array_equal(img == 0, ds.images[4])


def test_two_distinct_classes_linearly_separable():
    ds = synth_glyphs(2, 15, noise=0.0, seed=0)
    feats = [extract_all(normalize(img)) for img in ds.images]
    for k in KINDS:
        x = np.array([f[k].values for f in feats])
        x = ScalerModel.fit(x).transform(x)
        m = svm.train_multiclass(x, ds.labels, "ovr", svm.Kernel.linear(), c=100.0)
        assert svm.accuracy(m, x, ds.labels) == 1.0, k
