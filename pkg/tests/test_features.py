import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from glyphrec.errors import DimensionMismatch, EmptyImage
from glyphrec.features import (CONCAT_DIM, KINDS, FeatureKind, FeatureVector, extract_all,
                               extract_chain_histogram, extract_longest_run, extract_shadow,
                               extract_views, octant_index, octant_sides, run_sums,
                               sample_positions, square_hull)
from glyphrec.harness.synth import synth_glyphs
from glyphrec.imagecore import normalize, trace_chains

import oracles

# reference 6x6 region for the longest-run feature, row sum 12
RUN_GRID = np.array([
    [1, 0, 1, 1, 1, 1],
    [1, 0, 0, 1, 1, 0],
    [1, 0, 0, 1, 1, 0],
    [1, 0, 0, 0, 1, 0],
    [0, 1, 0, 0, 1, 0],
    [0, 0, 1, 1, 0, 0],
], dtype=bool)


@pytest.fixture(scope="module")
def glyphs():
    ds = synth_glyphs(10, 3, noise=0.01, seed=11)
    return [normalize(img) for img in ds.images]


def test_dimensions_and_kind_parsing():
    assert [k.dimension for k in KINDS] == [24, 200, 44, 100]
    assert CONCAT_DIM == 368
    assert FeatureKind.parse("Chain") is FeatureKind.CHAIN_HISTOGRAM
    assert FeatureKind.parse("longest-run") is FeatureKind.LONGEST_RUN
    with pytest.raises(ValueError):
        FeatureKind.parse("zernike")
    with pytest.raises(DimensionMismatch):
        FeatureVector(FeatureKind.SHADOW, np.zeros(5))


def test_ranges_on_glyphs(glyphs):
    for img in glyphs:
        f = extract_all(img)
        assert [len(f[k].values) for k in KINDS] == [24, 200, 44, 100]
        assert np.all((0 <= f[FeatureKind.SHADOW].values) & (f[FeatureKind.SHADOW].values <= 1))
        assert np.all((0 <= f[FeatureKind.VIEW_BASED].values) & (f[FeatureKind.VIEW_BASED].values <= 1))
        lr = f[FeatureKind.LONGEST_RUN].values
        assert np.all((0 <= lr) & (lr <= 1))
        ch = f[FeatureKind.CHAIN_HISTOGRAM].values
        assert np.all(ch >= 0) and np.array_equal(ch, np.round(ch))


def test_empty_inputs():
    empty = np.zeros((100, 100), bool)
    for fn in (extract_shadow, extract_views):
        with pytest.raises(EmptyImage):
            fn(empty)
    assert not extract_chain_histogram(empty).values.any()
    assert not extract_longest_run(empty).values.any()


# --- shadow ----------------------------------------------------------------

def test_octants_partition_box():
    box = (3, 12, 5, 20)
    rr, cc = np.mgrid[3:13, 5:21]
    octs = octant_index(rr.ravel(), cc.ravel(), box)
    counts = np.bincount(octs, minlength=8)
    assert counts.sum() == rr.size and (counts > 0).all()
    # the top-right corner pixel is in the north-east region
    assert octant_index(np.array([3]), np.array([20]), box)[0] in (0, 1)


def test_octant_sides_lengths():
    sides = octant_sides((0, 99, 0, 99))
    (m, k), (c, k2), (c2, m2) = sides[0]
    assert m == (50.0, 0.0) and k == k2 == (100.0, 0.0) and c == c2 == (50.0, 50.0)


def test_shadow_full_black_is_all_ones():
    f = extract_shadow(np.ones((100, 100), bool)).values
    assert np.array_equal(f, np.ones(24))
    assert np.allclose(oracles.shadow_projector(np.ones((100, 100), bool)), 1.0)


def test_shadow_one_octant_only():
    img = np.zeros((100, 100), bool)
    img[0, 0] = img[99, 99] = True  # corners fix the box
    base = extract_shadow(img).values
    img2 = img.copy()
    img2[5:20, 60:70] = True  # north-east, above the diagonal
    rr, cc = np.mgrid[5:20, 60:70]
    octs = set(octant_index(rr.ravel(), cc.ravel(), (0, 99, 0, 99)).tolist())
    diff = extract_shadow(img2).values - base
    touched = {i // 3 for i in np.flatnonzero(diff)}
    assert touched == octs == {0}


def test_shadow_octant_holding_all_pixels():
    img = np.zeros((100, 100), bool)
    img[:, :] = False
    # a triangle-shaped blob: all pixels of octant 0 plus nothing else
    rr, cc = np.mgrid[0:100, 0:100]
    octs = octant_index(rr.ravel(), cc.ravel(), (0, 99, 0, 99)).reshape(100, 100)
    img[octs == 0] = True
    # two corners keep the box full size; they land in octants 3 and 5
    img[99, 0] = img[99, 99] = True
    f = extract_shadow(img).values
    assert np.array_equal(f[0:3], np.ones(3))
    others = np.delete(np.arange(24), [0, 1, 2, 9, 10, 11, 15, 16, 17])
    assert not f[others].any()


def test_shadow_centre_pixel_adds_at_most_one_bin():
    img = np.zeros((100, 100), bool)
    img[0, 0] = img[0, 99] = img[99, 0] = img[99, 99] = True
    base = extract_shadow(img).values
    img[50, 50] = True
    diff = extract_shadow(img).values - base
    assert (diff >= 0).all()
    sides = [s for octant in octant_sides((0, 99, 0, 99)) for s in octant]
    for d, (p, q) in zip(diff, sides):
        length = float(np.hypot(q[0] - p[0], q[1] - p[1]))
        assert d <= 1.0 / length + 1e-12


def test_shadow_matches_pixel_projector(glyphs):
    rng = np.random.default_rng(1)
    for _ in range(4):
        h, w = rng.integers(8, 40, 2)
        img = rng.random((h, w)) < 0.2
        img[0, 0] = img[-1, -1] = True
        assert np.allclose(extract_shadow(img).values, oracles.shadow_projector(img))
    assert np.allclose(extract_shadow(glyphs[0]).values, oracles.shadow_projector(glyphs[0]))


# --- chain code histogram ---------------------------------------------------

def test_chain_line_inside_one_block():
    img = np.zeros((100, 100), bool)
    img[45, 42:52] = True  # block (2, 2)
    f = extract_chain_histogram(img).values.reshape(5, 5, 8)
    assert f[2, 2, 0] == 9 and f[2, 2, 4] == 9
    f[2, 2, 0] = f[2, 2, 4] = 0
    assert not f.any()


def test_chain_total_equals_chain_lengths(glyphs):
    for img in glyphs[:6]:
        total = sum(len(c) for c in trace_chains(img))
        assert extract_chain_histogram(img).values.sum() == total


def test_chain_block_attribution_by_start_pixel():
    img = np.zeros((100, 100), bool)
    img[10, 15:25] = True  # crosses from block (0,0) into (0,1)
    f = extract_chain_histogram(img).values.reshape(5, 5, 8)
    # east steps from cols 15..19 start in block 0; 20..23 in block 1
    assert f[0, 0, 0] == 5 and f[0, 1, 0] == 4
    assert f[0, 1, 4] == 5 and f[0, 0, 4] == 4


# --- views -------------------------------------------------------------------

def test_sample_positions():
    assert sample_positions(0, 100).tolist() == [0, 10, 20, 30, 40, 50, 59, 69, 79, 89, 99]
    assert sample_positions(5, 1).tolist() == [5] * 11
    assert sample_positions(0, 11).tolist() == list(range(11))


def test_views_solid_block_unthinned():
    f = extract_views(np.ones((100, 100), bool), thinned=False).values
    expected = np.concatenate([np.zeros(11), np.ones(11), np.zeros(11), np.ones(11)])
    assert np.array_equal(f, expected)


def test_views_hollow_rectangle_equals_block():
    img = np.zeros((100, 100), bool)
    img[0, :] = img[-1, :] = img[:, 0] = img[:, -1] = True
    solid = extract_views(np.ones((100, 100), bool), thinned=False).values
    assert np.array_equal(extract_views(img, thinned=False).values, solid)
    # the one-pixel outline survives thinning (corners aside), so the thinned
    # views agree too
    assert np.array_equal(extract_views(img).values, solid)


def test_views_single_pixel_all_zero():
    img = np.zeros((100, 100), bool)
    img[40, 60] = True
    assert not extract_views(img).values.any()


def test_views_missing_sample_column_gives_zero():
    img = np.zeros((100, 100), bool)
    img[10:90, 0] = True
    img[10:90, 99] = True
    f = extract_views(img, thinned=False).values
    top, bottom = f[:11], f[11:22]
    assert top[0] == 0 and bottom[0] == 1 and top[-1] == 0 and bottom[-1] == 1
    assert not top[1:-1].any() and not bottom[1:-1].any()


def test_views_thinning_applied(glyphs):
    img = glyphs[2]
    from glyphrec.imagecore import thin
    assert np.array_equal(extract_views(img).values,
                          extract_views(thin(img), thinned=False).values)


# --- longest run ------------------------------------------------------------------

def test_reference_grid_row_sum():
    assert run_sums(RUN_GRID)[0] == 12
    assert run_sums(RUN_GRID) == oracles.longest_runs(RUN_GRID)


def test_run_sums_match_brute_force():
    rng = np.random.default_rng(8)
    for _ in range(200):
        h, w = rng.integers(1, 11, 2)
        g = rng.random((h, w)) < rng.uniform(0.2, 0.9)
        assert run_sums(g) == oracles.longest_runs(g)


@settings(max_examples=60, deadline=None)
@given(arrays(bool, st.tuples(st.integers(1, 10), st.integers(1, 10))))
def test_run_sums_property(g):
    assert run_sums(g) == oracles.longest_runs(g)


def test_longest_run_full_and_empty():
    assert np.array_equal(extract_longest_run(np.ones((100, 100), bool)).values, np.ones(100))
    raw = extract_longest_run(np.ones((100, 100), bool), normalized=False).values.reshape(25, 4)
    assert np.all(raw[:, 0] == 400) and np.all(raw[:, 1] == 400)
    assert not extract_longest_run(np.zeros((100, 100), bool)).values.any()


def test_square_hull():
    assert square_hull((10, 19, 0, 4), (100, 100)) == (10, 20, 0, 10)
    assert square_hull((0, 99, 40, 59), (100, 100)) == (0, 100, 0, 100)
    # clamped at the border
    assert square_hull((95, 99, 0, 29), (100, 100)) == (70, 100, 0, 30)


def test_longest_run_regions_match_brute_force(glyphs):
    img = glyphs[4]
    raw = extract_longest_run(img, normalized=False).values.reshape(5, 5, 4)
    edges = [(i * 100) // 5 for i in range(6)]
    for i in range(5):
        for j in range(5):
            region = img[edges[i]:edges[i + 1], edges[j]:edges[j + 1]]
            assert tuple(raw[i, j].astype(int)) == oracles.longest_runs(region)


# --- invariance --------------------------------------------------------------------

def test_translation_invariance(glyphs):
    base = glyphs[7]
    small = base[::2, ::2]
    ref = extract_all(normalize(np.pad(small, ((5, 40), (3, 30)))))
    for dr, dc in ((0, 0), (20, 7), (33, 25)):
        frame = np.zeros((130, 130), bool)
        frame[dr:dr + 50, dc:dc + 50] = small
        got = extract_all(normalize(frame))
        for k in KINDS:
            assert np.array_equal(got[k].values, ref[k].values)
