"""Structural feature extractors over a normalized binary glyph.

Four kinds are produced: shadow (24), chain-code histogram (200),
view-based (44) and longest-run (100). Every extractor anchors on the
glyph's tight bounding box, so the values do not depend on where the glyph
sat in the original frame.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np

from .errors import DimensionMismatch, EmptyImage
from .imagecore import bounding_box, thin, trace_chains


class FeatureKind(enum.Enum):
    SHADOW = "shadow"
    CHAIN_HISTOGRAM = "chain"
    VIEW_BASED = "view"
    LONGEST_RUN = "longest_run"

    @property
    def dimension(self) -> int:
        return _DIMS[self]

    @classmethod
    def parse(cls, text: str) -> "FeatureKind":
        text = text.strip().lower().replace("-", "_")
        for kind in cls:
            if text in (kind.value, kind.name.lower()):
                return kind
        raise ValueError(f"unknown feature kind {text!r}")


_DIMS = {
    FeatureKind.SHADOW: 24,
    FeatureKind.CHAIN_HISTOGRAM: 200,
    FeatureKind.VIEW_BASED: 44,
    FeatureKind.LONGEST_RUN: 100,
}

# canonical order used for concatenation and for the model bundle
KINDS = (FeatureKind.SHADOW, FeatureKind.CHAIN_HISTOGRAM,
         FeatureKind.VIEW_BASED, FeatureKind.LONGEST_RUN)
CONCAT_DIM = sum(k.dimension for k in KINDS)


@dataclass(frozen=True)
class FeatureVector:
    kind: FeatureKind
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != (self.kind.dimension,):
            raise DimensionMismatch(
                f"{self.kind.value} vector needs {self.kind.dimension} values, got {values.shape}")
        object.__setattr__(self, "values", values)

    def __len__(self):
        return self.kind.dimension


def _require_box(img):
    box = bounding_box(img)
    if box is None:
        raise EmptyImage("feature extraction needs at least one object pixel")
    return box


# --------------------------------------------------------------------------
# shadow
# --------------------------------------------------------------------------

def octant_index(rows: np.ndarray, cols: np.ndarray, box) -> np.ndarray:
    """Octant (0..7) of each pixel centre, clockwise from the north-east upper
    triangle. Boundaries are half-open: each pixel lands in exactly one octant
    and the exact centre goes to octant 0. Integer arithmetic only."""
    r0, r1, c0, c1 = box
    h, w = r1 - r0 + 1, c1 - c0 + 1
    # twice the offset from the box centre, scaled so the diagonals are |a| == |b|
    a = (2 * np.asarray(cols) + 1 - 2 * c0 - w) * h   # east
    b = -(2 * np.asarray(rows) + 1 - 2 * r0 - h) * w  # north
    conds = [
        (a >= 0) & (b > a),
        (b > 0) & (a >= b),
        (b <= 0) & (a > -b),
        (b < 0) & (a > 0) & (a <= -b),
        (a <= 0) & (b < a),
        (a < 0) & (b >= a) & (b < 0),
        (a < 0) & (b >= 0) & (b < -a),
        (a < 0) & (b > 0) & (b >= -a),
    ]
    return np.select(conds, np.arange(8), default=0)


def octant_sides(box):
    """For each octant, its three sides (half-edge, half-diagonal, half-axis)
    as ``(start, end)`` points in continuous ``(x, y)`` image coordinates."""
    r0, r1, c0, c1 = box
    x0, x1, y0, y1 = float(c0), float(c1 + 1), float(r0), float(r1 + 1)
    cx, cy = (x0 + x1) / 2, (y0 + y1) / 2
    centre = (cx, cy)
    top, right, bottom, left = (cx, y0), (x1, cy), (cx, y1), (x0, cy)
    ne, se, sw, nw = (x1, y0), (x1, y1), (x0, y1), (x0, y0)
    mids_corners = [(top, ne), (right, ne), (right, se), (bottom, se),
                    (bottom, sw), (left, sw), (left, nw), (top, nw)]
    return [((mid, corner), (centre, corner), (centre, mid)) for mid, corner in mids_corners]


def _side_bins(xs, ys, start, end):
    (px, py), (qx, qy) = start, end
    length = float(np.hypot(qx - px, qy - py))
    nbins = max(1, int(np.ceil(length - 1e-9)))
    if length == 0.0:
        return np.zeros(xs.shape, dtype=np.int64), nbins
    t = ((xs - px) * (qx - px) + (ys - py) * (qy - py)) / length
    return np.clip(np.floor(t).astype(np.int64), 0, nbins - 1), nbins


def extract_shadow(img: np.ndarray) -> FeatureVector:
    """Shadow features.

    The bounding box is cut into 8 triangles by its diagonals and its centre
    lines. Every object pixel of a triangle casts a perpendicular shadow onto
    each of the triangle's three sides; a side is measured in unit-length
    bins, and the feature is the fraction of the side's bins covered by
    shadows. A side's bins are those reachable from any pixel of the
    triangle, so a full triangle shades exactly 1.0.

    Order: octant 0..7 (clockwise from north-east upper), then sides
    half-edge, half-diagonal, half-axis.
    """
    img = np.asarray(img, dtype=bool)
    box = _require_box(img)
    r0, r1, c0, c1 = box
    rr, cc = np.mgrid[r0:r1 + 1, c0:c1 + 1]
    rr, cc = rr.ravel(), cc.ravel()
    obj = img[rr, cc]
    octs = octant_index(rr, cc, box)
    xs, ys = cc + 0.5, rr + 0.5
    out = np.zeros(24)
    for k, sides in enumerate(octant_sides(box)):
        in_oct = octs == k
        if not in_oct.any():
            continue
        for s, (start, end) in enumerate(sides):
            bins, nbins = _side_bins(xs[in_oct], ys[in_oct], start, end)
            reach = np.bincount(bins, minlength=nbins) > 0
            shade = np.bincount(bins[obj[in_oct]], minlength=nbins) > 0
            out[3 * k + s] = shade.sum() / reach.sum()
    return FeatureVector(FeatureKind.SHADOW, out)


# --------------------------------------------------------------------------
# chain-code histogram
# --------------------------------------------------------------------------

def extract_chain_histogram(img: np.ndarray, blocks: int = 5) -> FeatureVector:
    """Per-block counts of Freeman codes, 5x5 blocks in raster order x codes 0..7.

    A step is counted in the block holding the pixel it starts from.
    """
    img = np.asarray(img, dtype=bool)
    h, w = img.shape
    hist = np.zeros((blocks, blocks, 8))
    for chain in trace_chains(img):
        pix = chain.pixels()
        for (r, c), code in zip(pix, chain.codes):
            hist[r * blocks // h, c * blocks // w, code] += 1
    return FeatureVector(FeatureKind.CHAIN_HISTOGRAM, hist.ravel())


# --------------------------------------------------------------------------
# view-based
# --------------------------------------------------------------------------

def sample_positions(start: int, count: int, points: int = 11) -> np.ndarray:
    """``points`` indices spread over ``count`` cells, endpoints included,
    rounded half up."""
    i = np.arange(points)
    return start + (2 * i * (count - 1) + points - 1) // (2 * (points - 1))


def extract_views(img: np.ndarray, thinned: bool = True) -> FeatureVector:
    """Top, bottom, left and right silhouettes sampled at 11 points each.

    The glyph is thinned first unless ``thinned`` is False. Each coordinate is
    its offset from the box origin over the box extent; a sample line with no
    object pixel, and any coordinate of a zero-extent box, gives 0.
    """
    img = np.asarray(img, dtype=bool)
    _require_box(img)
    if thinned:
        img = thin(img)
    r0, r1, c0, c1 = bounding_box(img)
    hext, wext = r1 - r0, c1 - c0
    cols = sample_positions(c0, wext + 1)
    rows = sample_positions(r0, hext + 1)

    def extremes(lines, offset, extent):
        lo, hi = np.zeros(len(lines)), np.zeros(len(lines))
        if extent == 0:
            return lo, hi
        for j, line in enumerate(lines):
            idx = np.flatnonzero(line)
            if idx.size:
                lo[j] = (idx[0] - offset) / extent
                hi[j] = (idx[-1] - offset) / extent
        return lo, hi

    top, bottom = extremes([img[:, c] for c in cols], r0, hext)
    left, right = extremes([img[r, :] for r in rows], c0, wext)
    return FeatureVector(FeatureKind.VIEW_BASED, np.concatenate([top, bottom, left, right]))


# --------------------------------------------------------------------------
# longest run
# --------------------------------------------------------------------------

def run_sums(region: np.ndarray) -> Tuple[int, int, int, int]:
    """Sum of longest object runs over all rows, columns, diagonals and
    anti-diagonals of ``region`` (raw, unnormalized)."""
    x = np.asarray(region, dtype=bool).astype(np.int64)
    h, w = x.shape
    if h == 0 or w == 0:
        return 0, 0, 0, 0

    def along_rows(a):
        run = np.zeros(a.shape[0], dtype=np.int64)
        best = run.copy()
        for c in range(a.shape[1]):
            run = (run + 1) * a[:, c]
            np.maximum(best, run, out=best)
        return int(best.sum())

    def along_diagonals(a, anti):
        hh, ww = a.shape
        best = np.zeros(hh + ww - 1, dtype=np.int64)
        prev = np.zeros(ww, dtype=np.int64)
        cols = np.arange(ww)
        for r in range(hh):
            if anti:
                shifted = np.concatenate((prev[1:], [0]))
                key = cols + r
            else:
                shifted = np.concatenate(([0], prev[:-1]))
                key = cols - r + hh - 1
            prev = (shifted + 1) * a[r]
            np.maximum.at(best, key, prev)
        return int(best.sum())

    return (along_rows(x), along_rows(x.T),
            along_diagonals(x, anti=False), along_diagonals(x, anti=True))


def square_hull(box, shape):
    """Smallest square around the box, centred on it and kept inside the image."""
    r0, r1, c0, c1 = box
    side = max(r1 - r0 + 1, c1 - c0 + 1)

    def span(lo, hi, n):
        start = lo - (side - (hi - lo + 1)) // 2
        start = max(0, min(start, n - side))
        return start, min(n, start + side)

    return span(r0, r1, shape[0]) + span(c0, c1, shape[1])


def extract_longest_run(img: np.ndarray, normalized: bool = True, grid: int = 5) -> FeatureVector:
    """Longest-run features over a 5x5 partition of the bounding square.

    Per region: (row, column, diagonal, anti-diagonal) sums of longest runs,
    divided by the region area unless ``normalized`` is False.
    """
    img = np.asarray(img, dtype=bool)
    out = np.zeros((grid, grid, 4))
    box = bounding_box(img)
    if box is not None:
        ra, rb, ca, cb = square_hull(box, img.shape)
        square = img[ra:rb, ca:cb]
        h, w = square.shape
        re = [(i * h) // grid for i in range(grid + 1)]
        ce = [(j * w) // grid for j in range(grid + 1)]
        for i in range(grid):
            for j in range(grid):
                region = square[re[i]:re[i + 1], ce[j]:ce[j + 1]]
                sums = np.array(run_sums(region), dtype=np.float64)
                if normalized and region.size:
                    sums /= region.size
                out[i, j] = sums
    return FeatureVector(FeatureKind.LONGEST_RUN, out.ravel())


EXTRACTORS = {
    FeatureKind.SHADOW: extract_shadow,
    FeatureKind.CHAIN_HISTOGRAM: extract_chain_histogram,
    FeatureKind.VIEW_BASED: extract_views,
    FeatureKind.LONGEST_RUN: extract_longest_run,
}


def extract(img: np.ndarray, kind: FeatureKind) -> FeatureVector:
    return EXTRACTORS[kind](img)


def extract_all(img: np.ndarray) -> Dict[FeatureKind, FeatureVector]:
    return {kind: EXTRACTORS[kind](img) for kind in KINDS}
