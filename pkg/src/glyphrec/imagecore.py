"""Binary-image substrate: PGM I/O, Otsu binarization, size normalization,
Zhang-Suen thinning and Freeman chain-code contour tracing.

Images are plain numpy arrays. A gray image is a 2-D ``uint8`` array, a
binary image is a 2-D ``bool`` array where ``True`` marks an object (ink)
pixel. Coordinates are ``(row, col)`` with row 0 at the top.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from typing import List, Set, Tuple

import numpy as np

from .errors import EmptyImage, FormatError

SIZE = 100

# Freeman directions as (d_row, d_col); code 0 = east, counter-clockwise.
DIRECTIONS = (
    (0, 1),    # 0 E
    (-1, 1),   # 1 NE
    (-1, 0),   # 2 N
    (-1, -1),  # 3 NW
    (0, -1),   # 4 W
    (1, -1),   # 5 SW
    (1, 0),    # 6 S
    (1, 1),    # 7 SE
)
CODE_OF_STEP = {step: code for code, step in enumerate(DIRECTIONS)}


@dataclass(frozen=True)
class ContourChain:
    """A contour walk: its start pixel and the Freeman codes of each step."""

    start: Tuple[int, int]
    codes: Tuple[int, ...]

    def pixels(self) -> List[Tuple[int, int]]:
        """Replay the codes from ``start`` and return every visited pixel."""
        r, c = self.start
        out = [(r, c)]
        for code in self.codes:
            dr, dc = DIRECTIONS[code]
            r, c = r + dr, c + dc
            out.append((r, c))
        return out

    def __len__(self):
        return len(self.codes)


# --------------------------------------------------------------------------
# PGM I/O
# --------------------------------------------------------------------------

def _pgm_tokens(data: bytes, count: int, pos: int):
    tokens = []
    n = len(data)
    while len(tokens) < count:
        while pos < n and data[pos:pos + 1].isspace():
            pos += 1
        if pos < n and data[pos:pos + 1] == b"#":
            while pos < n and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise FormatError("truncated PGM header")
        tokens.append(data[start:pos])
    return tokens, pos


def parse_pgm(data: bytes) -> np.ndarray:
    """Decode an 8-bit P2 (ASCII) or P5 (binary) PGM byte string."""
    magic = data[:2]
    if magic not in (b"P2", b"P5"):
        raise FormatError("not a P2/P5 PGM file")
    (w, h, maxval), pos = _pgm_tokens(data, 3, 2)
    try:
        width, height, maxval = int(w), int(h), int(maxval)
    except ValueError as exc:
        raise FormatError("non-numeric PGM header field") from exc
    if width < 1 or height < 1:
        raise FormatError("PGM dimensions must be positive")
    if not 0 < maxval <= 255:
        raise FormatError("only 8-bit PGM files are supported")
    npix = width * height
    if magic == b"P5":
        # exactly one whitespace byte separates the header from the raster
        raster = data[pos + 1:pos + 1 + npix]
        if len(raster) != npix:
            raise FormatError("truncated PGM raster")
        pixels = np.frombuffer(raster, dtype=np.uint8).copy()
    else:
        body = data[pos:].split()
        if len(body) < npix:
            raise FormatError("truncated PGM raster")
        try:
            pixels = np.array([int(t) for t in body[:npix]], dtype=np.int64)
        except ValueError as exc:
            raise FormatError("non-numeric PGM sample") from exc
        if pixels.min() < 0 or pixels.max() > maxval:
            raise FormatError("PGM sample out of range")
        pixels = pixels.astype(np.uint8)
    return pixels.reshape(height, width)


def read_pgm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        return parse_pgm(fh.read())


def encode_pgm(img: np.ndarray, ascii: bool = False) -> bytes:
    img = np.asarray(img)
    if img.dtype == bool:
        img = np.where(img, 0, 255)
    img = np.asarray(img, dtype=np.uint8)
    h, w = img.shape
    if ascii:
        rows = "\n".join(" ".join(str(int(v)) for v in row) for row in img)
        return f"P2\n{w} {h}\n255\n{rows}\n".encode("ascii")
    return f"P5\n{w} {h}\n255\n".encode("ascii") + img.tobytes()


def write_pgm(path, img: np.ndarray, ascii: bool = False) -> None:
    """Write ``img`` as PGM. Binary images are stored as black ink on white."""
    tmp = f"{path}.tmp{os.getpid()}"
    with open(tmp, "wb") as fh:
        fh.write(encode_pgm(img, ascii=ascii))
    os.replace(tmp, path)


def read_image(path) -> np.ndarray:
    """Read a gray image from PGM, or from any format Pillow understands."""
    path = os.fspath(path)
    if path.lower().endswith((".pgm", ".pnm")):
        return read_pgm(path)
    from PIL import Image

    with Image.open(path) as im:
        return np.asarray(im.convert("L"), dtype=np.uint8).copy()


# --------------------------------------------------------------------------
# binarization and normalization
# --------------------------------------------------------------------------

def otsu_threshold(img: np.ndarray) -> int:
    """Return the threshold ``t`` in 1..255 maximizing between-class variance
    of the split ``{v < t}`` / ``{v >= t}``. Ties go to the smallest ``t``."""
    hist = np.bincount(np.asarray(img, dtype=np.uint8).ravel(), minlength=256).astype(np.float64)
    total = hist.sum()
    levels = np.arange(256, dtype=np.float64)
    # w0[t], m0[t]: weight and first moment of levels < t, for t = 0..256
    w0 = np.concatenate(([0.0], np.cumsum(hist)))
    m0 = np.concatenate(([0.0], np.cumsum(hist * levels)))
    t = np.arange(1, 256)
    wb, mb = w0[t], m0[t]
    wf, mf = total - wb, m0[256] - mb
    with np.errstate(divide="ignore", invalid="ignore"):
        between = wb * wf * (mb / wb - mf / wf) ** 2
    between = np.where((wb > 0) & (wf > 0), between, 0.0)
    return int(t[np.argmax(between)])


def binarize(img: np.ndarray) -> np.ndarray:
    """Otsu binarization: a pixel is object iff its intensity is below the
    threshold. A constant image has no split, so the threshold falls to 1:
    an all-black image becomes all object, any other constant all background."""
    img = np.asarray(img)
    if img.ndim != 2 or img.size == 0:
        raise ValueError("expected a non-empty 2-D gray image")
    return img < otsu_threshold(img)


def bounding_box(img: np.ndarray):
    """Tight ``(r0, r1, c0, c1)`` box (inclusive) of object pixels, or None."""
    rows = np.flatnonzero(img.any(axis=1))
    if rows.size == 0:
        return None
    cols = np.flatnonzero(img.any(axis=0))
    return int(rows[0]), int(rows[-1]), int(cols[0]), int(cols[-1])


def _resample_axis(arr: np.ndarray, size: int, axis: int) -> np.ndarray:
    n = arr.shape[axis]
    if n <= size:
        # nearest neighbour on pixel centres
        idx = ((2 * np.arange(size) + 1) * n) // (2 * size)
        return np.take(arr, idx, axis=axis)
    # shrinking: OR over each source cell so thin strokes survive
    starts = (np.arange(size) * n) // size
    return np.logical_or.reduceat(arr, starts, axis=axis)


def normalize(img: np.ndarray, size: int = SIZE) -> np.ndarray:
    """Crop to the tight bounding box and rescale it to fill ``size`` x ``size``.

    Enlargement is nearest neighbour; reduction ORs each source cell, which
    keeps the result strictly binary and makes the operation idempotent.
    """
    img = np.asarray(img, dtype=bool)
    box = bounding_box(img)
    if box is None:
        raise EmptyImage("cannot normalize an image without object pixels")
    r0, r1, c0, c1 = box
    crop = img[r0:r1 + 1, c0:c1 + 1]
    out = _resample_axis(crop, size, 0)
    return _resample_axis(out, size, 1)


def despeckle(img: np.ndarray) -> np.ndarray:
    """Drop object pixels that have no object pixel among their 8 neighbours."""
    img = np.asarray(img, dtype=bool)
    p = np.pad(img, 1)
    h, w = img.shape
    count = sum(p[1 + dr:1 + dr + h, 1 + dc:1 + dc + w].astype(np.uint8)
                for dr, dc in DIRECTIONS)
    return img & (count > 0)


def preprocess(gray: np.ndarray, clean: bool = False) -> np.ndarray:
    """Gray image -> normalized 100x100 binary glyph."""
    b = binarize(gray)
    if clean:
        cleaned = despeckle(b)
        if cleaned.any():
            b = cleaned
    return normalize(b)


# --------------------------------------------------------------------------
# thinning
# --------------------------------------------------------------------------

def _neighbours(p: np.ndarray):
    """The 8 shifted views P2..P9 (N, NE, E, SE, S, SW, W, NW) of padded ``p``."""
    h, w = p.shape[0] - 2, p.shape[1] - 2
    offs = ((-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1))
    return [p[1 + dr:1 + dr + h, 1 + dc:1 + dc + w] for dr, dc in offs]


def _zs_candidates(img: np.ndarray, first: bool) -> np.ndarray:
    p = np.pad(img, 1)
    n = [v.astype(np.uint8) for v in _neighbours(p)]
    p2, p3, p4, p5, p6, p7, p8, p9 = n
    b = sum(n)
    seq = n + [n[0]]
    a = sum(((seq[i] == 0) & (seq[i + 1] == 1)).astype(np.uint8) for i in range(8))
    if first:
        c3 = (p2 & p4 & p6) == 0
        c4 = (p4 & p6 & p8) == 0
    else:
        c3 = (p2 & p4 & p8) == 0
        c4 = (p2 & p6 & p8) == 0
    return img & (b >= 2) & (b <= 6) & (a == 1) & c3 & c4


def thin(img: np.ndarray) -> np.ndarray:
    """Zhang-Suen thinning; pixels outside the image count as background."""
    out = np.array(img, dtype=bool, copy=True)
    while True:
        changed = False
        for first in (True, False):
            kill = _zs_candidates(out, first)
            if kill.any():
                out &= ~kill
                changed = True
        if not changed:
            return out


# --------------------------------------------------------------------------
# contours
# --------------------------------------------------------------------------

def contour_mask(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img, dtype=bool)
    p = np.pad(img, 1)
    h, w = img.shape
    all4 = p[:-2, 1:-1] & p[2:, 1:-1] & p[1:-1, :-2] & p[1:-1, 2:]
    return img & ~all4[:h, :w]


def contour_points(img: np.ndarray) -> Set[Tuple[int, int]]:
    """Object pixels with at least one background 4-neighbour."""
    rr, cc = np.nonzero(contour_mask(img))
    return set(zip(rr.tolist(), cc.tolist()))


def _trace_one(start, pts: Set[Tuple[int, int]]) -> List[int]:
    # Moore-neighbour walk over ``pts``: from the pixel we arrived from, scan
    # clockwise (decreasing code) and take the first member. Stops when the
    # walk is back at ``start`` about to repeat its first move.
    codes: List[int] = []
    r, c = start
    prev = 0  # as if we arrived moving east: the scan starts just past west
    first = None
    seen = set()
    while True:
        back = (prev + 4) % 8
        move = None
        for k in range(1, 9):
            code = (back - k) % 8
            dr, dc = DIRECTIONS[code]
            if (r + dr, c + dc) in pts:
                move = code
                break
        if move is None:
            return codes
        if (r, c) == start and codes and move == first:
            return codes
        state = (r, c, move)
        if state in seen:
            return codes
        seen.add(state)
        if first is None:
            first = move
        codes.append(move)
        dr, dc = DIRECTIONS[move]
        r, c = r + dr, c + dc
        prev = move


def trace_chains(img: np.ndarray) -> List[ContourChain]:
    """Trace every contour clockwise into Freeman chains.

    Each chain starts at the raster-first contour pixel not yet claimed by an
    earlier chain and walks only over unclaimed contour pixels, so the chains
    partition the contour set. Thin strokes are walked out and back.
    """
    mask = contour_mask(img)
    remaining = contour_points(img)
    order = list(zip(*np.nonzero(mask)))  # raster order
    chains: List[ContourChain] = []
    for rc in order:
        rc = (int(rc[0]), int(rc[1]))
        if rc not in remaining:
            continue
        codes = _trace_one(rc, remaining)
        chain = ContourChain(rc, tuple(codes))
        remaining.difference_update(chain.pixels())
        chains.append(chain)
    return chains
