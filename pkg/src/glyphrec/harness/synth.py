"""Seeded stroke-template glyphs standing in for scanned handwriting.

Every class is a fixed composition of three stroke primitives (lines and
arcs). Each sample perturbs the stroke control points, applies a random
affine map within +-10%, renders with a random pen width and finally flips
pixels independently with probability ``noise``.
"""
from __future__ import annotations

import math
from functools import lru_cache
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path
from typing import List, Tuple

import numpy as np
from scipy import ndimage

from ..imagecore import write_pgm
from .dataset import N_CLASSES, DatasetManifest, ManifestEntry, write_manifest

SIZE = 100
TEMPLATE_SEED = 20_240_611


def _line(x0, y0, x1, y1):
    return ("line", (x0, y0, x1, y1))


def _arc(cx, cy, r, a0, a1):
    return ("arc", (cx, cy, r, a0, a1))


# unit-square coordinates, x to the right, y down; arc angles in degrees,
# measured clockwise on screen from the +x axis
PRIMITIVES = [
    _line(0.05, 0.12, 0.95, 0.12),   # head bar
    _line(0.50, 0.12, 0.50, 0.92),   # centre stem
    _line(0.82, 0.12, 0.82, 0.92),   # right stem
    _line(0.18, 0.35, 0.18, 0.92),   # left stem
    _line(0.18, 0.55, 0.82, 0.55),   # middle bar
    _line(0.18, 0.92, 0.82, 0.92),   # foot bar
    _line(0.18, 0.30, 0.82, 0.92),   # diagonal
    _line(0.82, 0.30, 0.18, 0.92),   # anti-diagonal
    _arc(0.50, 0.55, 0.30, 90, 270),   # left bowl
    _arc(0.50, 0.55, 0.30, -90, 90),   # right bowl
    _arc(0.50, 0.45, 0.28, 0, 180),    # lower cup
    _arc(0.50, 0.80, 0.25, 180, 360),  # upper cap
    _arc(0.32, 0.42, 0.14, 0, 360),    # left loop
    _arc(0.68, 0.72, 0.16, 0, 360),    # right loop
    _arc(0.30, 0.75, 0.15, -90, 180),  # hook
    _line(0.30, 0.12, 0.10, 0.40),   # left tick
    _line(0.60, 0.30, 0.95, 0.45),   # right spur
    _arc(0.75, 0.30, 0.15, 90, 330),   # top curl
]


@lru_cache(maxsize=None)
def _all_templates() -> Tuple[Tuple[int, ...], ...]:
    rng = np.random.default_rng(TEMPLATE_SEED)
    combos = list(combinations(range(len(PRIMITIVES)), 3))
    combos = [combos[i] for i in rng.permutation(len(combos))]
    chosen: List[Tuple[int, ...]] = []
    for limit in (1, 2):
        for combo in combos:
            if len(chosen) == N_CLASSES:
                return tuple(chosen)
            # the second class must be disjoint from the first
            lim = 0 if len(chosen) == 1 else limit
            if combo not in chosen and all(len(set(combo) & set(c)) <= lim for c in chosen):
                chosen.append(combo)
    return tuple(chosen)


def class_templates(n: int = N_CLASSES) -> List[Tuple[int, ...]]:
    """Primitive indices per class. Classes 0 and 1 share no primitive and
    the early classes overlap pairwise in at most one primitive."""
    return list(_all_templates()[:n])


def _sample_primitive(prim, rng, wobble):
    kind, p = prim
    if kind == "line":
        x0, y0, x1, y1 = np.array(p) + rng.uniform(-wobble, wobble, 4)
        t = np.linspace(0.0, 1.0, 200)
        return np.stack([x0 + (x1 - x0) * t, y0 + (y1 - y0) * t], axis=1)
    cx, cy, r, a0, a1 = p
    cx, cy = cx + rng.uniform(-wobble, wobble), cy + rng.uniform(-wobble, wobble)
    r = r * (1 + rng.uniform(-2 * wobble, 2 * wobble))
    ang = np.radians(np.linspace(a0, a1, 400))
    return np.stack([cx + r * np.cos(ang), cy + r * np.sin(ang)], axis=1)


def render_glyph(label: int, noise: float, rng: np.random.Generator,
                 size: int = SIZE) -> np.ndarray:
    """One binary glyph (``True`` = ink) for class ``label``."""
    template = _all_templates()[label]
    pts = np.vstack([_sample_primitive(PRIMITIVES[i], rng, 0.03) for i in template])
    # affine jitter about the centre: scale, shear and rotation within +-10%
    sx, sy = rng.uniform(0.9, 1.1, 2)
    shear = rng.uniform(-0.1, 0.1)
    theta = rng.uniform(-0.1, 0.1)
    rot = np.array([[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]])
    a = rot @ np.array([[sx, shear], [0.0, sy]])
    shift = rng.uniform(-0.05, 0.05, 2)
    pts = (pts - 0.5) @ a.T * 0.85 + 0.5 + shift
    pix = np.clip(np.round(pts * (size - 1)).astype(int), 0, size - 1)
    centre = np.ones((size, size), dtype=bool)
    centre[pix[:, 1], pix[:, 0]] = False
    pen = rng.uniform(2.0, 3.5)
    img = ndimage.distance_transform_edt(centre) <= pen
    if noise > 0:
        img ^= rng.random((size, size)) < noise
    return img


@dataclass
class SynthDataset:
    images: List[np.ndarray]
    labels: np.ndarray
    names: List[str]

    def manifest(self, root: Path = Path(".")) -> DatasetManifest:
        entries = [ManifestEntry(n, int(l), "synthetic") for n, l in zip(self.names, self.labels)]
        return DatasetManifest(entries, root=root)

    def __len__(self):
        return len(self.images)


def synth_glyphs(classes: int, per_class: int, noise: float = 0.0, seed: int = 0) -> SynthDataset:
    """``per_class`` glyphs for each of the first ``classes`` classes.

    Sample ``i`` of class ``c`` depends only on ``(seed, c, i)``.
    """
    if not 1 <= classes <= N_CLASSES:
        raise ValueError(f"classes must lie in 1..{N_CLASSES}")
    if not 0 <= noise < 1:
        raise ValueError("noise must lie in [0, 1)")
    if per_class < 0:
        raise ValueError("per_class must be >= 0")
    images, labels, names = [], [], []
    for c in range(classes):
        for i in range(per_class):
            rng = np.random.default_rng([seed, c, i])
            images.append(render_glyph(c, noise, rng))
            labels.append(c)
            names.append(f"{c:02d}/{c:02d}_{i:04d}.pgm")
    return SynthDataset(images, np.array(labels, dtype=np.int64), names)


def write_dataset(ds: SynthDataset, out_dir) -> Path:
    """Write PGM files plus ``manifest.csv`` and ``classes.txt``; returns the manifest path."""
    out_dir = Path(out_dir)
    for name, img in zip(ds.names, ds.images):
        target = out_dir / name
        target.parent.mkdir(parents=True, exist_ok=True)
        write_pgm(target, img)
    manifest_path = out_dir / "manifest.csv"
    write_manifest(ds.manifest(out_dir), manifest_path)
    return manifest_path
