"""Dataset manifests, directory ingestion and seeded stratified splits.

Manifest files are CSV with a header row ``path,label,source``; paths are
relative to the manifest's directory. Class names, when present, live in a
sibling ``classes.txt`` (one name per line, line ``i`` names label ``i``).
"""
from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import BadLabel, ClassTooSmall, ConfigInvalid, NoSamples, UnreadableImage
from ..imagecore import read_image

N_CLASSES = 49
SOURCES = ("isi", "own", "synthetic")
IMAGE_SUFFIXES = (".pgm", ".pnm", ".png", ".bmp", ".jpg", ".jpeg", ".tif", ".tiff")


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    label: int
    source: str = "own"


@dataclass
class DatasetManifest:
    entries: List[ManifestEntry]
    class_names: List[str] = field(default_factory=lambda: default_class_names())
    root: Path = Path(".")

    def __post_init__(self):
        if not self.entries:
            raise NoSamples("manifest has no entries")
        seen = set()
        for e in self.entries:
            if not 0 <= e.label < N_CLASSES:
                raise BadLabel(f"label {e.label} of {e.path} is outside 0..{N_CLASSES - 1}")
            if e.source not in SOURCES:
                raise ValueError(f"unknown source tag {e.source!r} for {e.path}")
            if e.path in seen:
                raise ValueError(f"duplicate manifest path {e.path}")
            seen.add(e.path)
        if len(self.class_names) != N_CLASSES:
            raise ValueError(f"expected {N_CLASSES} class names")

    @property
    def labels(self) -> np.ndarray:
        return np.array([e.label for e in self.entries], dtype=np.int64)

    def resolve(self, entry: ManifestEntry) -> Path:
        p = Path(entry.path)
        return p if p.is_absolute() else self.root / p

    def __len__(self):
        return len(self.entries)


def default_class_names() -> List[str]:
    return [f"class_{i:02d}" for i in range(N_CLASSES)]


def write_manifest(manifest: DatasetManifest, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["path", "label", "source"])
        for e in manifest.entries:
            w.writerow([e.path, e.label, e.source])
    os.replace(tmp, path)
    names = path.with_name("classes.txt")
    tmp = names.with_name("classes.txt.tmp")
    tmp.write_text("\n".join(manifest.class_names) + "\n")
    os.replace(tmp, names)


def read_manifest(path) -> DatasetManifest:
    path = Path(path)
    entries = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"path", "label"} <= set(reader.fieldnames):
            raise ValueError(f"{path}: manifest needs 'path' and 'label' columns")
        for lineno, row in enumerate(reader, start=2):
            try:
                label = int(row["label"])
            except (TypeError, ValueError):
                raise BadLabel(f"{path}:{lineno}: label {row['label']!r} is not an integer")
            if not 0 <= label < N_CLASSES:
                raise BadLabel(f"{path}:{lineno}: label {label} is outside 0..{N_CLASSES - 1}")
            entries.append(ManifestEntry(row["path"], label, (row.get("source") or "own").strip()))
    names_file = path.with_name("classes.txt")
    names = default_class_names()
    if names_file.exists():
        lines = [ln.strip() for ln in names_file.read_text().splitlines() if ln.strip()]
        names[:len(lines)] = lines[:N_CLASSES]
    if not entries:
        raise NoSamples(f"{path}: manifest has no entries")
    return DatasetManifest(entries, names, path.parent)


def _scan_directory(root: Path) -> DatasetManifest:
    classes = sorted(p for p in root.iterdir() if p.is_dir())
    if len(classes) > N_CLASSES:
        raise BadLabel(f"{root}: {len(classes)} class folders, at most {N_CLASSES} allowed")
    numeric = all(p.name.isdigit() for p in classes)
    names = default_class_names()
    entries = []
    for pos, folder in enumerate(classes):
        label = int(folder.name) if numeric else pos
        if not 0 <= label < N_CLASSES:
            raise BadLabel(f"class folder {folder.name} maps outside 0..{N_CLASSES - 1}")
        names[label] = folder.name
        for f in sorted(folder.iterdir()):
            if f.is_file() and f.suffix.lower() in IMAGE_SUFFIXES:
                entries.append(ManifestEntry(f.relative_to(root).as_posix(), label, "own"))
    if not entries:
        raise NoSamples(f"{root}: no images found")
    return DatasetManifest(entries, names, root)


def ingest(source, check_images: bool = True) -> DatasetManifest:
    """Build a validated manifest from a class-per-folder directory or a
    manifest CSV. With ``check_images`` every image is decoded once and all
    failures are reported together."""
    source = Path(source)
    if source.is_dir():
        manifest = _scan_directory(source)
    elif source.is_file():
        manifest = read_manifest(source)
    else:
        raise NoSamples(f"{source} does not exist")
    if check_images:
        bad = []
        for e in manifest.entries:
            try:
                read_image(manifest.resolve(e))
            except Exception:  # any decoder failure counts as unreadable
                bad.append(str(manifest.resolve(e)))
        if bad:
            raise UnreadableImage(f"{len(bad)} unreadable image(s): " + ", ".join(bad[:10]), bad)
    return manifest


# --------------------------------------------------------------------------
# splits
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.7
    selection_fraction: float = 0.0
    seed: int = 0
    stratified: bool = True

    def __post_init__(self):
        if not 0 < self.train_fraction < 1:
            raise ConfigInvalid("train_fraction must lie in (0, 1)")
        if not 0 <= self.selection_fraction < 1:
            raise ConfigInvalid("selection_fraction must lie in [0, 1)")
        if self.train_fraction + self.selection_fraction >= 1:
            raise ConfigInvalid("train + selection fractions must be < 1")


# Two-corpus protocol: ISI 3430 train / 1470 test; own 1470 / 784.
SPLIT_PRESETS: Dict[str, SplitSpec] = {
    "isi": SplitSpec(train_fraction=3430 / 4900),
    "own": SplitSpec(train_fraction=1470 / 2254),
}


@dataclass(frozen=True)
class Split:
    train: np.ndarray
    selection: np.ndarray
    test: np.ndarray

    def to_dict(self):
        return {k: getattr(self, k).tolist() for k in ("train", "selection", "test")}

    @classmethod
    def from_dict(cls, d):
        return cls(*(np.asarray(d[k], dtype=np.int64) for k in ("train", "selection", "test")))


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5 + 1e-9))


def _counts(n: int, spec: SplitSpec) -> Tuple[int, int, int]:
    n_train = _round_half_up(n * spec.train_fraction)
    n_sel = _round_half_up(n * spec.selection_fraction)
    return n_train, n_sel, n - n_train - n_sel


def split(labels: Sequence[int], spec: SplitSpec) -> Split:
    """Seeded partition into train / selection / test index arrays.

    Stratified splits apply the fractions per class (classes in ascending
    order share one RNG stream). Indices inside each part are sorted.
    """
    labels = np.asarray(labels, dtype=np.int64)
    rng = np.random.default_rng(spec.seed)
    groups = [np.flatnonzero(labels == c) for c in np.unique(labels)] if spec.stratified \
        else [np.arange(len(labels))]
    parts: List[List[int]] = [[], [], []]
    for idx in groups:
        n_train, n_sel, n_test = _counts(len(idx), spec)
        if n_train < 1 or n_test < 1 or (spec.selection_fraction > 0 and n_sel < 1):
            what = f"class {labels[idx[0]]}" if spec.stratified and len(idx) else "dataset"
            raise ClassTooSmall(f"{what} has {len(idx)} samples, too few for the split")
        perm = idx[rng.permutation(len(idx))]
        parts[0].extend(perm[:n_train])
        parts[1].extend(perm[n_train:n_train + n_sel])
        parts[2].extend(perm[n_train + n_sel:])
    return Split(*(np.sort(np.array(p, dtype=np.int64)) for p in parts))
