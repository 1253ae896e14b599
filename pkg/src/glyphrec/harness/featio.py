"""Columnar text format for feature matrices.

Layout (UTF-8, tab separated)::

    #glyphrec-features v1
    #kind=<kind>	dimension=<d>	samples=<n>
    id	label	f0	f1	...	f<d-1>
    <id>	<label>	<v0>	...	<v(d-1)>

Values are written with ``repr`` so reading a file back reproduces every
float bit for bit.
"""
from __future__ import annotations

import os
from pathlib import Path
from typing import List, Sequence, Tuple

import numpy as np

from ..errors import FormatError

MAGIC = "#glyphrec-features v1"


def write_features(path, kind: str, ids: Sequence[str], labels: Sequence[int], x) -> None:
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    n, d = x.shape
    if len(ids) != n or len(labels) != n:
        raise ValueError("ids, labels and rows must have the same length")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(MAGIC + "\n")
        fh.write(f"#kind={kind}\tdimension={d}\tsamples={n}\n")
        fh.write("\t".join(["id", "label"] + [f"f{i}" for i in range(d)]) + "\n")
        for sid, lab, row in zip(ids, labels, x):
            if "\t" in sid or "\n" in sid:
                raise ValueError(f"sample id {sid!r} contains a tab or newline")
            fh.write("\t".join([sid, str(int(lab))] + [repr(float(v)) for v in row]) + "\n")
    os.replace(tmp, path)


def read_features(path) -> Tuple[str, List[str], np.ndarray, np.ndarray]:
    """Return ``(kind, ids, labels, matrix)``."""
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if len(lines) < 3 or lines[0] != MAGIC:
        raise FormatError(f"{path}: not a glyphrec feature file")
    meta = dict(field.split("=", 1) for field in lines[1].lstrip("#").split("\t"))
    kind, d, n = meta["kind"], int(meta["dimension"]), int(meta["samples"])
    rows = [ln.split("\t") for ln in lines[3:]]
    if len(rows) != n or any(len(r) != d + 2 for r in rows):
        raise FormatError(f"{path}: row count or width does not match the header")
    ids = [r[0] for r in rows]
    labels = np.array([int(r[1]) for r in rows], dtype=np.int64)
    x = np.array([[float(v) for v in r[2:]] for r in rows], dtype=np.float64).reshape(n, d)
    return kind, ids, labels, x
