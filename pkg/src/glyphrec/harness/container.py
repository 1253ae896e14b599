"""Versioned binary container for MLP, SVM and scaler models.

All integers and floats are little-endian. A file is::

    magic      4 bytes   b"GLRC"
    version    u16       format version (currently 1)
    kind       u8        1 = MLP, 2 = SVM, 3 = scaler
    reserved   u8        0
    length     u64       payload byte count
    payload    length bytes

The payload is a sequence of fields:

    int     i64
    float   f64
    str     u32 byte length + UTF-8 bytes
    farray  u8 ndim, u32 per dimension, then row-major f64 values
    iarray  u8 ndim, u32 per dimension, then row-major i64 values

MLP payload: input_dim, hidden_dim, output_dim (int), learning_rate,
momentum (float), epochs, seed (int), then w1, b1, w2, b2 (farray).

SVM payload: scheme (str), n_classes (int), classes (iarray), machine count
(int), then per machine: key (iarray), kernel name (str), sigma (float),
degree (int), c (float), bias (float), support vectors (farray, n_sv x d),
coefficients alpha*y (farray), training row indices (iarray), and the input
dimension (int, kept so SV-less machines still check shapes).

Scaler payload: clamp (int 0/1), mins (farray), maxs (farray).
"""
from __future__ import annotations

import io
import os
import struct
from pathlib import Path

import numpy as np

from ..errors import FormatError
from ..mlp import MlpConfig, MlpModel
from ..svm import Kernel, SvmBinaryModel, SvmModel
from .scaling import ScalerModel

MAGIC = b"GLRC"
VERSION = 1
KIND_MLP, KIND_SVM, KIND_SCALER = 1, 2, 3
_HEADER = struct.Struct("<4sHBBQ")


class _Writer:
    def __init__(self):
        self.buf = io.BytesIO()

    def int(self, v):
        self.buf.write(struct.pack("<q", int(v)))

    def float(self, v):
        self.buf.write(struct.pack("<d", float(v)))

    def str(self, s):
        b = s.encode("utf-8")
        self.buf.write(struct.pack("<I", len(b)))
        self.buf.write(b)

    def _array(self, a, dtype):
        a = np.ascontiguousarray(a, dtype=dtype)
        self.buf.write(struct.pack("<B", a.ndim))
        self.buf.write(struct.pack(f"<{a.ndim}I", *a.shape))
        self.buf.write(a.tobytes())

    def farray(self, a):
        self._array(a, "<f8")

    def iarray(self, a):
        self._array(a, "<i8")


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def _take(self, n):
        if self.pos + n > len(self.data):
            raise FormatError("payload truncated")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def int(self):
        return struct.unpack("<q", self._take(8))[0]

    def float(self):
        return struct.unpack("<d", self._take(8))[0]

    def str(self):
        (n,) = struct.unpack("<I", self._take(4))
        return self._take(n).decode("utf-8")

    def _array(self, dtype):
        (ndim,) = struct.unpack("<B", self._take(1))
        shape = struct.unpack(f"<{ndim}I", self._take(4 * ndim))
        count = int(np.prod(shape)) if ndim else 1
        raw = self._take(8 * count)
        return np.frombuffer(raw, dtype=dtype).astype(dtype.lstrip("<")).reshape(shape)

    def farray(self):
        return self._array("<f8")

    def iarray(self):
        return self._array("<i8")


def _wrap(kind: int, payload: bytes) -> bytes:
    return _HEADER.pack(MAGIC, VERSION, kind, 0, len(payload)) + payload


def _unwrap(data: bytes, expected_kind: int) -> _Reader:
    if len(data) < _HEADER.size:
        raise FormatError("file too short for a model container")
    magic, version, kind, _, length = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError("bad magic bytes")
    if version != VERSION:
        raise FormatError(f"unsupported container version {version}")
    if kind != expected_kind:
        raise FormatError(f"container holds kind {kind}, expected {expected_kind}")
    payload = data[_HEADER.size:]
    if len(payload) != length:
        raise FormatError("payload length does not match the header")
    return _Reader(payload)


# --------------------------------------------------------------------------

def dump_mlp(model: MlpModel) -> bytes:
    w = _Writer()
    cfg = model.config
    for v in (cfg.input_dim, cfg.hidden_dim, cfg.output_dim):
        w.int(v)
    w.float(cfg.learning_rate)
    w.float(cfg.momentum)
    w.int(cfg.epochs)
    w.int(cfg.seed)
    for p in model.params():
        w.farray(p)
    return _wrap(KIND_MLP, w.buf.getvalue())


def load_mlp(data: bytes) -> MlpModel:
    r = _unwrap(data, KIND_MLP)
    dims = [r.int() for _ in range(3)]
    lr, mom = r.float(), r.float()
    epochs, seed = r.int(), r.int()
    cfg = MlpConfig(dims[0], dims[1], dims[2], lr, mom, epochs, seed)
    w1, b1, w2, b2 = (r.farray() for _ in range(4))
    if w1.shape != (cfg.hidden_dim, cfg.input_dim) or w2.shape != (cfg.output_dim, cfg.hidden_dim):
        raise FormatError("weight shapes disagree with the stored config")
    return MlpModel(w1, b1, w2, b2, cfg)


def dump_svm(model: SvmModel) -> bytes:
    w = _Writer()
    w.str(model.scheme)
    w.int(model.n_classes)
    w.iarray(np.array(model.classes, dtype=np.int64))
    w.int(len(model.machines))
    for key, m in model.machines:
        w.iarray(np.array(key, dtype=np.int64))
        w.str(m.kernel.name)
        w.float(m.kernel.sigma)
        w.int(m.kernel.degree)
        w.float(m.c)
        w.float(m.bias)
        w.farray(m.support_vectors)
        w.farray(m.coef)
        w.iarray(m.sv_index)
        w.int(m.support_vectors.shape[1])
    return _wrap(KIND_SVM, w.buf.getvalue())


def load_svm(data: bytes) -> SvmModel:
    r = _unwrap(data, KIND_SVM)
    scheme = r.str()
    n_classes = r.int()
    classes = tuple(int(v) for v in r.iarray())
    machines = []
    for _ in range(r.int()):
        key = tuple(int(v) for v in r.iarray())
        kernel = Kernel(r.str(), r.float(), r.int())
        c, bias = r.float(), r.float()
        sv, coef, idx = r.farray(), r.farray(), r.iarray()
        dim = r.int()
        sv = sv.reshape(-1, dim)
        machines.append((key, SvmBinaryModel(sv, coef, bias, kernel, c, idx)))
    return SvmModel(scheme, classes, machines, n_classes)


def dump_scaler(scaler: ScalerModel) -> bytes:
    w = _Writer()
    w.int(1 if scaler.clamp else 0)
    w.farray(scaler.mins)
    w.farray(scaler.maxs)
    return _wrap(KIND_SCALER, w.buf.getvalue())


def load_scaler(data: bytes) -> ScalerModel:
    r = _unwrap(data, KIND_SCALER)
    clamp = bool(r.int())
    return ScalerModel(r.farray(), r.farray(), clamp)


def write_atomic(path, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f".{path.name}.tmp{os.getpid()}")
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


def mlp_to_json(model: MlpModel) -> dict:
    """Inspection dump; floats survive a JSON round trip exactly."""
    cfg = model.config
    return {
        "format": "glyphrec-mlp",
        "version": VERSION,
        "config": {
            "input_dim": cfg.input_dim, "hidden_dim": cfg.hidden_dim,
            "output_dim": cfg.output_dim, "learning_rate": cfg.learning_rate,
            "momentum": cfg.momentum, "epochs": cfg.epochs, "seed": cfg.seed,
        },
        "w1": model.w1.tolist(), "b1": model.b1.tolist(),
        "w2": model.w2.tolist(), "b2": model.b2.tolist(),
    }


def mlp_from_json(d: dict) -> MlpModel:
    cfg = MlpConfig(**d["config"])
    return MlpModel(*(np.array(d[k], dtype=np.float64) for k in ("w1", "b1", "w2", "b2")), cfg)
