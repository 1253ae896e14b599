import json
import struct

import numpy as np
import pytest

from glyphrec import mlp, svm
from glyphrec.errors import FormatError
from glyphrec.harness import container
from glyphrec.harness.scaling import ScalerModel
from glyphrec.mlp import MlpConfig


@pytest.fixture(scope="module")
def trained():
    rng = np.random.default_rng(0)
    x = rng.random((40, 6))
    y = rng.integers(0, 4, 40)
    m = mlp.train(list(zip(x, y)), MlpConfig(6, 5, 49, 0.5, 0.6, 3, seed=2))
    s_ovr = svm.train_multiclass(x, y, "ovr", svm.Kernel.rbf(0.9), c=3.0)
    s_ovo = svm.train_multiclass(x, y, "ovo", svm.Kernel.poly(3), c=0.5)
    return x, m, s_ovr, s_ovo


def test_mlp_roundtrip_bit_exact(trained, tmp_path):
    x, m, _, _ = trained
    blob = container.dump_mlp(m)
    assert blob[:4] == b"GLRC" and struct.unpack_from("<H", blob, 4)[0] == 1
    back = container.load_mlp(blob)
    assert back.config == m.config
    for a, b in zip(m.params(), back.params()):
        assert a.tobytes() == b.tobytes()
    xs = np.random.default_rng(1).normal(size=(1000, 6))
    assert mlp.forward(back, xs).tobytes() == mlp.forward(m, xs).tobytes()
    container.write_atomic(tmp_path / "m.glrc", blob)
    assert (tmp_path / "m.glrc").read_bytes() == blob
    assert container.dump_mlp(back) == blob


def test_mlp_json_dump(trained):
    _, m, _, _ = trained
    d = json.loads(json.dumps(container.mlp_to_json(m)))
    back = container.mlp_from_json(d)
    assert all(np.array_equal(a, b) for a, b in zip(m.params(), back.params()))


@pytest.mark.parametrize("which", [2, 3])
def test_svm_roundtrip_bit_exact(trained, which):
    model = trained[which]
    blob = container.dump_svm(model)
    back = container.load_svm(blob)
    assert back.scheme == model.scheme and back.classes == model.classes
    xs = np.random.default_rng(2).normal(size=(1000, 6))
    s1, t1 = svm.decision_scores(model, xs)
    s2, t2 = svm.decision_scores(back, xs)
    assert s1.tobytes() == s2.tobytes() and t1.tobytes() == t2.tobytes()
    assert np.array_equal(svm.predict_batch(model, xs), svm.predict_batch(back, xs))
    assert container.dump_svm(back) == blob


def test_scaler_roundtrip():
    s = ScalerModel.fit(np.random.default_rng(3).random((10, 4)), clamp=False)
    back = container.load_scaler(container.dump_scaler(s))
    assert back.clamp is False
    assert back.mins.tobytes() == s.mins.tobytes() and back.maxs.tobytes() == s.maxs.tobytes()


def test_container_rejects_corruption(trained):
    _, m, s, _ = trained
    blob = container.dump_mlp(m)
    with pytest.raises(FormatError):
        container.load_mlp(b"XXXX" + blob[4:])
    with pytest.raises(FormatError):
        container.load_mlp(blob[:4] + struct.pack("<H", 9) + blob[6:])
    with pytest.raises(FormatError):
        container.load_svm(blob)  # wrong kind
    with pytest.raises(FormatError):
        container.load_mlp(blob[:-8])
    with pytest.raises(FormatError):
        container.load_mlp(blob[:10])
