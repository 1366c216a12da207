import hashlib

import numpy as np
import pytest
from conftest import RNG

from flipchain.covariance import CovarianceState
from flipchain.io import MAGIC, config_digest, read_snapshot, write_csv, write_snapshot


def _state(L):
    X = RNG.standard_normal((2 * L, 2 * L))
    return CovarianceState.from_full(X @ X.T, t=12.5)


def test_snapshot_roundtrip_is_bit_exact(tmp_path):
    s = _state(6)
    path = tmp_path / "s.bin"
    write_snapshot(path, s, 6.0, (3.0, -1.0))
    back, gamma, coef = read_snapshot(path)
    assert gamma == 6.0 and coef == (3.0, -1.0) and back.t == 12.5
    for a, b in ((s.c11, back.c11), (s.c12, back.c12), (s.c22, back.c22)):
        assert np.array_equal(a, b)


def test_snapshot_layout(tmp_path):
    s = _state(4)
    path = tmp_path / "s.bin"
    write_snapshot(path, s, 1.0, (2.0,))
    raw = path.read_bytes()
    assert raw[:8] == MAGIC
    assert len(raw) == 8 + 8 + 8 + 8 + 8 + 8 * 1 + 3 * 8 * 16
    c11 = np.frombuffer(raw, "<f8", 16, 48).reshape(4, 4)
    assert np.array_equal(c11, s.c11)


def test_snapshot_rejects_corruption(tmp_path):
    path = tmp_path / "s.bin"
    write_snapshot(path, _state(3), 1.0, (2.0,))
    raw = path.read_bytes()
    (tmp_path / "bad.bin").write_bytes(b"XXXXXXXX" + raw[8:])
    with pytest.raises(ValueError, match="not a snapshot"):
        read_snapshot(tmp_path / "bad.bin")
    (tmp_path / "short.bin").write_bytes(raw[:-8])
    with pytest.raises(ValueError, match="size"):
        read_snapshot(tmp_path / "short.bin")
    (tmp_path / "tiny.bin").write_bytes(raw[:5])
    with pytest.raises(ValueError, match="truncated"):
        read_snapshot(tmp_path / "tiny.bin")


def test_csv_full_precision(tmp_path):
    path = tmp_path / "a.csv"
    vals = np.array([1 / 3, np.pi, -2.5e-300])
    write_csv(path, [np.arange(3), vals], header=["hello"], names=["i", "v"])
    lines = path.read_text().splitlines()
    assert lines[0] == "# hello" and lines[1] == "i,v"
    back = np.loadtxt(path, delimiter=",", comments="#", skiprows=2)
    assert np.array_equal(back[:, 1], vals)


def test_config_digest():
    assert config_digest("abc") == hashlib.sha256(b"abc").hexdigest()
