"""Binary snapshots of covariance states and CSV exports."""

import hashlib
import struct

import numpy as np

from .covariance import CovarianceState

__all__ = ["MAGIC", "config_digest", "read_snapshot", "write_csv", "write_snapshot"]

MAGIC = b"FCSNAP01"
_HEAD = struct.Struct("<8sqddq")


def write_snapshot(path, state, gamma, coefficients):
    """Write ``state`` as: header, potential coefficients, then ``c11, c12, c22`` row-major '<f8'."""
    coef = np.asarray(coefficients, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(_HEAD.pack(MAGIC, state.L, float(state.t), float(gamma), coef.size))
        fh.write(coef.tobytes())
        fh.writelines(np.ascontiguousarray(blk, dtype="<f8").tobytes() for blk in (state.c11, state.c12, state.c22))


def read_snapshot(path):
    """Return ``(state, gamma, coefficients)``."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEAD.size:
        raise ValueError("truncated snapshot")
    magic, L, t, gamma, nc = _HEAD.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError("not a snapshot file")
    off = _HEAD.size
    coef = np.frombuffer(raw, "<f8", nc, off)
    off += 8 * nc
    if len(raw) != off + 3 * 8 * L * L:
        raise ValueError("snapshot size does not match header")
    blocks = [np.frombuffer(raw, "<f8", L * L, off + 8 * L * L * i).reshape(L, L).copy() for i in range(3)]
    return CovarianceState(*blocks, t=t), gamma, tuple(coef)


def config_digest(text):
    return hashlib.sha256(text.encode()).hexdigest()


def write_csv(path, columns, header=(), names=None):
    """Write columns with '%.17g'; ``header`` lines are prefixed with '#'."""
    cols = [np.asarray(c) for c in columns]
    names = names or [f"c{i}" for i in range(len(cols))]
    with open(path, "w") as fh:
        fh.writelines(f"# {line}\n" for line in header)
        fh.write(",".join(names) + "\n")
        fh.writelines(",".join(format(float(v), ".17g") for v in row) + "\n" for row in zip(*cols))
