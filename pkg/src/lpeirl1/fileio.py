"""On-disk formats: a small binary matrix container plus JSON helpers.

Container layout (fixed little-endian):

    bytes 0:8    magic  b"LPMX0001"
    bytes 8:16   uint64 rows
    bytes 16:24  uint64 cols
    bytes 24:    rows*cols float64, row-major

Writes are byte-deterministic for identical arrays. JSON is written with
indent 2 and a trailing newline; Python's repr-based float encoding gives
shortest round-trip decimals.
"""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from .errors import FileFormatError

MAGIC = b"LPMX0001"
_HEADER = struct.Struct("<QQ")


def save_matrix(path, arr) -> None:
    arr = np.asarray(arr, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise FileFormatError(f"only 1-D or 2-D arrays are storable, got shape {arr.shape}")
    data = np.ascontiguousarray(arr, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(_HEADER.pack(arr.shape[0], arr.shape[1]))
        fh.write(data.tobytes())


def load_matrix(path) -> np.ndarray:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[: len(MAGIC)] != MAGIC:
        raise FileFormatError(f"{path}: bad magic, not a matrix container")
    off = len(MAGIC)
    if len(blob) < off + _HEADER.size:
        raise FileFormatError(f"{path}: truncated header")
    rows, cols = _HEADER.unpack_from(blob, off)
    off += _HEADER.size
    expected = rows * cols * 8
    if len(blob) - off != expected:
        raise FileFormatError(
            f"{path}: payload is {len(blob) - off} bytes, expected {expected}"
        )
    flat = np.frombuffer(blob, dtype="<f8", offset=off)
    return flat.reshape(rows, cols).astype(np.float64, copy=True)


def save_vector(path, v) -> None:
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1:
        raise FileFormatError(f"expected a 1-D vector, got shape {v.shape}")
    save_matrix(path, v.reshape(-1, 1))


def load_vector(path) -> np.ndarray:
    arr = load_matrix(path)
    if arr.shape[1] != 1:
        raise FileFormatError(f"{path}: expected a single-column vector, got shape {arr.shape}")
    return arr[:, 0].copy()


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def matrix_to_csv(path, arr) -> None:
    """Plain-text export for interoperability; the binary container stays primary."""
    arr = np.asarray(arr, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    with open(path, "w") as fh:
        for row in arr:
            fh.write(",".join(repr(float(v)) for v in row))
            fh.write("\n")


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2) + "\n")


def read_json(path):
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
