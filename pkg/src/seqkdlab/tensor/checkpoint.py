"""Versioned binary checkpoints for named parameter sets.

Layout (all integers little-endian u32):
    magic b"SKDC" | version | param_count
    then per parameter:
    name_len | name utf-8 bytes | ndim | dim_0..dim_{ndim-1} | f32 data
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from ..errors import IoError, ParseError

MAGIC = b"SKDC"
VERSION = 1


def save_checkpoint(params: dict[str, np.ndarray], path: str | Path) -> None:
    path = Path(path)
    try:
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<II", VERSION, len(params)))
            for name, arr in params.items():
                raw = name.encode("utf-8")
                fh.write(struct.pack("<I", len(raw)))
                fh.write(raw)
                fh.write(struct.pack("<I", arr.ndim))
                fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
                fh.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())
    except OSError as e:
        raise IoError(f"cannot write checkpoint {path}: {e}") from e


def load_checkpoint(path: str | Path) -> dict[str, np.ndarray]:
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as e:
        raise IoError(f"cannot read checkpoint {path}: {e}") from e
    if blob[:4] != MAGIC:
        raise ParseError(f"bad magic in {path}", line=0)
    version, count = struct.unpack_from("<II", blob, 4)
    if version != VERSION:
        raise ParseError(f"unsupported checkpoint version {version}", line=0)
    off = 12
    params: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = struct.unpack_from("<I", blob, off)
        off += 4
        name = blob[off : off + name_len].decode("utf-8")
        off += name_len
        (ndim,) = struct.unpack_from("<I", blob, off)
        off += 4
        shape = struct.unpack_from(f"<{ndim}I", blob, off)
        off += 4 * ndim
        n = int(np.prod(shape)) if ndim else 1
        arr = np.frombuffer(blob, dtype="<f4", count=n, offset=off).reshape(shape)
        off += 4 * n
        params[name] = arr.astype(np.float32).copy()
    return params
