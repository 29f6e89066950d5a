"""Flat named-tensor checkpoint container.

Layout: 8-byte magic ``PEDCAST1``, uint32 little-endian header length, JSON
header {"version": 1, "tensors": [{"name", "shape"}, ...]}, then the tensors'
float64 little-endian payloads concatenated in header order.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Mapping

import numpy as np

from ..errors import DataError

MAGIC = b"PEDCAST1"
VERSION = 1


def save_checkpoint(path: str | Path, params: Mapping[str, np.ndarray]) -> None:
    names = sorted(params)
    header = {
        "version": VERSION,
        "tensors": [{"name": n, "shape": list(params[n].shape)} for n in names],
    }
    blob = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for n in names:
            fh.write(np.ascontiguousarray(params[n], dtype="<f8").tobytes())


def load_checkpoint(path: str | Path) -> dict[str, np.ndarray]:
    with open(path, "rb") as fh:
        if fh.read(len(MAGIC)) != MAGIC:
            raise DataError(f"{path}: not a checkpoint file")
        (hlen,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(hlen).decode())
        if header.get("version") != VERSION:
            raise DataError(f"{path}: unsupported checkpoint version {header.get('version')}")
        out: dict[str, np.ndarray] = {}
        for spec in header["tensors"]:
            shape = tuple(spec["shape"])
            count = int(np.prod(shape)) if shape else 1
            buf = fh.read(count * 8)
            if len(buf) != count * 8:
                raise DataError(f"{path}: truncated payload for {spec['name']}")
            out[spec["name"]] = np.frombuffer(buf, dtype="<f8").reshape(shape).copy()
    return out
