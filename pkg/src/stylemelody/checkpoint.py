"""Versioned single-file checkpoint container.

Layout: 8-byte magic, u64 little-endian header length, canonical-JSON
header, then raw little-endian array payloads. Serialization is
byte-deterministic: identical arrays and manifests always produce an
identical file, so reproducibility can be asserted on bytes.
"""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"SMELCKP1"
FORMAT_VERSION = 1

_DTYPES = {"float64": "<f8", "int64": "<i8", "uint8": "|u1"}


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def config_hash(obj) -> str:
    return hashlib.sha256(canonical_json(obj).encode("utf-8")).hexdigest()


def save_container(path: str | Path, arrays: dict[str, np.ndarray], manifests: dict) -> Path:
    index = []
    payload = bytearray()
    for name in sorted(arrays):
        arr = np.asarray(arrays[name])
        if arr.dtype.name not in _DTYPES:
            if np.issubdtype(arr.dtype, np.floating):
                arr = arr.astype(np.float64)
            elif np.issubdtype(arr.dtype, np.integer):
                arr = arr.astype(np.int64)
            else:
                raise TypeError(f"array {name!r} has unsupported dtype {arr.dtype}")
        buf = np.ascontiguousarray(arr).astype(_DTYPES[arr.dtype.name]).tobytes()
        index.append(
            {
                "name": name,
                "shape": list(arr.shape),
                "dtype": arr.dtype.name,
                "offset": len(payload),
                "nbytes": len(buf),
            }
        )
        payload += buf
    header = canonical_json(
        {"version": FORMAT_VERSION, "manifests": manifests, "arrays": index}
    ).encode("utf-8")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(header)))
        fh.write(header)
        fh.write(payload)
    return path


def load_container(path: str | Path) -> tuple[dict[str, np.ndarray], dict]:
    raw = Path(path).read_bytes()
    if raw[: len(MAGIC)] != MAGIC:
        raise ValueError(f"{path}: not a checkpoint container")
    (header_len,) = struct.unpack("<Q", raw[8:16])
    header = json.loads(raw[16 : 16 + header_len].decode("utf-8"))
    if header["version"] != FORMAT_VERSION:
        raise ValueError(f"unsupported container version {header['version']}")
    base = 16 + header_len
    arrays = {}
    for entry in header["arrays"]:
        start = base + entry["offset"]
        buf = raw[start : start + entry["nbytes"]]
        arr = np.frombuffer(buf, dtype=_DTYPES[entry["dtype"]]).reshape(entry["shape"])
        arrays[entry["name"]] = arr.astype(entry["dtype"]).copy()
    return arrays, header["manifests"]
