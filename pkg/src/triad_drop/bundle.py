"""Versioned on-disk bundle: one JSON header line followed by a float32 blob.

All persisted matrices (encoders, PCA, model weights, index caches) share
this format. Arrays are stored little-endian float32, concatenated in the
order listed in the header's array table.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

FORMAT_VERSION = 1


def save_bundle(path: str | Path, meta: dict, arrays: dict[str, np.ndarray]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    table = []
    offset = 0
    blobs = []
    for name, arr in arrays.items():
        a = np.ascontiguousarray(arr, dtype="<f4")
        table.append({"name": name, "shape": list(a.shape), "offset": offset})
        blobs.append(a.tobytes())
        offset += a.size
    header = {"format_version": FORMAT_VERSION, "meta": meta, "arrays": table}
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        fh.write(b"\n")
        for blob in blobs:
            fh.write(blob)
    tmp.replace(path)


def load_bundle(path: str | Path) -> tuple[dict, dict[str, np.ndarray]]:
    path = Path(path)
    with open(path, "rb") as fh:
        header_line = fh.readline()
        header = json.loads(header_line.decode("utf-8"))
        if header.get("format_version") != FORMAT_VERSION:
            raise ValueError(f"unsupported bundle format in {path}")
        blob = fh.read()
    arrays = {}
    for entry in header["arrays"]:
        size = int(np.prod(entry["shape"])) if entry["shape"] else 1
        start = entry["offset"] * 4
        flat = np.frombuffer(blob, dtype="<f4", count=size, offset=start)
        arrays[entry["name"]] = flat.reshape(entry["shape"]).astype(np.float64)
    return header["meta"], arrays
