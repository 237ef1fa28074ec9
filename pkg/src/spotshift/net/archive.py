"""Flat binary tensor archive with a JSON manifest.

The archive is a single file of little-endian 32-bit floats; the manifest
lists, per tensor, its name, shape, and byte offset into the data file.
Tensors are stored in sorted-name order so identical contents always produce
identical bytes.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Mapping

import numpy as np

FORMAT_TAG = "flat-f32-le"


def save_archive(tensors: Mapping[str, np.ndarray], base_path: str | Path) -> tuple[Path, Path]:
    """Write ``{base}.bin`` and ``{base}.json``; returns both paths."""
    base = Path(base_path)
    data_path = base.with_suffix(".bin")
    manifest_path = base.with_suffix(".json")
    entries = []
    offset = 0
    chunks = []
    for name in sorted(tensors):
        # asarray keeps 0-d shapes; tobytes always serialises in C order
        arr = np.asarray(tensors[name], dtype="<f4")
        chunks.append(arr.tobytes())
        entries.append({"name": name, "shape": list(arr.shape), "offset": offset})
        offset += arr.nbytes
    data_path.write_bytes(b"".join(chunks))
    manifest = {"format": FORMAT_TAG, "tensors": entries}
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n")
    return data_path, manifest_path


def load_archive(base_path: str | Path) -> dict[str, np.ndarray]:
    """Read an archive back into float64 arrays keyed by tensor name."""
    base = Path(base_path)
    manifest = json.loads(base.with_suffix(".json").read_text())
    if manifest.get("format") != FORMAT_TAG:
        raise ValueError(f"unsupported archive format: {manifest.get('format')!r}")
    blob = base.with_suffix(".bin").read_bytes()
    out: dict[str, np.ndarray] = {}
    for entry in manifest["tensors"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        start = entry["offset"]
        arr = np.frombuffer(blob, dtype="<f4", count=count, offset=start)
        out[entry["name"]] = arr.reshape(shape).astype(np.float64)
    return out
