"""8-bit grayscale PNG ingestion and export."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

MASK_THRESHOLD = 128


def read_gray(path: str | Path) -> np.ndarray:
    """Read an image as a 2-D uint8 array (converted to grayscale if needed)."""
    with Image.open(path) as img:
        return np.asarray(img.convert("L"), dtype=np.uint8)


def read_mask(path: str | Path) -> np.ndarray:
    """Read a ground-truth mask, binarized at 128 (>= 128 is foreground)."""
    return (read_gray(path) >= MASK_THRESHOLD).astype(np.uint8)


def read_prediction(path: str | Path) -> np.ndarray:
    """Read a prediction map scaled to [0, 1] float64."""
    return read_gray(path).astype(np.float64) / 255.0


def write_gray_map(path: str | Path, values: np.ndarray) -> None:
    """Write a [0, 1] map as 8-bit grayscale PNG, pixel value round(255 * v)."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D map, got shape {arr.shape}")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise ValueError("map values must lie in [0, 1]")
    data = np.rint(arr * 255.0).astype(np.uint8)
    Image.fromarray(data, mode="L").save(path, format="PNG")
