"""Shadow-map synthesis from binary masks via spotlight-shifted circular dilation.

A shadow map is built from a ground-truth mask in four steps: extract the inner
boundary of the foreground, measure each boundary pixel's Euclidean distance to
a virtual spotlight, dilate every boundary pixel by a disk whose radius grows
with that distance (min-max scaled onto ``[0, max_radius]``), and finally clip
the union of disks to the foreground. Maps produced for several spotlights are
fused by saturating pixel-wise addition.

Masks are 2-D ``{0,1}`` arrays; shadow maps are 2-D float arrays in ``[0,1]``.
All functions are pure and safe to call from multiple threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .config import (
    DEFAULT_MAX_RADIUS,
    DEFAULT_SPOTLIGHT_CORNERS,
    VALID_CORNERS,
    read_keyvalue,
)


class SpotlightPoint(NamedTuple):
    """Pixel position of a virtual light source: x is the column, y the row."""

    x: int
    y: int


@dataclass(frozen=True)
class DilationConfig:
    """Settings for shadow synthesis.

    ``max_radius`` bounds the dilation radii; distances are min-max scaled onto
    ``[0, max_radius]``. ``spotlights`` are image corners ("tl", "tr", "bl",
    "br") resolved against each mask's size. ``degenerate_radius`` is used when
    all boundary pixels are equidistant from the spotlight (defaults to
    ``max_radius // 2``).
    """

    max_radius: int = DEFAULT_MAX_RADIUS
    spotlights: tuple[str, ...] = DEFAULT_SPOTLIGHT_CORNERS
    degenerate_radius: int | None = None

    def __post_init__(self) -> None:
        if self.max_radius < 0:
            raise ValueError(f"max_radius must be >= 0, got {self.max_radius}")
        if not self.spotlights:
            raise ValueError("at least one spotlight corner is required")
        for corner in self.spotlights:
            if corner not in VALID_CORNERS:
                raise ValueError(f"unknown spotlight corner {corner!r}, expected one of {VALID_CORNERS}")
        if self.degenerate_radius is not None and self.degenerate_radius < 0:
            raise ValueError("degenerate_radius must be >= 0")

    @property
    def effective_degenerate_radius(self) -> int:
        return self.max_radius // 2 if self.degenerate_radius is None else self.degenerate_radius

    @classmethod
    def from_file(cls, path: str | Path) -> "DilationConfig":
        """Load from a ``key = value`` file with keys max_radius, spotlights,
        degenerate_radius (all optional; unknown keys are rejected)."""
        entries = read_keyvalue(path)
        known = {"max_radius", "spotlights", "degenerate_radius"}
        unknown = set(entries) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        kwargs: dict = {}
        if "max_radius" in entries:
            kwargs["max_radius"] = int(entries["max_radius"])
        if "spotlights" in entries:
            kwargs["spotlights"] = tuple(
                c.strip() for c in entries["spotlights"].split(",") if c.strip()
            )
        if "degenerate_radius" in entries:
            kwargs["degenerate_radius"] = int(entries["degenerate_radius"])
        return cls(**kwargs)


def validate_mask(mask: np.ndarray) -> np.ndarray:
    """Check that ``mask`` is a 2-D array of exact 0/1 values; return it as uint8."""
    arr = np.asarray(mask)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"mask must be a non-empty 2-D array, got shape {arr.shape}")
    if not np.isin(arr, (0, 1)).all():
        raise ValueError("mask values must be exactly 0 or 1")
    return arr.astype(np.uint8, copy=False)


def resolve_spotlights(cfg: DilationConfig, height: int, width: int) -> list[SpotlightPoint]:
    """Map the configured corner names to pixel coordinates for an image size."""
    corners = {
        "tl": SpotlightPoint(0, 0),
        "tr": SpotlightPoint(width - 1, 0),
        "bl": SpotlightPoint(0, height - 1),
        "br": SpotlightPoint(width - 1, height - 1),
    }
    return [corners[name] for name in cfg.spotlights]


def extract_edge(gt: np.ndarray) -> np.ndarray:
    """Inner boundary of a binary mask.

    A foreground pixel is a boundary pixel when at least one of its
    4-neighbours is background; pixels on the image border count the outside
    as background. Equivalent to the mask minus its erosion under a 3x3 cross.
    """
    gt = validate_mask(gt)
    padded = np.pad(gt, 1)
    eroded = (
        gt
        & padded[:-2, 1:-1]
        & padded[2:, 1:-1]
        & padded[1:-1, :-2]
        & padded[1:-1, 2:]
    )
    return (gt & ~eroded).astype(np.uint8)


def compute_radii(
    edge: np.ndarray, q: SpotlightPoint, cfg: DilationConfig
) -> list[tuple[tuple[int, int], int]]:
    """Dilation radius for every edge pixel, in row-major pixel order.

    Euclidean distances to ``q`` are min-max scaled onto ``[0, max_radius]``
    and rounded to the nearest integer (ties away from zero). When all
    distances are equal (including a single edge pixel) every radius is
    ``cfg.effective_degenerate_radius``. Returns ``((x, y), radius)`` pairs;
    an empty edge map yields an empty list.
    """
    edge = validate_mask(edge)
    height, width = edge.shape
    if not (0 <= q.x < width and 0 <= q.y < height):
        raise ValueError(f"spotlight {q} out of bounds for {width}x{height} image")
    rows, cols = np.nonzero(edge)
    if rows.size == 0:
        return []
    dist = np.sqrt((cols.astype(np.float64) - q.x) ** 2 + (rows.astype(np.float64) - q.y) ** 2)
    d_min = dist.min()
    d_max = dist.max()
    if d_max == d_min:
        radii = np.full(dist.shape, cfg.effective_degenerate_radius, dtype=np.int64)
    else:
        scaled = cfg.max_radius * (dist - d_min) / (d_max - d_min)
        radii = np.floor(scaled + 0.5).astype(np.int64)
    return [
        ((int(x), int(y)), int(r))
        for x, y, r in zip(cols, rows, radii)
    ]


def _disk_offsets(radius: int) -> tuple[np.ndarray, np.ndarray]:
    """Boolean disk stamp of side 2r+1: offsets (dy, dx) with dy^2+dx^2 <= r^2."""
    span = np.arange(-radius, radius + 1)
    dy, dx = np.meshgrid(span, span, indexing="ij")
    return dy, dx


def circular_dilate(
    edge_pixels: Sequence[tuple[tuple[int, int], int]], width: int, height: int
) -> np.ndarray:
    """Union of discrete disks centred on the given pixels.

    A pixel is set iff it lies within Euclidean distance ``r`` of some centre
    (integer offsets with dx^2 + dy^2 <= r^2); radius 0 marks only the centre.
    Disks are clipped at the image borders.
    """
    if width < 1 or height < 1:
        raise ValueError("image dimensions must be positive")
    out = np.zeros((height, width), dtype=np.uint8)
    stamps: dict[int, np.ndarray] = {}
    for (x, y), radius in edge_pixels:
        if not (0 <= x < width and 0 <= y < height):
            raise ValueError(f"pixel ({x}, {y}) out of bounds for {width}x{height} image")
        if radius < 0:
            raise ValueError(f"negative radius {radius} at pixel ({x}, {y})")
        stamp = stamps.get(radius)
        if stamp is None:
            dy, dx = _disk_offsets(radius)
            stamp = (dy * dy + dx * dx <= radius * radius).astype(np.uint8)
            stamps[radius] = stamp
        top, bottom = y - radius, y + radius + 1
        left, right = x - radius, x + radius + 1
        s_top, s_left = max(0, -top), max(0, -left)
        s_bottom = stamp.shape[0] - max(0, bottom - height)
        s_right = stamp.shape[1] - max(0, right - width)
        view = out[max(0, top) : min(bottom, height), max(0, left) : min(right, width)]
        view |= stamp[s_top:s_bottom, s_left:s_right]
    return out


def synthesize_shadow_map(gt: np.ndarray, q: SpotlightPoint, cfg: DilationConfig) -> np.ndarray:
    """Shadow map for a single spotlight: dilated boundary union clipped to the mask.

    Output is float64 in {0, 1} and pixel-wise <= ``gt``. An all-zero mask
    yields an all-zero map.
    """
    gt = validate_mask(gt)
    edge = extract_edge(gt)
    radii = compute_radii(edge, q, cfg)
    height, width = gt.shape
    union = circular_dilate(radii, width, height)
    return (union & gt).astype(np.float64)


def combine_shadow_maps(maps: Sequence[np.ndarray]) -> np.ndarray:
    """Fuse shadow maps by pixel-wise addition saturated at 1.0."""
    if len(maps) == 0:
        raise ValueError("need at least one shadow map")
    first = np.asarray(maps[0], dtype=np.float64)
    total = first.copy()
    for m in maps[1:]:
        arr = np.asarray(m, dtype=np.float64)
        if arr.shape != first.shape:
            raise ValueError(f"shape mismatch: {arr.shape} vs {first.shape}")
        total += arr
    return np.minimum(total, 1.0)


def generate_cosupervision_target(gt: np.ndarray, cfg: DilationConfig) -> np.ndarray:
    """Fused shadow map over all configured spotlights; the training target."""
    gt = validate_mask(gt)
    height, width = gt.shape
    spots = resolve_spotlights(cfg, height, width)
    return combine_shadow_maps([synthesize_shadow_map(gt, q, cfg) for q in spots])
