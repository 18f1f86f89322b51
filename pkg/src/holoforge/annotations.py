"""Pixel-space ground truth: bounding boxes and footprint masks.

Buried objects are centered under the scan aperture, so their annotation is
derived from the object's physical footprint, the grid pitch, and the facing
direction, plus an optional planar offset for off-center placements.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .gridding import GridSpec
from .model import CircleFootprint, ObjectSpec, RectFootprint


class AnnotationError(ValueError):
    """The footprint cannot be placed on the grid."""


@dataclass(frozen=True, eq=False)
class BBox:
    """An axis-aligned pixel box plus the object mask inside it.

    x, y index the top-left pixel (column, row); the mask is a boolean
    (h, w) array and must mark at least one pixel.
    """

    x: int
    y: int
    w: int
    h: int
    mask: np.ndarray

    def __post_init__(self) -> None:
        for name in ("x", "y", "w", "h"):
            object.__setattr__(self, name, int(getattr(self, name)))
        if self.w < 1 or self.h < 1:
            raise ValueError(f"box must be at least 1x1, got {self.w}x{self.h}")
        if self.x < 0 or self.y < 0:
            raise ValueError(f"box origin must be non-negative, got ({self.x}, {self.y})")
        mask = np.asarray(self.mask, dtype=bool)
        if mask.shape != (self.h, self.w):
            raise ValueError(
                f"mask shape {mask.shape} does not match box size ({self.h}, {self.w})"
            )
        if not mask.any():
            raise ValueError("mask marks no pixels")
        mask = mask.copy()
        mask.flags.writeable = False
        object.__setattr__(self, "mask", mask)

    def full_mask(self, rows: int, cols: int) -> np.ndarray:
        """Paint the box mask onto a full rows x cols canvas."""
        if self.y + self.h > rows or self.x + self.w > cols:
            raise ValueError(f"box exceeds a {rows}x{cols} grid")
        canvas = np.zeros((rows, cols), dtype=bool)
        canvas[self.y : self.y + self.h, self.x : self.x + self.w] = self.mask
        return canvas


def _round_px(length_mm: float, pitch_mm: float) -> int:
    return max(1, int(round(length_mm / pitch_mm)))


def _disc_mask(w: int, h: int) -> np.ndarray:
    # Disc inscribed in the box, centered on the box's geometric center so
    # even diameters stay inside the box.
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    yy, xx = np.mgrid[0:h, 0:w]
    return (yy - cy) ** 2 + (xx - cx) ** 2 <= (min(w, h) / 2.0) ** 2


def make_annotation(
    obj: ObjectSpec,
    orientation: str,
    grid: GridSpec = GridSpec(),
    offset_mm: tuple[float, float] = (0.0, 0.0),
) -> BBox:
    """Rasterize an object's footprint around the grid center.

    The footprint is centered at pixel (rows//2, cols//2) shifted by the
    offset rounded to whole pixels. Rectangular footprints lay l1 across the
    columns when the object faces N or S and across the rows when it faces
    E or W; circles ignore orientation. Circle masks are the inscribed disc,
    rectangle masks fill the box. Lengths round to the nearest pixel.
    """
    if orientation not in ("N", "S", "W", "E"):
        raise AnnotationError(f"orientation must be a cardinal, got {orientation!r}")
    off_x, off_y = (float(v) for v in offset_mm)
    if not (math.isfinite(off_x) and math.isfinite(off_y)):
        raise AnnotationError(f"offset_mm must be finite, got {offset_mm!r}")
    cx = grid.cols // 2 + int(round(off_x / grid.pitch_mm))
    cy = grid.rows // 2 + int(round(off_y / grid.pitch_mm))
    fp = obj.footprint
    if isinstance(fp, CircleFootprint):
        w = h = _round_px(fp.diameter_mm, grid.pitch_mm)
        mask = _disc_mask(w, h)
    elif isinstance(fp, RectFootprint):
        w = _round_px(fp.l1_mm, grid.pitch_mm)
        h = _round_px(fp.l2_mm, grid.pitch_mm)
        if orientation in ("E", "W"):
            w, h = h, w
        mask = np.ones((h, w), dtype=bool)
    else:
        raise AnnotationError(f"unsupported footprint {type(fp).__name__}")
    x0 = cx - w // 2
    y0 = cy - h // 2
    if x0 < 0 or y0 < 0 or x0 + w > grid.cols or y0 + h > grid.rows:
        raise AnnotationError(
            f"{obj.object_id} footprint ({w}x{h} px at ({x0}, {y0})) exceeds the "
            f"{grid.rows}x{grid.cols} grid"
        )
    return BBox(x=x0, y=y0, w=w, h=h, mask=mask)


def rle_encode(mask: np.ndarray) -> list[int]:
    """Run-length encode a boolean mask, row-major, starting with a zero run.

    The first count covers leading zeros (and is 0 when the mask starts with
    a one); counts then alternate zero-runs and one-runs and sum to the
    pixel count.
    """
    flat = np.asarray(mask, dtype=bool).ravel()
    if flat.size == 0:
        raise ValueError("mask must be non-empty")
    changes = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    bounds = np.concatenate([[0], changes, [flat.size]])
    runs = np.diff(bounds).tolist()
    if flat[0]:
        runs.insert(0, 0)
    return [int(r) for r in runs]


def rle_decode(counts: list[int], shape: tuple[int, int]) -> np.ndarray:
    """Invert rle_encode back into a boolean (rows, cols) mask."""
    rows, cols = int(shape[0]), int(shape[1])
    if rows < 1 or cols < 1:
        raise ValueError(f"shape must be positive, got {shape!r}")
    counts = [int(c) for c in counts]
    if any(c < 0 for c in counts):
        raise ValueError("run lengths must be non-negative")
    if sum(counts) != rows * cols:
        raise ValueError(
            f"run lengths sum to {sum(counts)}, expected {rows * cols}"
        )
    flat = np.zeros(rows * cols, dtype=bool)
    pos = 0
    value = False
    for c in counts:
        flat[pos : pos + c] = value
        pos += c
        value = not value
    return flat.reshape(rows, cols)
