"""Resampling of scattered scan samples onto a regular complex grid.

Hand-held scans wander, so samples arrive at irregular planar positions.
Real and imaginary parts are interpolated independently with a piecewise
linear interpolant over the Delaunay triangulation of the sample positions;
pixels outside the convex hull take the value of the nearest sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import LinearNDInterpolator, NearestNDInterpolator
from scipy.spatial import QhullError
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .model import ComplexField2D, ScanTrace, DEFAULT_PITCH_MM
from .validation import check_positive


class GriddingError(ValueError):
    """Scan geometry is too degenerate to triangulate."""


@dataclass(frozen=True)
class GridSpec:
    """Target grid: size, pitch, and the position of pixel (0, 0).

    origin_mm is the (x, y) of the first pixel's center; None centers the
    grid on the bounding box of the trace being gridded.
    """

    rows: int = 60
    cols: int = 60
    pitch_mm: float = DEFAULT_PITCH_MM
    origin_mm: tuple[float, float] | None = None

    def __post_init__(self) -> None:
        r, c = int(self.rows), int(self.cols)
        if r < 2 or c < 2:
            raise ValueError(f"grid must be at least 2x2, got {r}x{c}")
        object.__setattr__(self, "rows", r)
        object.__setattr__(self, "cols", c)
        object.__setattr__(self, "pitch_mm", check_positive(self.pitch_mm, "pitch_mm"))
        if self.origin_mm is not None:
            ox, oy = (float(v) for v in self.origin_mm)
            if not (math.isfinite(ox) and math.isfinite(oy)):
                raise ValueError(f"origin_mm must be finite, got {self.origin_mm!r}")
            object.__setattr__(self, "origin_mm", (ox, oy))

    def pixel_centers(self, trace: ScanTrace | None = None) -> tuple[np.ndarray, np.ndarray]:
        """(x, y) coordinate vectors of the pixel centers, cols then rows."""
        if self.origin_mm is not None:
            ox, oy = self.origin_mm
        elif trace is not None:
            cx = 0.5 * (trace.x_mm.min() + trace.x_mm.max())
            cy = 0.5 * (trace.y_mm.min() + trace.y_mm.max())
            ox = cx - 0.5 * (self.cols - 1) * self.pitch_mm
            oy = cy - 0.5 * (self.rows - 1) * self.pitch_mm
        else:
            raise ValueError("origin_mm is unset and no trace was given")
        xs = ox + self.pitch_mm * np.arange(self.cols)
        ys = oy + self.pitch_mm * np.arange(self.rows)
        return xs, ys


def _dedupe(points: np.ndarray, values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Average complex values recorded at exactly repeated positions."""
    unique, inverse = np.unique(points, axis=0, return_inverse=True)
    if unique.shape[0] == points.shape[0]:
        return points, values
    sums = np.zeros(unique.shape[0], dtype=np.complex128)
    counts = np.zeros(unique.shape[0])
    np.add.at(sums, inverse, values)
    np.add.at(counts, inverse, 1.0)
    return unique, sums / counts


def grid_scan(trace: ScanTrace, spec: GridSpec = GridSpec()) -> ComplexField2D:
    """Resample one scan trace onto the regular grid described by spec.

    The interpolant is linear over the Delaunay triangulation of the sample
    positions and is therefore exact wherever the underlying signal is affine
    in (x, y). Pixels outside the convex hull of the samples fall back to the
    nearest sample value. Repeated positions are averaged first.
    """
    points, values = _dedupe(trace.positions, trace.values)
    xs, ys = spec.pixel_centers(trace)
    gx, gy = np.meshgrid(xs, ys)
    try:
        lin_re = LinearNDInterpolator(points, values.real)
        lin_im = LinearNDInterpolator(points, values.imag)
    except QhullError as exc:
        raise GriddingError(f"cannot triangulate scan positions: {exc}") from exc
    grid = lin_re(gx, gy) + 1j * lin_im(gx, gy)
    missing = ~np.isfinite(grid.real)
    if missing.any():
        near = NearestNDInterpolator(points, values)
        grid[missing] = near(gx[missing], gy[missing])
    return ComplexField2D(grid, spec.pitch_mm)


class ScanGridder(TransformerMixin, BaseEstimator):
    """Estimator wrapper over grid_scan for lists of traces.

    transform() maps a sequence of ScanTrace objects to a (n, rows, cols)
    complex stack on a shared grid.
    """

    def __init__(
        self,
        rows: int = 60,
        cols: int = 60,
        pitch_mm: float = DEFAULT_PITCH_MM,
        origin_mm: tuple[float, float] | None = None,
    ):
        self.rows = rows
        self.cols = cols
        self.pitch_mm = pitch_mm
        self.origin_mm = origin_mm

    def _spec(self) -> GridSpec:
        return GridSpec(self.rows, self.cols, self.pitch_mm, self.origin_mm)

    def fit(self, X, y=None):
        self._check_traces(X)
        self.spec_ = self._spec()
        return self

    def transform(self, X) -> np.ndarray:
        check_is_fitted(self, "spec_")
        traces = self._check_traces(X)
        out = np.empty((len(traces), self.spec_.rows, self.spec_.cols), np.complex128)
        for i, trace in enumerate(traces):
            out[i] = grid_scan(trace, self.spec_).data
        return out

    @staticmethod
    def _check_traces(X) -> list[ScanTrace]:
        if isinstance(X, ScanTrace):
            return [X]
        traces = list(X)
        if not traces or not all(isinstance(t, ScanTrace) for t in traces):
            raise ValueError("X must be a ScanTrace or a non-empty sequence of them")
        return traces
