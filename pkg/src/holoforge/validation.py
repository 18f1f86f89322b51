"""Input validation helpers shared by the functional API and the estimator
wrappers.

The estimators operate on plain complex arrays (single images or stacks), so
these helpers normalize whatever the caller passed into a well-formed
complex128 stack and report shape problems with consistent messages.
"""

from __future__ import annotations

import math

import numpy as np

from .model import ComplexField2D


def check_positive(value: float, name: str) -> float:
    v = float(value)
    if not math.isfinite(v) or v <= 0:
        raise ValueError(f"{name} must be finite and positive, got {value!r}")
    return v


def check_unit_interval(value: float, name: str) -> float:
    v = float(value)
    if not math.isfinite(v) or not 0.0 <= v <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value!r}")
    return v


def check_same_grid(a: ComplexField2D, b: ComplexField2D) -> None:
    """Require two fields to share both shape and pitch."""
    if a.shape != b.shape:
        raise ValueError(f"field shapes differ: {a.shape} vs {b.shape}")
    if a.pitch_mm != b.pitch_mm:
        raise ValueError(f"field pitches differ: {a.pitch_mm} vs {b.pitch_mm}")


def as_field_stack(X, *, name: str = "X") -> np.ndarray:
    """Coerce estimator input into a (n, rows, cols) complex128 stack.

    Accepts a single 2D image, a 3D stack, a ComplexField2D, or a sequence
    of either. Returns a fresh 3D array; a lone image becomes a stack of one.
    """
    if isinstance(X, ComplexField2D):
        return X.data[np.newaxis].copy()
    if isinstance(X, (list, tuple)) and X and isinstance(X[0], ComplexField2D):
        shapes = {f.shape for f in X}
        if len(shapes) != 1:
            raise ValueError(f"{name} fields have mixed shapes: {sorted(shapes)}")
        return np.stack([f.data for f in X])
    arr = np.asarray(X, dtype=np.complex128)
    if arr.ndim == 2:
        arr = arr[np.newaxis]
    if arr.ndim != 3:
        raise ValueError(
            f"{name} must be a 2D image or a 3D stack of images, got shape {arr.shape}"
        )
    if arr.shape[1] < 2 or arr.shape[2] < 2:
        raise ValueError(f"{name} images must be at least 2x2, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains non-finite samples")
    return arr.copy()


def as_field_pairs(X, *, name: str = "X") -> np.ndarray:
    """Coerce estimator input into a (n, 2, rows, cols) stack of image pairs."""
    arr = np.asarray(X, dtype=np.complex128)
    if arr.ndim == 3 and arr.shape[0] == 2:
        arr = arr[np.newaxis]
    if arr.ndim != 4 or arr.shape[1] != 2:
        raise ValueError(
            f"{name} must be one (2, rows, cols) pair or a (n, 2, rows, cols) "
            f"stack of pairs, got shape {arr.shape}"
        )
    if arr.shape[2] < 2 or arr.shape[3] < 2:
        raise ValueError(f"{name} images must be at least 2x2, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains non-finite samples")
    return arr.copy()
