"""Mixing of controlled-scene and natural-soil holograms.

An indoor capture over uniform sand and an outdoor capture of bare ground
are blended sample-wise, H = alpha*H_in + (1-alpha)*H_out, to imitate a
target buried in natural soil. The mixing weight can be derived from the
permittivity contrast of the two media or calibrated against a reference
capture by sweeping alpha and scoring the blend with a shift-invariant
correlation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .model import ComplexField2D, ComplexVolume
from .validation import (
    as_field_pairs,
    as_field_stack,
    check_same_grid,
    check_unit_interval,
)

DEFAULT_ALPHA = 0.14            # calibrated mixing weight for 2D holograms
VOLUME_PRESET_ALPHA = 0.17      # heavier indoor weight used when blending
                                # reconstructed volumes instead of holograms

DEFAULT_SWEEP_GRID = tuple(round(i / 100, 2) for i in range(101))


def fuse(
    h_in: ComplexField2D,
    h_out: ComplexField2D,
    alpha: float = DEFAULT_ALPHA,
) -> ComplexField2D:
    """Blend an indoor and an outdoor hologram on a shared grid.

    alpha = 1 returns the indoor capture, alpha = 0 the outdoor one, and the
    blend is linear in both inputs.
    """
    alpha = check_unit_interval(alpha, "alpha")
    check_same_grid(h_in, h_out)
    return ComplexField2D(alpha * h_in.data + (1.0 - alpha) * h_out.data, h_in.pitch_mm)


def fuse_volume(
    v_in: ComplexVolume,
    v_out: ComplexVolume,
    alpha: float = DEFAULT_ALPHA,
) -> ComplexVolume:
    """Blend two reconstructed volumes slice-wise on identical depth axes."""
    alpha = check_unit_interval(alpha, "alpha")
    if v_in.data.shape != v_out.data.shape:
        raise ValueError(
            f"volume shapes differ: {v_in.data.shape} vs {v_out.data.shape}"
        )
    if (v_in.pitch_mm, v_in.z0_mm, v_in.dz_mm) != (v_out.pitch_mm, v_out.z0_mm, v_out.dz_mm):
        raise ValueError("volume grids differ in pitch or depth axis")
    blended = alpha * v_in.data + (1.0 - alpha) * v_out.data
    return ComplexVolume(blended, v_in.pitch_mm, v_in.z0_mm, v_in.dz_mm)


def alpha_from_permittivity(eps_r_air: float = 1.0, eps_r_soil: float = 6.0) -> float:
    """Mixing weight implied by the permittivity contrast of the two scenes.

    With r = eps_r_air / eps_r_soil the weight is r / (1 + r), which for the
    default air-over-soil contrast of 1:6 gives 1/7.
    """
    ea, es = float(eps_r_air), float(eps_r_soil)
    if not math.isfinite(ea) or ea < 1.0:
        raise ValueError(f"eps_r_air must be >= 1, got {eps_r_air!r}")
    if not math.isfinite(es) or es < ea:
        raise ValueError(
            f"eps_r_soil must be >= eps_r_air ({ea}), got {eps_r_soil!r}"
        )
    r = ea / es
    return r / (1.0 + r)


def correlation_score(a: ComplexField2D, b: ComplexField2D) -> float:
    """Normalized complex correlation maximized over all circular shifts.

    The cross-correlation against every 2D circular shift of b is evaluated
    in one pass via the FFT, and the largest magnitude is normalized by the
    L2 norms, so the score lies in [0, 1] and reaches 1 exactly when a is a
    circular shift of b up to a complex scale.
    """
    if a.shape != b.shape:
        raise ValueError(f"field shapes differ: {a.shape} vs {b.shape}")
    norm_a = np.linalg.norm(a.data)
    norm_b = np.linalg.norm(b.data)
    if norm_a == 0.0 or norm_b == 0.0:
        raise ValueError("correlation of an all-zero field is undefined")
    cross = np.fft.ifft2(np.fft.fft2(a.data) * np.conj(np.fft.fft2(b.data)))
    score = float(np.abs(cross).max() / (norm_a * norm_b))
    # FFT round-off can push an exact match a few ulp past 1.
    return min(score, 1.0)


@dataclass(frozen=True)
class AlphaSweepResult:
    """Outcome of a calibration sweep: every (alpha, score) pair plus the
    winning weight. Ties resolve to the smallest alpha."""

    entries: tuple[tuple[float, float], ...]
    best_alpha: float
    best_score: float

    def alphas(self) -> np.ndarray:
        return np.array([a for a, _ in self.entries])

    def scores(self) -> np.ndarray:
        return np.array([s for _, s in self.entries])


def calibrate_alpha(
    h_in: ComplexField2D,
    h_out: ComplexField2D,
    natural: ComplexField2D,
    grid: tuple[float, ...] | None = None,
) -> AlphaSweepResult:
    """Sweep the mixing weight and score each blend against a reference.

    For every alpha on the grid the indoor/outdoor pair is fused and scored
    against `natural` (a capture of the target in real soil) with
    correlation_score; the best-scoring alpha wins, ties going to the
    smaller value. The default grid is 0.00 to 1.00 in steps of 0.01.
    """
    if grid is None:
        grid = DEFAULT_SWEEP_GRID
    grid = tuple(float(a) for a in grid)
    if not grid:
        raise ValueError("alpha grid must be non-empty")
    for a in grid:
        check_unit_interval(a, "alpha grid value")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("alpha grid must be strictly increasing")
    entries = []
    for alpha in grid:
        score = correlation_score(fuse(h_in, h_out, alpha), natural)
        entries.append((alpha, score))
    scores = np.array([s for _, s in entries])
    best = int(np.argmax(scores))
    return AlphaSweepResult(tuple(entries), grid[best], float(scores[best]))


class HologramFuser(TransformerMixin, BaseEstimator):
    """Estimator wrapper that blends (indoor, outdoor) image pairs.

    transform() maps a (n, 2, rows, cols) stack of pairs to the (n, rows,
    cols) stack of blends with the configured weight.
    """

    def __init__(self, alpha: float = DEFAULT_ALPHA):
        self.alpha = alpha

    def fit(self, X, y=None):
        as_field_pairs(X)
        self.alpha_ = check_unit_interval(self.alpha, "alpha")
        return self

    def transform(self, X) -> np.ndarray:
        check_is_fitted(self, "alpha_")
        X = as_field_pairs(X)
        return self.alpha_ * X[:, 0] + (1.0 - self.alpha_) * X[:, 1]


class AlphaCalibrator(TransformerMixin, BaseEstimator):
    """Estimator that learns the mixing weight from reference captures.

    fit(X, y) takes (n, 2, rows, cols) pairs and the matching (n, rows,
    cols) natural references, sweeps the grid once, and keeps the alpha
    whose mean score over the batch is highest. transform() then blends
    with the learned weight.
    """

    def __init__(self, grid: tuple[float, ...] | None = None):
        self.grid = grid

    def fit(self, X, y):
        X = as_field_pairs(X)
        y = as_field_stack(y, name="y")
        if y.shape[0] != X.shape[0]:
            raise ValueError(
                f"X has {X.shape[0]} pairs but y has {y.shape[0]} references"
            )
        if y.shape[1:] != X.shape[2:]:
            raise ValueError(
                f"reference images are {y.shape[1:]}, pairs are {X.shape[2:]}"
            )
        pitch = 1.0  # the score is pitch-independent
        results = []
        for i in range(X.shape[0]):
            results.append(
                calibrate_alpha(
                    ComplexField2D(X[i, 0], pitch),
                    ComplexField2D(X[i, 1], pitch),
                    ComplexField2D(y[i], pitch),
                    self.grid,
                )
            )
        scores = np.mean([r.scores() for r in results], axis=0)
        best = int(np.argmax(scores))
        self.alpha_ = results[0].entries[best][0]
        self.sweep_scores_ = scores
        return self

    def transform(self, X) -> np.ndarray:
        check_is_fitted(self, "alpha_")
        X = as_field_pairs(X)
        return self.alpha_ * X[:, 0] + (1.0 - self.alpha_) * X[:, 1]
