"""Angular-spectrum propagation of single-frequency holograms.

A recorded hologram is decomposed into plane waves with a 2D FFT, each
component is advanced to depth z by the phase factor exp(-j*z*kz) with
kz = sqrt(k^2 - kx^2 - ky^2), and the field is reassembled with the inverse
FFT. Components outside the propagating disk (kx^2 + ky^2 > k^2) carry no
energy to any depth under the default handling and are zeroed; an optional
mode applies their physical evanescent decay instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .model import ComplexField2D, ComplexVolume, DEFAULT_PITCH_MM
from .validation import as_field_stack, check_positive

C_MM_PER_S = 2.99792458e11      # speed of light in vacuum, mm/s
DEFAULT_FREQUENCY_HZ = 1.9e9    # single-tone carrier of the reference sensor
EPS_R_AIR = 1.0
EPS_R_SOIL = 6.0                # relative permittivity of dry sandy soil

EVANESCENT_MODES = ("zero", "decay")


@dataclass(frozen=True)
class PropagationParams:
    """Carrier frequency and medium permittivity that fix the wavenumber."""

    frequency_hz: float = DEFAULT_FREQUENCY_HZ
    eps_r: float = EPS_R_AIR

    def __post_init__(self) -> None:
        f = float(self.frequency_hz)
        if not math.isfinite(f) or f <= 0:
            raise ValueError(f"frequency_hz must be positive, got {self.frequency_hz!r}")
        e = float(self.eps_r)
        if not math.isfinite(e) or e < 1.0:
            raise ValueError(f"eps_r must be >= 1, got {self.eps_r!r}")
        object.__setattr__(self, "frequency_hz", f)
        object.__setattr__(self, "eps_r", e)

    @property
    def wavenumber(self) -> float:
        """k = 2*pi*f*sqrt(eps_r)/c in rad/mm."""
        return 2.0 * math.pi * self.frequency_hz * math.sqrt(self.eps_r) / C_MM_PER_S

    @classmethod
    def in_air(cls, frequency_hz: float = DEFAULT_FREQUENCY_HZ) -> "PropagationParams":
        return cls(frequency_hz=frequency_hz, eps_r=EPS_R_AIR)

    @classmethod
    def in_soil(cls, frequency_hz: float = DEFAULT_FREQUENCY_HZ) -> "PropagationParams":
        return cls(frequency_hz=frequency_hz, eps_r=EPS_R_SOIL)


def wavenumber_grid(
    rows: int, cols: int, pitch_mm: float = DEFAULT_PITCH_MM
) -> tuple[np.ndarray, np.ndarray]:
    """Spatial angular frequencies of an FFT on a rows x cols grid.

    Returns (ky, kx) in rad/mm, each in FFT bin order: ky has length rows,
    kx has length cols, and bin n maps to 2*pi*fftfreq(n)/pitch.
    """
    if rows < 2 or cols < 2:
        raise ValueError(f"grid must be at least 2x2, got {rows}x{cols}")
    pitch = check_positive(pitch_mm, "pitch_mm")
    ky = 2.0 * np.pi * np.fft.fftfreq(rows, d=pitch)
    kx = 2.0 * np.pi * np.fft.fftfreq(cols, d=pitch)
    return ky, kx


def _transfer(
    rows: int,
    cols: int,
    pitch_mm: float,
    z_mm: float,
    k: float,
    evanescent: str,
) -> np.ndarray:
    """Frequency-domain transfer factor for one propagation step.

    Zero distance is the exact identity regardless of the evanescent mode,
    so that a round trip through z = 0 cannot alter a field.
    """
    if evanescent not in EVANESCENT_MODES:
        raise ValueError(
            f"evanescent must be one of {EVANESCENT_MODES}, got {evanescent!r}"
        )
    if z_mm == 0.0:
        return np.ones((rows, cols), dtype=np.complex128)
    ky, kx = wavenumber_grid(rows, cols, pitch_mm)
    k_perp2 = ky[:, np.newaxis] ** 2 + kx[np.newaxis, :] ** 2
    propagating = k_perp2 <= k * k
    kz = np.sqrt(np.maximum(k * k - k_perp2, 0.0))
    H = np.exp(-1j * z_mm * kz)
    if evanescent == "zero":
        H[~propagating] = 0.0
    else:
        decay = np.sqrt(np.maximum(k_perp2 - k * k, 0.0))
        H[~propagating] = np.exp(-abs(z_mm) * decay[~propagating])
    return H


def propagate(
    f: ComplexField2D,
    z_mm: float,
    params: PropagationParams = PropagationParams(),
    evanescent: str = "zero",
    pad: int = 1,
) -> ComplexField2D:
    """Advance a field by z_mm along the propagation axis.

    Parameters
    ----------
    f : ComplexField2D
        Field in the recording plane.
    z_mm : float
        Signed propagation distance in mm. Positive values refocus a
        hologram recorded above the scene back toward the scatterers;
        zero returns the input exactly.
    params : PropagationParams
        Carrier frequency and medium permittivity.
    evanescent : {"zero", "decay"}
        Handling of components beyond the propagating disk: drop them, or
        attenuate them by exp(-|z|*sqrt(kx^2+ky^2-k^2)).
    pad : int
        Zero-padding factor for the FFT grid. With pad > 1 the field is
        embedded centered in a pad-times-larger zero canvas before the
        transform and the result is cropped back to the input window,
        which suppresses wrap-around from the circular convolution. The
        default of 1 transforms on the bare grid.

    Returns
    -------
    ComplexField2D
        Propagated field on the same grid.
    """
    z = float(z_mm)
    if not math.isfinite(z):
        raise ValueError(f"z_mm must be finite, got {z_mm!r}")
    pad = int(pad)
    if pad < 1:
        raise ValueError(f"pad must be >= 1, got {pad}")
    if pad == 1:
        H = _transfer(f.rows, f.cols, f.pitch_mm, z, params.wavenumber, evanescent)
        out = np.fft.ifft2(np.fft.fft2(f.data) * H)
        return ComplexField2D(out, f.pitch_mm)
    rows, cols = f.rows * pad, f.cols * pad
    r0, c0 = (rows - f.rows) // 2, (cols - f.cols) // 2
    canvas = np.zeros((rows, cols), dtype=np.complex128)
    canvas[r0 : r0 + f.rows, c0 : c0 + f.cols] = f.data
    H = _transfer(rows, cols, f.pitch_mm, z, params.wavenumber, evanescent)
    out = np.fft.ifft2(np.fft.fft2(canvas) * H)
    return ComplexField2D(out[r0 : r0 + f.rows, c0 : c0 + f.cols], f.pitch_mm)


def reconstruct_volume(
    f: ComplexField2D,
    z0_mm: float,
    z1_mm: float,
    slices: int,
    params: PropagationParams = PropagationParams(),
    evanescent: str = "zero",
) -> ComplexVolume:
    """Propagate a hologram to evenly spaced depths spanning [z0_mm, z1_mm].

    Slice i lands at z0_mm + i*(z1_mm - z0_mm)/(slices - 1); a single-slice
    volume sits at z0_mm. The forward FFT is shared across slices.
    """
    slices = int(slices)
    if slices < 1:
        raise ValueError(f"slices must be >= 1, got {slices}")
    z0, z1 = float(z0_mm), float(z1_mm)
    if not math.isfinite(z0) or not math.isfinite(z1):
        raise ValueError("z0_mm/z1_mm must be finite")
    if slices == 1:
        dz = 0.0
    else:
        if z1 <= z0:
            raise ValueError(f"z1_mm must exceed z0_mm, got [{z0}, {z1}]")
        dz = (z1 - z0) / (slices - 1)
    spectrum = np.fft.fft2(f.data)
    k = params.wavenumber
    stack = np.empty((slices, f.rows, f.cols), dtype=np.complex128)
    for i in range(slices):
        H = _transfer(f.rows, f.cols, f.pitch_mm, z0 + i * dz, k, evanescent)
        stack[i] = np.fft.ifft2(spectrum * H)
    return ComplexVolume(stack, f.pitch_mm, z0_mm=z0, dz_mm=dz)


class FocusDepth(NamedTuple):
    """Best-focus slice of a volume: its index, depth, and peak magnitude."""

    slice_index: int
    z_mm: float
    peak: float


def focus_depth(volume: ComplexVolume) -> FocusDepth:
    """Locate the slice where the reconstruction is sharpest.

    Sharpness is the peak magnitude of the slice: refocusing concentrates a
    scatterer's energy into few pixels, which raises the maximum while the
    total energy stays constant. Ties resolve to the shallowest slice.
    """
    peaks = np.abs(volume.data).reshape(volume.slices, -1).max(axis=1)
    idx = int(np.argmax(peaks))
    return FocusDepth(idx, float(volume.depths_mm[idx]), float(peaks[idx]))


class AngularSpectrumPropagator(TransformerMixin, BaseEstimator):
    """Estimator wrapper that advances a stack of complex images by z_mm.

    fit() learns nothing from the sample values; it locks the grid shape and
    precomputes the transfer factor, so transform() is a plain FFT sandwich.
    """

    def __init__(
        self,
        z_mm: float = 0.0,
        frequency_hz: float = DEFAULT_FREQUENCY_HZ,
        eps_r: float = EPS_R_AIR,
        pitch_mm: float = DEFAULT_PITCH_MM,
        evanescent: str = "zero",
    ):
        self.z_mm = z_mm
        self.frequency_hz = frequency_hz
        self.eps_r = eps_r
        self.pitch_mm = pitch_mm
        self.evanescent = evanescent

    def fit(self, X, y=None):
        X = as_field_stack(X)
        params = PropagationParams(self.frequency_hz, self.eps_r)
        self.rows_, self.cols_ = X.shape[1], X.shape[2]
        self.transfer_ = _transfer(
            self.rows_, self.cols_, self.pitch_mm, float(self.z_mm),
            params.wavenumber, self.evanescent,
        )
        return self

    def transform(self, X) -> np.ndarray:
        check_is_fitted(self, "transfer_")
        X = as_field_stack(X)
        if X.shape[1:] != (self.rows_, self.cols_):
            raise ValueError(
                f"X images are {X.shape[1:]}, fitted for {(self.rows_, self.cols_)}"
            )
        return np.fft.ifft2(np.fft.fft2(X, axes=(1, 2)) * self.transfer_, axes=(1, 2))


class DepthFocuser(BaseEstimator):
    """Estimator wrapper that predicts the best-focus depth of each image.

    predict() reconstructs a volume per image over [z0_mm, z1_mm] and
    returns the depth of its sharpest slice.
    """

    def __init__(
        self,
        z0_mm: float = 0.0,
        z1_mm: float = 200.0,
        slices: int = 21,
        frequency_hz: float = DEFAULT_FREQUENCY_HZ,
        eps_r: float = EPS_R_SOIL,
        pitch_mm: float = DEFAULT_PITCH_MM,
        evanescent: str = "zero",
    ):
        self.z0_mm = z0_mm
        self.z1_mm = z1_mm
        self.slices = slices
        self.frequency_hz = frequency_hz
        self.eps_r = eps_r
        self.pitch_mm = pitch_mm
        self.evanescent = evanescent

    def fit(self, X, y=None):
        as_field_stack(X)
        self.params_ = PropagationParams(self.frequency_hz, self.eps_r)
        return self

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "params_")
        X = as_field_stack(X)
        depths = np.empty(X.shape[0])
        for i in range(X.shape[0]):
            field = ComplexField2D(X[i], self.pitch_mm)
            vol = reconstruct_volume(
                field, self.z0_mm, self.z1_mm, self.slices,
                self.params_, self.evanescent,
            )
            depths[i] = focus_depth(vol).z_mm
        return depths
