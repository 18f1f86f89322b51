"""Core domain types: complex fields and volumes on regular grids, raw scan
traces, buried-object descriptions, and the scene configurations that the
dataset factory enumerates.

All arrays are numpy, complex data is complex128, and physical lengths are
millimetres throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# Scene vocabulary shared by the enumeration and splitting code.
CARDINALS = ("N", "S", "W", "E")
CATEGORIES = ("mine", "clutter", "pottery")
INDOOR_HEIGHTS_MM = (40.0, 80.0)
INDOOR_SLOPES_DEG = (0.0, 20.0)

DEFAULT_PITCH_MM = 5.0


def _as_complex_image(data: np.ndarray, what: str) -> np.ndarray:
    arr = np.asarray(data, dtype=np.complex128)
    if arr.ndim != 2:
        raise ValueError(f"{what} must be a 2D array, got shape {arr.shape}")
    if arr.shape[0] < 2 or arr.shape[1] < 2:
        raise ValueError(f"{what} must be at least 2x2, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError(f"{what} contains non-finite samples")
    return arr


def _check_pitch(pitch_mm: float) -> float:
    pitch = float(pitch_mm)
    if not math.isfinite(pitch) or pitch <= 0.0:
        raise ValueError(f"pitch_mm must be finite and positive, got {pitch_mm!r}")
    return pitch


@dataclass(frozen=True, eq=False)
class ComplexField2D:
    """A complex-valued image sampled on a regular grid with a physical pitch.

    The array is stored row-major as (rows, cols) and is made read-only so a
    field can be shared freely between pipeline stages.
    """

    data: np.ndarray          # (rows, cols) complex128, row-major
    pitch_mm: float = DEFAULT_PITCH_MM

    def __post_init__(self) -> None:
        arr = _as_complex_image(self.data, "field data").copy()
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "pitch_mm", _check_pitch(self.pitch_mm))

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def with_data(self, data: np.ndarray) -> "ComplexField2D":
        """Return a new field on the same grid with different samples."""
        return ComplexField2D(data, self.pitch_mm)


def amplitude(f: ComplexField2D) -> np.ndarray:
    """Magnitude image of a field, element-wise |f|."""
    return np.abs(f.data)


def phase(f: ComplexField2D) -> np.ndarray:
    """Principal phase image of a field in (-pi, pi].

    numpy maps a negative real with negative-zero imaginary part to -pi;
    those samples are folded back to +pi so the interval is half-open.
    """
    ph = np.angle(f.data)
    ph[ph == -np.pi] = np.pi
    return ph


def field_from_amp_phase(
    amp: np.ndarray,
    ph: np.ndarray,
    pitch_mm: float = DEFAULT_PITCH_MM,
) -> ComplexField2D:
    """Assemble a field from separate magnitude and phase images.

    `amp` must be non-negative and the two images must share one shape, so
    that amplitude(result) and phase(result) reproduce the inputs (phase up
    to wrapping wherever the amplitude vanishes).
    """
    amp = np.asarray(amp, dtype=np.float64)
    ph = np.asarray(ph, dtype=np.float64)
    if amp.shape != ph.shape:
        raise ValueError(
            f"amplitude and phase shapes differ: {amp.shape} vs {ph.shape}"
        )
    if not np.isfinite(amp).all() or not np.isfinite(ph).all():
        raise ValueError("amplitude/phase contain non-finite samples")
    if (amp < 0).any():
        raise ValueError("amplitude must be non-negative")
    return ComplexField2D(amp * np.exp(1j * ph), pitch_mm)


@dataclass(frozen=True, eq=False)
class ComplexVolume:
    """A stack of complex slices reconstructed at evenly spaced depths.

    Slice i sits at depth z0_mm + i*dz_mm. A single-slice volume may carry
    dz_mm == 0; multi-slice volumes require a positive step.
    """

    data: np.ndarray      # (slices, rows, cols) complex128
    pitch_mm: float = DEFAULT_PITCH_MM
    z0_mm: float = 0.0    # depth of slice 0
    dz_mm: float = 0.0    # depth step between slices

    def __post_init__(self) -> None:
        arr = np.asarray(self.data, dtype=np.complex128)
        if arr.ndim != 3:
            raise ValueError(f"volume data must be 3D, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 2 or arr.shape[2] < 2:
            raise ValueError(f"volume shape too small: {arr.shape}")
        if not np.isfinite(arr).all():
            raise ValueError("volume contains non-finite samples")
        arr = arr.copy()
        arr.flags.writeable = False
        z0 = float(self.z0_mm)
        dz = float(self.dz_mm)
        if not math.isfinite(z0) or not math.isfinite(dz):
            raise ValueError("z0_mm/dz_mm must be finite")
        if arr.shape[0] > 1 and dz <= 0.0:
            raise ValueError("dz_mm must be positive for multi-slice volumes")
        if dz < 0.0:
            raise ValueError("dz_mm must be non-negative")
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "pitch_mm", _check_pitch(self.pitch_mm))
        object.__setattr__(self, "z0_mm", z0)
        object.__setattr__(self, "dz_mm", dz)

    @property
    def slices(self) -> int:
        return self.data.shape[0]

    @property
    def rows(self) -> int:
        return self.data.shape[1]

    @property
    def cols(self) -> int:
        return self.data.shape[2]

    @property
    def depths_mm(self) -> np.ndarray:
        """Depth of every slice as a 1D array."""
        return self.z0_mm + self.dz_mm * np.arange(self.slices)

    def slice_field(self, index: int) -> ComplexField2D:
        """Extract one slice as a standalone field."""
        if not 0 <= index < self.slices:
            raise IndexError(f"slice index {index} out of range 0..{self.slices - 1}")
        return ComplexField2D(self.data[index], self.pitch_mm)


@dataclass(frozen=True, eq=False)
class ScanTrace:
    """Raw samples from a moving sensor: timestamps, planar positions, and
    the measured amplitude/phase at each sample.

    Positions must not all fall on one straight line; gridding needs a 2D
    spread to triangulate.
    """

    t_ms: np.ndarray        # (n,) strictly increasing timestamps
    x_mm: np.ndarray        # (n,) sensor x positions
    y_mm: np.ndarray        # (n,) sensor y positions
    amp: np.ndarray         # (n,) non-negative amplitudes
    phase_rad: np.ndarray   # (n,) phases

    def __post_init__(self) -> None:
        cols = {}
        for name in ("t_ms", "x_mm", "y_mm", "amp", "phase_rad"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if arr.ndim != 1:
                raise ValueError(f"{name} must be 1D, got shape {arr.shape}")
            if not np.isfinite(arr).all():
                raise ValueError(f"{name} contains non-finite samples")
            cols[name] = arr
        n = cols["t_ms"].shape[0]
        for name, arr in cols.items():
            if arr.shape[0] != n:
                raise ValueError(
                    f"trace columns disagree in length: {name} has {arr.shape[0]}, "
                    f"t_ms has {n}"
                )
        if n < 3:
            raise ValueError(f"a trace needs at least 3 samples, got {n}")
        if not (np.diff(cols["t_ms"]) > 0).all():
            raise ValueError("t_ms must be strictly increasing")
        if (cols["amp"] < 0).any():
            raise ValueError("amp must be non-negative")
        dx = cols["x_mm"] - cols["x_mm"][0]
        dy = cols["y_mm"] - cols["y_mm"][0]
        # Cross products against the first nonzero offset; all zero means the
        # positions are collinear and cannot be triangulated.
        cross = dx * dy[1] - dy * dx[1] if (dx[1] or dy[1]) else None
        if cross is None:
            nz = np.flatnonzero((dx != 0) | (dy != 0))
            if nz.size == 0:
                raise ValueError("trace positions are all identical")
            j = nz[0]
            cross = dx * dy[j] - dy * dx[j]
        if not (cross != 0).any():
            raise ValueError("trace positions are collinear; cannot grid them")
        for name, arr in cols.items():
            arr = arr.copy()
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def n_samples(self) -> int:
        return self.t_ms.shape[0]

    @property
    def positions(self) -> np.ndarray:
        """Sample positions as an (n, 2) array of (x, y) pairs."""
        return np.column_stack([self.x_mm, self.y_mm])

    @property
    def values(self) -> np.ndarray:
        """Complex sample values amp * exp(j * phase)."""
        return self.amp * np.exp(1j * self.phase_rad)


@dataclass(frozen=True)
class CircleFootprint:
    """Circular ground-plane footprint of a buried object."""

    diameter_mm: float

    def __post_init__(self) -> None:
        d = float(self.diameter_mm)
        if not math.isfinite(d) or d <= 0:
            raise ValueError(f"diameter_mm must be positive, got {self.diameter_mm!r}")
        object.__setattr__(self, "diameter_mm", d)


@dataclass(frozen=True)
class RectFootprint:
    """Rectangular ground-plane footprint; l1 runs east-west when the object
    faces north."""

    l1_mm: float
    l2_mm: float

    def __post_init__(self) -> None:
        l1, l2 = float(self.l1_mm), float(self.l2_mm)
        for name, v in (("l1_mm", l1), ("l2_mm", l2)):
            if not math.isfinite(v) or v <= 0:
                raise ValueError(f"{name} must be positive, got {v!r}")
        object.__setattr__(self, "l1_mm", l1)
        object.__setattr__(self, "l2_mm", l2)


Footprint = CircleFootprint | RectFootprint


@dataclass(frozen=True)
class ObjectSpec:
    """One buriable object: identity, class, footprint, and body height."""

    object_id: str
    name: str
    category: str           # one of CATEGORIES
    footprint: Footprint
    height_mm: float

    def __post_init__(self) -> None:
        if not self.object_id or not isinstance(self.object_id, str):
            raise ValueError("object_id must be a non-empty string")
        if not isinstance(self.name, str) or not self.name:
            raise ValueError("name must be a non-empty string")
        if self.category not in CATEGORIES:
            raise ValueError(
                f"category must be one of {CATEGORIES}, got {self.category!r}"
            )
        if not isinstance(self.footprint, (CircleFootprint, RectFootprint)):
            raise ValueError("footprint must be a CircleFootprint or RectFootprint")
        h = float(self.height_mm)
        if not math.isfinite(h) or h <= 0:
            raise ValueError(f"height_mm must be positive, got {self.height_mm!r}")
        object.__setattr__(self, "height_mm", h)


@dataclass(frozen=True, eq=False)
class ObjectRegistry:
    """The set of objects a dataset draws from, with unique ids."""

    objects: tuple[ObjectSpec, ...]

    def __post_init__(self) -> None:
        objs = tuple(self.objects)
        if not objs:
            raise ValueError("registry must contain at least one object")
        seen: set[str] = set()
        for obj in objs:
            if not isinstance(obj, ObjectSpec):
                raise ValueError("registry entries must be ObjectSpec instances")
            if obj.object_id in seen:
                raise ValueError(f"duplicate object_id {obj.object_id!r}")
            seen.add(obj.object_id)
        object.__setattr__(self, "objects", objs)

    def __len__(self) -> int:
        return len(self.objects)

    def __iter__(self):
        return iter(self.objects)

    def ids(self) -> tuple[str, ...]:
        return tuple(obj.object_id for obj in self.objects)

    def get(self, object_id: str) -> ObjectSpec:
        for obj in self.objects:
            if obj.object_id == object_id:
                return obj
        raise KeyError(f"unknown object_id {object_id!r}")

    def by_category(self, category: str) -> tuple[ObjectSpec, ...]:
        if category not in CATEGORIES:
            raise ValueError(f"category must be one of {CATEGORIES}, got {category!r}")
        return tuple(obj for obj in self.objects if obj.category == category)


@dataclass(frozen=True)
class IndoorConfig:
    """One controlled sandbox configuration: which object is buried, how
    deep its top face sits, which way it faces, and the surface slope."""

    object_id: str
    height_mm: float        # burial depth of the object's top face
    orientation: str        # one of CARDINALS
    slope_deg: float        # surface slope above the object

    def __post_init__(self) -> None:
        if not self.object_id or not isinstance(self.object_id, str):
            raise ValueError("object_id must be a non-empty string")
        h = float(self.height_mm)
        if h not in INDOOR_HEIGHTS_MM:
            raise ValueError(
                f"height_mm must be one of {INDOOR_HEIGHTS_MM}, got {self.height_mm!r}"
            )
        if self.orientation not in CARDINALS:
            raise ValueError(
                f"orientation must be one of {CARDINALS}, got {self.orientation!r}"
            )
        s = float(self.slope_deg)
        if s not in INDOOR_SLOPES_DEG:
            raise ValueError(
                f"slope_deg must be one of {INDOOR_SLOPES_DEG}, got {self.slope_deg!r}"
            )
        object.__setattr__(self, "height_mm", h)
        object.__setattr__(self, "slope_deg", s)

    @property
    def key(self) -> tuple[str, float, str, float]:
        return (self.object_id, self.height_mm, self.orientation, self.slope_deg)


@dataclass(frozen=True)
class OutdoorConfig:
    """One natural-soil capture: which ground patch, scanned in which
    direction."""

    patch_id: int
    direction: str          # one of CARDINALS

    def __post_init__(self) -> None:
        pid = int(self.patch_id)
        if pid < 1:
            raise ValueError(f"patch_id must be >= 1, got {self.patch_id!r}")
        if self.direction not in CARDINALS:
            raise ValueError(
                f"direction must be one of {CARDINALS}, got {self.direction!r}"
            )
        object.__setattr__(self, "patch_id", pid)
