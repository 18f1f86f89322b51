"""Bit-exact persistence for every artifact the pipeline touches.

Binary containers (.hgrm holograms, .hvol volumes) are little-endian with a
fixed header, float32 sample pairs, and a trailing CRC-32 so corruption is
detected rather than silently reconstructed. Text artifacts (scan CSVs,
registry, manifests, sweep reports) are UTF-8 and value-exact. All writers
go through an atomic write-then-rename so readers never observe a torn file.

Samples are stored in 32-bit precision; a write/read round trip is
bit-identical whenever the values are 32-bit clean, which holds for
everything this package itself produces.
"""

from __future__ import annotations

import csv
import io as _io
import json
import math
import os
import struct
import zlib
from importlib import resources
from pathlib import Path

import numpy as np
from PIL import Image

from .fusion import AlphaSweepResult
from .model import (
    CircleFootprint,
    ComplexField2D,
    ComplexVolume,
    IndoorConfig,
    ObjectRegistry,
    ObjectSpec,
    OutdoorConfig,
    RectFootprint,
    ScanTrace,
)

FIELD_MAGIC = b"HGRM"
VOLUME_MAGIC = b"HVOL"
FIELD_VERSION = 1
VOLUME_VERSION = 1

# Header layouts are pinned little-endian: magic, version, grid dims (u16),
# then f32 geometry. The CRC-32 of header+payload trails the payload.
_FIELD_HEADER = struct.Struct("<4sHHHf")
_VOLUME_HEADER = struct.Struct("<4sHHHHfff")
_CRC = struct.Struct("<I")

_SCAN_COLUMNS = ("t_ms", "x_mm", "y_mm", "amplitude", "phase_rad")

PNG_CHANNELS = ("amplitude", "phase")


class FormatError(ValueError):
    """A file or byte stream does not conform to its declared format."""


def checksum_bytes(data: bytes) -> str:
    """CRC-32 of a byte string, rendered as 'crc32:xxxxxxxx'."""
    return f"crc32:{zlib.crc32(data) & 0xFFFFFFFF:08x}"


def checksum_file(path: str | os.PathLike) -> str:
    return checksum_bytes(Path(path).read_bytes())


def atomic_write_bytes(path: str | os.PathLike, data: bytes) -> None:
    """Write a file so readers see either the old content or all of the new."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def _check_u16(value: int, name: str) -> int:
    if not 0 <= value <= 0xFFFF:
        raise FormatError(f"{name} {value} does not fit the container's 16-bit field")
    return value


def _interleave_f32(data: np.ndarray) -> bytes:
    pairs = np.empty(data.shape + (2,), dtype="<f4")
    pairs[..., 0] = data.real
    pairs[..., 1] = data.imag
    return pairs.tobytes()


def _deinterleave_f32(raw: bytes, shape: tuple[int, ...]) -> np.ndarray:
    pairs = np.frombuffer(raw, dtype="<f4").reshape(shape + (2,))
    return pairs[..., 0].astype(np.float64) + 1j * pairs[..., 1].astype(np.float64)


def encode_field(f: ComplexField2D) -> bytes:
    """Serialize a field to the .hgrm container."""
    _check_u16(f.rows, "rows")
    _check_u16(f.cols, "cols")
    header = _FIELD_HEADER.pack(FIELD_MAGIC, FIELD_VERSION, f.rows, f.cols, f.pitch_mm)
    body = header + _interleave_f32(f.data)
    return body + _CRC.pack(zlib.crc32(body) & 0xFFFFFFFF)


def decode_field(data: bytes) -> ComplexField2D:
    """Parse the .hgrm container; reject anything malformed or corrupted."""
    if len(data) < _FIELD_HEADER.size + _CRC.size:
        raise FormatError("truncated container: shorter than header plus checksum")
    magic, version, rows, cols, pitch = _FIELD_HEADER.unpack_from(data)
    if magic != FIELD_MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {FIELD_MAGIC!r}")
    if version != FIELD_VERSION:
        raise FormatError(f"unsupported field container version {version}")
    (crc_stored,) = _CRC.unpack_from(data, len(data) - _CRC.size)
    body = data[: len(data) - _CRC.size]
    if zlib.crc32(body) & 0xFFFFFFFF != crc_stored:
        raise FormatError("checksum mismatch: container is corrupted")
    payload = body[_FIELD_HEADER.size :]
    if len(payload) != 8 * rows * cols:
        raise FormatError(
            f"payload is {len(payload)} bytes, expected {8 * rows * cols} "
            f"for a {rows}x{cols} field"
        )
    try:
        return ComplexField2D(_deinterleave_f32(payload, (rows, cols)), pitch)
    except ValueError as exc:
        raise FormatError(f"invalid field header values: {exc}") from exc


def write_field(f: ComplexField2D, path: str | os.PathLike) -> None:
    atomic_write_bytes(path, encode_field(f))


def read_field(path: str | os.PathLike) -> ComplexField2D:
    try:
        return decode_field(Path(path).read_bytes())
    except FormatError as exc:
        raise FormatError(f"{path}: {exc}") from None


def encode_volume(v: ComplexVolume) -> bytes:
    """Serialize a volume to the .hvol container, slice-major."""
    _check_u16(v.rows, "rows")
    _check_u16(v.cols, "cols")
    _check_u16(v.slices, "slices")
    header = _VOLUME_HEADER.pack(
        VOLUME_MAGIC, VOLUME_VERSION, v.rows, v.cols, v.slices,
        v.pitch_mm, v.z0_mm, v.dz_mm,
    )
    body = header + _interleave_f32(v.data)
    return body + _CRC.pack(zlib.crc32(body) & 0xFFFFFFFF)


def decode_volume(data: bytes) -> ComplexVolume:
    """Parse the .hvol container; reject anything malformed or corrupted."""
    if len(data) < _VOLUME_HEADER.size + _CRC.size:
        raise FormatError("truncated container: shorter than header plus checksum")
    magic, version, rows, cols, slices, pitch, z0, dz = _VOLUME_HEADER.unpack_from(data)
    if magic != VOLUME_MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {VOLUME_MAGIC!r}")
    if version != VOLUME_VERSION:
        raise FormatError(f"unsupported volume container version {version}")
    (crc_stored,) = _CRC.unpack_from(data, len(data) - _CRC.size)
    body = data[: len(data) - _CRC.size]
    if zlib.crc32(body) & 0xFFFFFFFF != crc_stored:
        raise FormatError("checksum mismatch: container is corrupted")
    payload = body[_VOLUME_HEADER.size :]
    if len(payload) != 8 * rows * cols * slices:
        raise FormatError(
            f"payload is {len(payload)} bytes, expected {8 * rows * cols * slices} "
            f"for {slices} slices of {rows}x{cols}"
        )
    try:
        return ComplexVolume(
            _deinterleave_f32(payload, (slices, rows, cols)), pitch, z0, dz
        )
    except ValueError as exc:
        raise FormatError(f"invalid volume header values: {exc}") from exc


def write_volume(v: ComplexVolume, path: str | os.PathLike) -> None:
    atomic_write_bytes(path, encode_volume(v))


def read_volume(path: str | os.PathLike) -> ComplexVolume:
    try:
        return decode_volume(Path(path).read_bytes())
    except FormatError as exc:
        raise FormatError(f"{path}: {exc}") from None


def sniff_container(path: str | os.PathLike) -> str:
    """Identify a container file by magic: 'field' or 'volume'."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
    if magic == FIELD_MAGIC:
        return "field"
    if magic == VOLUME_MAGIC:
        return "volume"
    raise FormatError(f"{path}: bad magic {magic!r}")


def read_scan(path: str | os.PathLike) -> ScanTrace:
    """Parse a scan CSV with columns t_ms,x_mm,y_mm,amplitude,phase_rad.

    The header line is mandatory; malformed rows are reported with their
    line number; fewer than 3 data rows is an error.
    """
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != _SCAN_COLUMNS:
            raise FormatError(
                f"{path}: missing or bad header, expected {','.join(_SCAN_COLUMNS)}"
            )
        rows: list[list[float]] = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(_SCAN_COLUMNS):
                raise FormatError(
                    f"{path} line {lineno}: expected {len(_SCAN_COLUMNS)} fields, "
                    f"got {len(row)}"
                )
            try:
                rows.append([float(v) for v in row])
            except ValueError:
                raise FormatError(f"{path} line {lineno}: non-numeric value") from None
    if len(rows) < 3:
        raise FormatError(f"{path}: fewer than 3 samples")
    cols = np.array(rows, dtype=np.float64).T
    try:
        return ScanTrace(*cols)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None


def write_scan(trace: ScanTrace, path: str | os.PathLike) -> None:
    """Write a scan trace as CSV (LF newlines, full float round trip)."""
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_SCAN_COLUMNS)
    for i in range(trace.n_samples):
        writer.writerow(
            [
                repr(float(trace.t_ms[i])),
                repr(float(trace.x_mm[i])),
                repr(float(trace.y_mm[i])),
                repr(float(trace.amp[i])),
                repr(float(trace.phase_rad[i])),
            ]
        )
    atomic_write_bytes(path, buf.getvalue().encode("utf-8"))


def render_png(f: ComplexField2D, channel: str, path: str | os.PathLike) -> None:
    """Render one channel of a field as 8-bit grayscale PNG.

    Amplitude is min-max normalized per image (a constant image renders as
    uniform mid-gray); phase maps (-pi, pi] linearly onto [0, 255], so zero
    phase lands mid-scale.
    """
    if channel not in PNG_CHANNELS:
        raise ValueError(f"channel must be one of {PNG_CHANNELS}, got {channel!r}")
    if channel == "amplitude":
        img = np.abs(f.data)
        lo, hi = float(img.min()), float(img.max())
        if hi == lo:
            scaled = np.full(f.shape, 128.0)
        else:
            scaled = (img - lo) / (hi - lo) * 255.0
    else:
        ph = np.angle(f.data)
        ph[ph == -np.pi] = np.pi
        scaled = (ph + np.pi) / (2.0 * np.pi) * 255.0
    data = np.round(scaled).astype(np.uint8)
    buf = _io.BytesIO()
    Image.fromarray(data, mode="L").save(buf, format="PNG")
    atomic_write_bytes(path, buf.getvalue())


def write_json_doc(doc: dict, path: str | os.PathLike) -> None:
    """Write a schema-versioned JSON document with deterministic bytes."""
    if "schema_version" not in doc:
        raise ValueError("document must carry a schema_version field")
    data = json.dumps(doc, indent=2, sort_keys=True).encode("utf-8") + b"\n"
    atomic_write_bytes(path, data)


def read_json_doc(path: str | os.PathLike) -> dict:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON: {exc}") from None
    if not isinstance(doc, dict) or "schema_version" not in doc:
        raise FormatError(f"{path}: missing schema_version field")
    return doc


def write_alpha_sweep(result: AlphaSweepResult, path: str | os.PathLike) -> None:
    doc = {
        "schema_version": 1,
        "kind": "alpha_sweep",
        "entries": [{"alpha": a, "score": s} for a, s in result.entries],
        "best_alpha": result.best_alpha,
        "best_score": result.best_score,
    }
    write_json_doc(doc, path)


def read_alpha_sweep(path: str | os.PathLike) -> AlphaSweepResult:
    doc = read_json_doc(path)
    if doc.get("kind") != "alpha_sweep":
        raise FormatError(f"{path}: not an alpha sweep document")
    try:
        entries = tuple(
            (float(e["alpha"]), float(e["score"])) for e in doc["entries"]
        )
        return AlphaSweepResult(entries, float(doc["best_alpha"]), float(doc["best_score"]))
    except (KeyError, TypeError) as exc:
        raise FormatError(f"{path}: malformed alpha sweep document: {exc}") from None


def registry_to_doc(registry: ObjectRegistry) -> dict:
    objects = []
    for obj in registry:
        fp = obj.footprint
        if isinstance(fp, CircleFootprint):
            fp_doc = {"shape": "circle", "diameter_mm": fp.diameter_mm}
        else:
            fp_doc = {"shape": "rect", "l1_mm": fp.l1_mm, "l2_mm": fp.l2_mm}
        objects.append(
            {
                "id": obj.object_id,
                "name": obj.name,
                "category": obj.category,
                "footprint": fp_doc,
                "height_mm": obj.height_mm,
            }
        )
    return {"schema_version": 1, "kind": "registry", "objects": objects}


def parse_registry(doc: dict) -> ObjectRegistry:
    if not isinstance(doc, dict) or not isinstance(doc.get("objects"), list):
        raise FormatError("registry document must carry an 'objects' list")
    specs = []
    for i, entry in enumerate(doc["objects"]):
        try:
            fp_doc = entry["footprint"]
            shape = fp_doc["shape"]
            if shape == "circle":
                fp: CircleFootprint | RectFootprint = CircleFootprint(
                    fp_doc["diameter_mm"]
                )
            elif shape == "rect":
                fp = RectFootprint(fp_doc["l1_mm"], fp_doc["l2_mm"])
            else:
                raise FormatError(f"unknown footprint shape {shape!r}")
            specs.append(
                ObjectSpec(
                    object_id=entry["id"],
                    name=entry["name"],
                    category=entry["category"],
                    footprint=fp,
                    height_mm=entry["height_mm"],
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"registry object {i}: {exc}") from None
    try:
        return ObjectRegistry(tuple(specs))
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def load_registry(path: str | os.PathLike) -> ObjectRegistry:
    doc = read_json_doc(path)
    try:
        return parse_registry(doc)
    except FormatError as exc:
        raise FormatError(f"{path}: {exc}") from None


def default_registry() -> ObjectRegistry:
    """The built-in 13-object registry: 7 mines, 3 clutter, 3 pottery."""
    text = resources.files("holoforge.data").joinpath("registry.json").read_text("utf-8")
    return parse_registry(json.loads(text))


def indoor_scan_name(cfg: IndoorConfig) -> str:
    """Canonical file name of an indoor capture, e.g. PMN-4_h40_N_s0.hgrm."""
    return f"{cfg.object_id}_h{cfg.height_mm:g}_{cfg.orientation}_s{cfg.slope_deg:g}.hgrm"


def outdoor_scan_name(cfg: OutdoorConfig) -> str:
    """Canonical file name of an outdoor capture, e.g. soil07_N.hgrm."""
    return f"soil{cfg.patch_id:02d}_{cfg.direction}.hgrm"
