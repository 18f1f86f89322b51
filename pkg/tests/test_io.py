import json
import math
import struct
import zlib

import numpy as np
import pytest
from PIL import Image

from conftest import make_field, make_volume, make_zigzag_trace
from holoforge import (
    ComplexField2D,
    ComplexVolume,
    FormatError,
    IndoorConfig,
    ObjectRegistry,
    OutdoorConfig,
    calibrate_alpha,
    checksum_bytes,
    checksum_file,
    decode_field,
    decode_volume,
    default_registry,
    encode_field,
    encode_volume,
    indoor_scan_name,
    load_registry,
    outdoor_scan_name,
    parse_registry,
    read_alpha_sweep,
    read_field,
    read_json_doc,
    read_scan,
    read_volume,
    registry_to_doc,
    render_png,
    sniff_container,
    write_alpha_sweep,
    write_field,
    write_json_doc,
    write_scan,
    write_volume,
)
from holoforge.io import atomic_write_bytes


class TestChecksum:
    def test_standard_check_value(self):
        # CRC-32 of the digits string is a published reference constant.
        assert checksum_bytes(b"123456789") == "crc32:cbf43926"

    def test_file_matches_bytes(self, tmp_path):
        p = tmp_path / "blob.bin"
        p.write_bytes(b"holoforge")
        assert checksum_file(p) == checksum_bytes(b"holoforge")


class TestFieldContainer:
    def test_header_layout(self, rng):
        f = make_field(rng, rows=7, cols=9, pitch_mm=2.5, f32_clean=True)
        blob = encode_field(f)
        magic, version, rows, cols, pitch = struct.unpack_from("<4sHHHf", blob)
        assert magic == b"HGRM"
        assert version == 1
        assert (rows, cols) == (7, 9)
        assert pitch == np.float32(2.5)
        # interleaved re/im float32 pairs follow the 14-byte header
        assert len(blob) == 14 + 8 * 7 * 9 + 4
        first_re, first_im = struct.unpack_from("<ff", blob, 14)
        assert first_re == np.float32(f.data[0, 0].real)
        assert first_im == np.float32(f.data[0, 0].imag)

    def test_trailing_crc_covers_header_and_payload(self, rng):
        blob = encode_field(make_field(rng, 4, 4, f32_clean=True))
        (stored,) = struct.unpack_from("<I", blob, len(blob) - 4)
        assert stored == zlib.crc32(blob[:-4]) & 0xFFFFFFFF

    def test_round_trip_f32_clean_is_bit_exact(self, rng):
        f = make_field(rng, 6, 8, pitch_mm=5.0, f32_clean=True)
        back = decode_field(encode_field(f))
        assert np.array_equal(back.data, f.data)
        assert back.pitch_mm == f.pitch_mm

    def test_round_trip_quantizes_doubles(self, rng):
        f = make_field(rng, 6, 6)
        back = decode_field(encode_field(f))
        assert np.allclose(back.data, f.data, rtol=1e-6, atol=1e-7)
        # re-encoding the quantized field is then stable
        assert encode_field(back) == encode_field(back)

    def test_corruption_detected(self, rng):
        blob = bytearray(encode_field(make_field(rng, 4, 4)))
        blob[20] ^= 0x01
        with pytest.raises(FormatError, match="checksum"):
            decode_field(bytes(blob))

    def test_truncation_detected(self, rng):
        blob = encode_field(make_field(rng, 4, 4))
        with pytest.raises(FormatError, match="truncated"):
            decode_field(blob[:10])
        # dropping payload bytes invalidates the checksum first
        with pytest.raises(FormatError):
            decode_field(blob[:-8])

    def test_bad_magic(self, rng):
        blob = bytearray(encode_field(make_field(rng, 4, 4)))
        blob[:4] = b"NOPE"
        with pytest.raises(FormatError, match="magic"):
            decode_field(bytes(blob))

    def test_bad_version_with_valid_crc(self, rng):
        blob = bytearray(encode_field(make_field(rng, 4, 4)))
        struct.pack_into("<H", blob, 4, 2)
        body = bytes(blob[:-4])
        blob[-4:] = struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF)
        with pytest.raises(FormatError, match="version"):
            decode_field(bytes(blob))

    def test_payload_size_mismatch_with_valid_crc(self, rng):
        blob = bytearray(encode_field(make_field(rng, 4, 4)))
        struct.pack_into("<H", blob, 6, 5)  # claim 5 rows, keep 4x4 payload
        body = bytes(blob[:-4])
        blob[-4:] = struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF)
        with pytest.raises(FormatError, match="payload"):
            decode_field(bytes(blob))

    def test_file_round_trip_and_error_prefix(self, rng, tmp_path):
        f = make_field(rng, 5, 5, f32_clean=True)
        p = tmp_path / "f.hgrm"
        write_field(f, p)
        assert np.array_equal(read_field(p).data, f.data)
        p.write_bytes(b"garbage that is long enough to pass length checks")
        with pytest.raises(FormatError, match="f.hgrm"):
            read_field(p)


class TestVolumeContainer:
    def test_header_layout(self, rng):
        v = make_volume(rng, slices=3, rows=5, cols=6, f32_clean=True)
        blob = encode_volume(v)
        magic, version, rows, cols, slices, pitch, z0, dz = struct.unpack_from(
            "<4sHHHHfff", blob
        )
        assert magic == b"HVOL"
        assert version == 1
        assert (rows, cols, slices) == (5, 6, 3)
        assert (pitch, z0, dz) == (
            np.float32(v.pitch_mm), np.float32(v.z0_mm), np.float32(v.dz_mm)
        )
        assert len(blob) == 24 + 8 * 3 * 5 * 6 + 4

    def test_round_trip(self, rng):
        v = make_volume(rng, slices=4, rows=6, cols=7, f32_clean=True)
        back = decode_volume(encode_volume(v))
        assert np.array_equal(back.data, v.data)
        assert (back.pitch_mm, back.z0_mm, back.dz_mm) == (
            v.pitch_mm, v.z0_mm, v.dz_mm
        )

    def test_slice_major_payload_order(self, rng):
        v = make_volume(rng, slices=2, rows=2, cols=2, f32_clean=True)
        blob = encode_volume(v)
        flat = np.frombuffer(blob[24:-4], dtype="<f4")
        values = flat[0::2] + 1j * flat[1::2]
        assert np.array_equal(values.astype(np.complex128), v.data.ravel())

    def test_corruption_detected(self, rng):
        blob = bytearray(encode_volume(make_volume(rng)))
        blob[-1] ^= 0xFF
        with pytest.raises(FormatError, match="checksum"):
            decode_volume(bytes(blob))

    def test_file_round_trip(self, rng, tmp_path):
        v = make_volume(rng, f32_clean=True)
        p = tmp_path / "v.hvol"
        write_volume(v, p)
        assert np.array_equal(read_volume(p).data, v.data)

    def test_sniff(self, rng, tmp_path):
        fp = tmp_path / "a.hgrm"
        vp = tmp_path / "b.hvol"
        write_field(make_field(rng, 4, 4), fp)
        write_volume(make_volume(rng), vp)
        assert sniff_container(fp) == "field"
        assert sniff_container(vp) == "volume"
        bad = tmp_path / "c.bin"
        bad.write_bytes(b"XXXXrest")
        with pytest.raises(FormatError, match="magic"):
            sniff_container(bad)


class TestScanCsv:
    def test_round_trip(self, rng, tmp_path):
        trace = make_zigzag_trace(
            lambda x, y: np.exp(1j * 0.01 * x * y) * (1 + 0.1 * y),
            rows=5, cols=5, jitter_mm=0.7, rng=rng,
        )
        p = tmp_path / "scan.csv"
        write_scan(trace, p)
        back = read_scan(p)
        assert np.array_equal(back.t_ms, trace.t_ms)
        assert np.array_equal(back.x_mm, trace.x_mm)
        assert np.array_equal(back.y_mm, trace.y_mm)
        assert np.array_equal(back.amp, trace.amp)
        assert np.array_equal(back.phase_rad, trace.phase_rad)

    def test_written_header_and_newlines(self, tmp_path):
        trace = make_zigzag_trace(lambda x, y: 1.0, rows=2, cols=3)
        p = tmp_path / "scan.csv"
        write_scan(trace, p)
        raw = p.read_bytes()
        assert raw.startswith(b"t_ms,x_mm,y_mm,amplitude,phase_rad\n")
        assert b"\r" not in raw

    def test_missing_header_rejected(self, tmp_path):
        p = tmp_path / "scan.csv"
        p.write_text("1,2,3,4,5\n" * 4)
        with pytest.raises(FormatError, match="header"):
            read_scan(p)

    def test_malformed_row_reports_line_number(self, tmp_path):
        p = tmp_path / "scan.csv"
        p.write_text(
            "t_ms,x_mm,y_mm,amplitude,phase_rad\n"
            "0,0,0,1,0\n"
            "1,5,0,1,0\n"
            "2,oops,5,1,0\n"
        )
        with pytest.raises(FormatError, match="line 4"):
            read_scan(p)

    def test_wrong_field_count_reports_line_number(self, tmp_path):
        p = tmp_path / "scan.csv"
        p.write_text(
            "t_ms,x_mm,y_mm,amplitude,phase_rad\n"
            "0,0,0,1\n"
        )
        with pytest.raises(FormatError, match="line 2"):
            read_scan(p)

    def test_too_few_samples(self, tmp_path):
        p = tmp_path / "scan.csv"
        p.write_text(
            "t_ms,x_mm,y_mm,amplitude,phase_rad\n"
            "0,0,0,1,0\n"
            "1,5,3,1,0\n"
        )
        with pytest.raises(FormatError, match="fewer than 3 samples"):
            read_scan(p)

    def test_trace_invariant_errors_carry_path(self, tmp_path):
        p = tmp_path / "scan.csv"
        p.write_text(
            "t_ms,x_mm,y_mm,amplitude,phase_rad\n"
            "0,0,0,1,0\n"
            "0,5,3,1,0\n"
            "1,2,9,1,0\n"
        )
        with pytest.raises(FormatError, match="scan.csv"):
            read_scan(p)


class TestRenderPng:
    def test_amplitude_spans_full_range(self, tmp_path):
        data = np.array([[0.0, 1.0], [2.0, 4.0]], dtype=np.complex128)
        p = tmp_path / "amp.png"
        render_png(ComplexField2D(data, 5.0), "amplitude", p)
        img = np.asarray(Image.open(p))
        assert img.dtype == np.uint8
        assert img[0, 0] == 0 and img[1, 1] == 255

    def test_constant_amplitude_is_mid_gray(self, tmp_path):
        data = np.full((3, 3), 2.0 + 0j)
        p = tmp_path / "amp.png"
        render_png(ComplexField2D(data, 5.0), "amplitude", p)
        assert (np.asarray(Image.open(p)) == 128).all()

    def test_zero_phase_is_mid_gray(self, tmp_path):
        data = np.ones((2, 2), dtype=np.complex128)
        p = tmp_path / "ph.png"
        render_png(ComplexField2D(data, 5.0), "phase", p)
        assert (np.asarray(Image.open(p)) == 128).all()

    def test_phase_endpoints(self, tmp_path):
        # phase of -1 is +pi and must land at 255, not 0
        data = np.array([[-1.0 + 0j, 1.0 + 0j], [1.0 + 0j, 1.0 + 0j]])
        p = tmp_path / "ph.png"
        render_png(ComplexField2D(data, 5.0), "phase", p)
        img = np.asarray(Image.open(p))
        assert img[0, 0] == 255

    def test_deterministic_bytes(self, rng, tmp_path):
        f = make_field(rng, 8, 8)
        p1, p2 = tmp_path / "a.png", tmp_path / "b.png"
        render_png(f, "amplitude", p1)
        render_png(f, "amplitude", p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_bad_channel(self, rng, tmp_path):
        with pytest.raises(ValueError, match="channel"):
            render_png(make_field(rng, 4, 4), "real", tmp_path / "x.png")


class TestJsonDoc:
    def test_round_trip_and_trailing_newline(self, tmp_path):
        p = tmp_path / "doc.json"
        write_json_doc({"schema_version": 1, "b": 2, "a": 1}, p)
        raw = p.read_text()
        assert raw.endswith("\n")
        # keys are sorted for byte-stable output
        assert raw.index('"a"') < raw.index('"b"')
        assert read_json_doc(p) == {"schema_version": 1, "a": 1, "b": 2}

    def test_schema_version_required_on_write(self, tmp_path):
        with pytest.raises(ValueError, match="schema_version"):
            write_json_doc({"a": 1}, tmp_path / "doc.json")

    def test_schema_version_required_on_read(self, tmp_path):
        p = tmp_path / "doc.json"
        p.write_text('{"a": 1}')
        with pytest.raises(FormatError, match="schema_version"):
            read_json_doc(p)

    def test_invalid_json_rejected(self, tmp_path):
        p = tmp_path / "doc.json"
        p.write_text("{nope")
        with pytest.raises(FormatError, match="JSON"):
            read_json_doc(p)

    def test_atomic_overwrite(self, tmp_path):
        p = tmp_path / "doc.json"
        atomic_write_bytes(p, b"old")
        atomic_write_bytes(p, b"new")
        assert p.read_bytes() == b"new"
        assert list(tmp_path.iterdir()) == [p]


class TestAlphaSweepDoc:
    def test_round_trip(self, rng, tmp_path):
        a = make_field(rng, 8, 8)
        b = make_field(rng, 8, 8)
        result = calibrate_alpha(a, b, a, grid=(0.0, 0.5, 1.0))
        p = tmp_path / "sweep.json"
        write_alpha_sweep(result, p)
        back = read_alpha_sweep(p)
        assert back.entries == result.entries
        assert back.best_alpha == result.best_alpha
        assert back.best_score == result.best_score

    def test_wrong_kind_rejected(self, tmp_path):
        p = tmp_path / "sweep.json"
        write_json_doc({"schema_version": 1, "kind": "other"}, p)
        with pytest.raises(FormatError, match="alpha sweep"):
            read_alpha_sweep(p)


class TestRegistry:
    def test_default_composition(self):
        registry = default_registry()
        assert len(registry.objects) == 13
        assert len(registry.by_category("mine")) == 7
        assert len(registry.by_category("clutter")) == 3
        assert len(registry.by_category("pottery")) == 3

    def test_default_spot_checks(self):
        registry = default_registry()
        pmn4 = registry.get("PMN-4")
        assert pmn4.category == "mine"
        assert pmn4.footprint.diameter_mm == 95.0
        stone = registry.get("stone")
        assert (stone.footprint.l1_mm, stone.footprint.l2_mm) == (110.0, 56.0)

    def test_doc_round_trip(self, tmp_path):
        registry = default_registry()
        doc = registry_to_doc(registry)
        assert doc["schema_version"] == 1
        back = parse_registry(doc)
        assert back.ids() == registry.ids()
        for obj in registry:
            twin = back.get(obj.object_id)
            assert twin == obj

    def test_file_round_trip(self, tmp_path):
        p = tmp_path / "registry.json"
        write_json_doc(registry_to_doc(default_registry()), p)
        assert load_registry(p).ids() == default_registry().ids()

    def test_parse_rejects_missing_objects(self):
        with pytest.raises(FormatError, match="objects"):
            parse_registry({"schema_version": 1})

    def test_parse_rejects_bad_shape(self):
        doc = {
            "objects": [
                {
                    "id": "a", "name": "a", "category": "mine",
                    "footprint": {"shape": "hex", "diameter_mm": 10},
                    "height_mm": 5,
                }
            ]
        }
        with pytest.raises(FormatError, match="object 0"):
            parse_registry(doc)

    def test_parse_rejects_missing_key(self):
        doc = {"objects": [{"id": "a", "category": "mine"}]}
        with pytest.raises(FormatError, match="object 0"):
            parse_registry(doc)

    def test_parse_rejects_duplicate_ids(self):
        entry = {
            "id": "a", "name": "a", "category": "mine",
            "footprint": {"shape": "circle", "diameter_mm": 10},
            "height_mm": 5,
        }
        with pytest.raises(FormatError, match="duplicate"):
            parse_registry({"objects": [entry, dict(entry)]})


class TestScanNames:
    def test_indoor_examples(self):
        cfg = IndoorConfig("PMN-4", 40.0, "N", 0.0)
        assert indoor_scan_name(cfg) == "PMN-4_h40_N_s0.hgrm"
        cfg = IndoorConfig("stone", 80.0, "E", 20.0)
        assert indoor_scan_name(cfg) == "stone_h80_E_s20.hgrm"

    def test_outdoor_examples(self):
        assert outdoor_scan_name(OutdoorConfig(7, "N")) == "soil07_N.hgrm"
        assert outdoor_scan_name(OutdoorConfig(50, "W")) == "soil50_W.hgrm"
