import numpy as np
import pytest

import oracles
from holoforge import (
    AnnotationError,
    BBox,
    CircleFootprint,
    GridSpec,
    ObjectSpec,
    RectFootprint,
    default_registry,
    make_annotation,
    rle_decode,
    rle_encode,
)


def obj_with(footprint, object_id="x", category="clutter"):
    return ObjectSpec(object_id=object_id, name=object_id, category=category,
                      footprint=footprint, height_mm=10.0)


class TestBBox:
    def test_validation(self):
        good = np.ones((2, 3), dtype=bool)
        BBox(0, 0, 3, 2, good)
        with pytest.raises(ValueError, match="mask"):
            BBox(0, 0, 3, 2, np.ones((3, 2), dtype=bool))
        with pytest.raises(ValueError):
            BBox(0, 0, 0, 2, np.ones((2, 0), dtype=bool))

    def test_mask_read_only(self):
        box = BBox(1, 1, 2, 2, np.ones((2, 2), dtype=bool))
        with pytest.raises(ValueError):
            box.mask[0, 0] = False

    def test_full_mask_paints_in_place(self):
        box = BBox(2, 1, 3, 2, np.ones((2, 3), dtype=bool))
        canvas = box.full_mask(5, 7)
        assert canvas.shape == (5, 7)
        assert canvas.sum() == 6
        assert canvas[1:3, 2:5].all()

    def test_full_mask_requires_fit(self):
        box = BBox(5, 5, 3, 3, np.ones((3, 3), dtype=bool))
        with pytest.raises(ValueError, match="exceed"):
            box.full_mask(6, 6)


class TestMakeAnnotation:
    def test_circle_example_dimensions(self):
        # A 95 mm disc on a 5 mm grid is 19 px wide, top-left at (21, 21)
        # when centered on the default 60x60 grid.
        registry = default_registry()
        box = make_annotation(registry.get("PMN-4"), "N")
        assert (box.w, box.h) == (19, 19)
        assert (box.x, box.y) == (21, 21)

    def test_rect_orientation_swap(self):
        registry = default_registry()
        north = make_annotation(registry.get("stone"), "N")
        east = make_annotation(registry.get("stone"), "E")
        assert (north.w, north.h) == (22, 11)
        assert (east.w, east.h) == (11, 22)
        south = make_annotation(registry.get("stone"), "S")
        west = make_annotation(registry.get("stone"), "W")
        assert (south.w, south.h) == (north.w, north.h)
        assert (west.w, west.h) == (east.w, east.h)

    def test_circle_ignores_orientation(self):
        obj = obj_with(CircleFootprint(78.0))
        boxes = [make_annotation(obj, o) for o in ("N", "S", "W", "E")]
        for box in boxes[1:]:
            assert (box.x, box.y, box.w, box.h) == (
                boxes[0].x, boxes[0].y, boxes[0].w, boxes[0].h
            )
            assert np.array_equal(box.mask, boxes[0].mask)

    def test_pixel_rounding(self):
        # 78 mm -> 15.6 px -> 16; 56 mm -> 11.2 px -> 11
        box = make_annotation(obj_with(RectFootprint(78.0, 56.0)), "N")
        assert (box.w, box.h) == (16, 11)

    def test_tiny_footprint_clamps_to_one_pixel(self):
        box = make_annotation(obj_with(CircleFootprint(1.0)), "N")
        assert (box.w, box.h) == (1, 1)
        assert box.mask.all()

    def test_offset_shifts_center(self):
        obj = obj_with(CircleFootprint(95.0))
        base = make_annotation(obj, "N")
        moved = make_annotation(obj, "N", offset_mm=(10.0, -15.0))
        assert moved.x - base.x == 2
        assert moved.y - base.y == -3
        assert (moved.w, moved.h) == (base.w, base.h)

    def test_out_of_grid_rejected(self):
        obj = obj_with(CircleFootprint(95.0))
        with pytest.raises(AnnotationError, match="grid"):
            make_annotation(obj, "N", offset_mm=(130.0, 0.0))

    def test_footprint_larger_than_grid_rejected(self):
        obj = obj_with(CircleFootprint(400.0))
        with pytest.raises(AnnotationError):
            make_annotation(obj, "N", grid=GridSpec(rows=10, cols=10))

    def test_bad_orientation_rejected(self):
        with pytest.raises(ValueError, match="orientation"):
            make_annotation(obj_with(CircleFootprint(50.0)), "Q")

    def test_rect_mask_is_full_box(self):
        box = make_annotation(obj_with(RectFootprint(60.0, 40.0)), "N")
        assert box.mask.all()
        assert box.mask.shape == (box.h, box.w)

    def test_disc_mask_matches_lattice_count(self):
        # Pixel count of the disc mask must equal the brute-force count of
        # lattice points within the radius, for every circular object.
        for obj in default_registry().objects:
            fp = obj.footprint
            if not isinstance(fp, CircleFootprint):
                continue
            box = make_annotation(obj, "N")
            assert box.mask.sum() == oracles.disc_pixel_count(box.w, box.h)

    def test_disc_mask_symmetry(self):
        box = make_annotation(obj_with(CircleFootprint(95.0)), "N")
        m = box.mask
        assert np.array_equal(m, m[::-1, :])
        assert np.array_equal(m, m[:, ::-1])
        assert np.array_equal(m, m.T)


class TestRle:
    def test_leading_zeros_convention(self):
        mask = np.array([[False, True, True, False]])
        assert rle_encode(mask) == [1, 2, 1]

    def test_starts_with_ones_gets_zero_prefix(self):
        mask = np.array([[True, True, False]])
        assert rle_encode(mask) == [0, 2, 1]

    def test_row_major_wrap(self):
        mask = np.array([[False, True], [True, False]])
        assert rle_encode(mask) == [1, 2, 1]

    def test_all_zero_and_all_one(self):
        assert rle_encode(np.zeros((2, 3), dtype=bool)) == [6]
        assert rle_encode(np.ones((2, 3), dtype=bool)) == [0, 6]

    def test_round_trip_random(self):
        for seed in range(50):
            local = np.random.default_rng(seed)
            mask = local.random((7, 11)) < 0.4
            counts = rle_encode(mask)
            assert np.array_equal(rle_decode(counts, mask.shape), mask)
            # counts alternate, so adjacent zero runs must not appear
            assert all(c > 0 for c in counts[1:])

    def test_decode_validates_total(self):
        with pytest.raises(ValueError, match="sum"):
            rle_decode([1, 2], (2, 2))

    def test_decode_validates_counts(self):
        with pytest.raises(ValueError, match="negative"):
            rle_decode([-1, 5], (2, 2))

    def test_annotation_masks_round_trip(self):
        for obj in default_registry().objects:
            box = make_annotation(obj, "N")
            counts = rle_encode(box.mask)
            assert np.array_equal(rle_decode(counts, box.mask.shape), box.mask)
