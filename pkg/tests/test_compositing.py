import numpy as np
import pytest

from transplant_bench.compositing import (
    Sprite,
    Translation,
    ablate_non_object_inside_box,
    ablate_outside_box,
    duplicate_within,
    extract_sprite,
    transplant,
)
from transplant_bench.dataset import Instance


def _instance(image_id, bbox, mask, instance_id=1, category=("thing", 1)):
    name, cid = category
    return Instance(
        instance_id=instance_id,
        image_id=image_id,
        category_id=cid,
        category_name=name,
        bbox=bbox,
        mask=mask,
        area=float(mask.sum()),
    )


def _random_image(rng, h, w):
    return rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8)


class TestExtractSprite:
    def test_full_box_mask(self):
        rng = np.random.default_rng(0)
        image = _random_image(rng, 10, 10)
        mask = np.zeros((10, 10), dtype=bool)
        mask[2:6, 3:8] = True
        sprite = extract_sprite(image, _instance(1, (3, 2, 5, 4), mask))
        assert sprite.mask.all()
        assert sprite.pixels.shape == (4, 5, 3)

    def test_foreground_count_preserved(self):
        rng = np.random.default_rng(1)
        image = _random_image(rng, 12, 12)
        mask = np.zeros((12, 12), dtype=bool)
        mask[4:6, 4:7] = True  # 6 pixels
        sprite = extract_sprite(image, _instance(1, (4, 4, 3, 2), mask))
        assert int(sprite.mask.sum()) == 6

    def test_pixels_equal_source_at_offset(self):
        rng = np.random.default_rng(2)
        image = _random_image(rng, 20, 16)
        mask = rng.random((20, 16)) < 0.5
        mask[:5] = False
        mask[10:] = False
        mask[:, :3] = False
        mask[:, 12:] = False
        mask[6, 5] = True  # guarantee foreground
        inst = _instance(1, (3, 5, 9, 5), mask)
        sprite = extract_sprite(image, inst)
        for r in range(sprite.height):
            for c in range(sprite.width):
                if sprite.mask[r, c]:
                    assert (sprite.pixels[r, c] == image[5 + r, 3 + c]).all()

    def test_empty_mask_rejected(self):
        image = np.zeros((8, 8, 3), dtype=np.uint8)
        mask = np.zeros((8, 8), dtype=bool)
        with pytest.raises(ValueError):
            extract_sprite(image, _instance(1, (1, 1, 3, 3), mask))


class TestTransplant:
    def test_empty_mask_sprite_is_identity(self):
        rng = np.random.default_rng(3)
        base = _random_image(rng, 8, 8)
        # bypass the extraction-time invariant to probe the paste path
        sprite = Sprite(
            pixels=np.zeros((3, 3, 3), dtype=np.uint8),
            mask=np.zeros((3, 3), dtype=bool),
            source_instance_id=0,
            source_image_id=0,
        )
        out = transplant(base, sprite, Translation(2, 2))
        assert np.array_equal(out, base)

    def test_full_mask_paste_changes_exactly_sprite_area(self):
        base = np.zeros((4, 4, 3), dtype=np.uint8)
        sprite = Sprite(
            pixels=np.full((2, 2, 3), 200, dtype=np.uint8),
            mask=np.ones((2, 2), dtype=bool),
            source_instance_id=0,
            source_image_id=0,
        )
        out = transplant(base, sprite, Translation(0, 0))
        differing = (out != base).any(axis=2)
        assert int(differing.sum()) == 4

    def test_per_pixel_formula(self):
        rng = np.random.default_rng(4)
        base = _random_image(rng, 32, 32)
        pixels = _random_image(rng, 8, 8)
        mask = rng.random((8, 8)) < 0.5
        sprite = Sprite(pixels=pixels, mask=mask, source_instance_id=0, source_image_id=0)
        t = Translation(int(rng.integers(0, 25)), int(rng.integers(0, 25)))
        out = transplant(base, sprite, t)
        for y in range(32):
            for x in range(32):
                inside = t.t_x <= x < t.t_x + 8 and t.t_y <= y < t.t_y + 8
                if inside and mask[y - t.t_y, x - t.t_x]:
                    expected = pixels[y - t.t_y, x - t.t_x]
                else:
                    expected = base[y, x]
                assert (out[y, x] == expected).all()

    def test_base_not_mutated(self):
        rng = np.random.default_rng(5)
        base = _random_image(rng, 16, 16)
        saved = base.copy()
        sprite = Sprite(
            pixels=_random_image(rng, 4, 4),
            mask=np.ones((4, 4), dtype=bool),
            source_instance_id=0,
            source_image_id=0,
        )
        transplant(base, sprite, Translation(1, 1))
        assert np.array_equal(base, saved)

    def test_out_of_bounds_rejected(self):
        base = np.zeros((8, 8, 3), dtype=np.uint8)
        sprite = Sprite(
            pixels=np.zeros((4, 4, 3), dtype=np.uint8),
            mask=np.ones((4, 4), dtype=bool),
            source_instance_id=0,
            source_image_id=0,
        )
        with pytest.raises(ValueError):
            transplant(base, sprite, Translation(6, 0))

    def test_two_translations_agree_with_base_outside_placements(self):
        rng = np.random.default_rng(6)
        base = _random_image(rng, 24, 24)
        sprite = Sprite(
            pixels=_random_image(rng, 5, 5),
            mask=np.ones((5, 5), dtype=bool),
            source_instance_id=0,
            source_image_id=0,
        )
        for t in (Translation(0, 0), Translation(10, 12)):
            out = transplant(base, sprite, t)
            outside = np.ones((24, 24), dtype=bool)
            outside[t.t_y : t.t_y + 5, t.t_x : t.t_x + 5] = False
            assert np.array_equal(out[outside], base[outside])


class TestDuplicateWithin:
    def _setup(self):
        rng = np.random.default_rng(7)
        image = _random_image(rng, 20, 20)
        mask = np.zeros((20, 20), dtype=bool)
        mask[2:6, 2:6] = True
        image[2:6, 2:6] = (255, 0, 0)
        inst = _instance(1, (2, 2, 4, 4), mask)
        return image, inst

    def test_self_overwrite_is_identity(self):
        image, inst = self._setup()
        out = duplicate_within(image, inst, Translation(2, 2))
        assert np.array_equal(out, image)

    def test_disjoint_copy(self):
        image, inst = self._setup()
        out = duplicate_within(image, inst, Translation(10, 10))
        assert np.array_equal(out[2:6, 2:6], image[2:6, 2:6])
        assert np.array_equal(out[10:14, 10:14], image[2:6, 2:6])

    def test_overlapping_copy_formula(self):
        image, inst = self._setup()
        t = Translation(4, 3)
        out = duplicate_within(image, inst, t)
        sprite_pixels = image[2:6, 2:6]
        for y in range(20):
            for x in range(20):
                inside = t.t_x <= x < t.t_x + 4 and t.t_y <= y < t.t_y + 4
                expected = sprite_pixels[y - t.t_y, x - t.t_x] if inside else image[y, x]
                assert (out[y, x] == expected).all()


class TestAblations:
    def test_full_box_is_identity(self):
        rng = np.random.default_rng(8)
        image = _random_image(rng, 10, 12)
        for mode in ("zero", "noise"):
            out = ablate_outside_box(image, (0, 0, 12, 10), mode=mode, seed=1)
            assert np.array_equal(out, image)

    def test_zero_mode_region_split(self):
        rng = np.random.default_rng(9)
        image = _random_image(rng, 10, 10)
        out = ablate_outside_box(image, (0, 0, 5, 10), mode="zero")
        assert np.array_equal(out[:, :5], image[:, :5])
        assert (out[:, 5:] == 0).all()

    def test_noise_mode_deterministic(self):
        rng = np.random.default_rng(10)
        image = _random_image(rng, 10, 10)
        a = ablate_outside_box(image, (2, 2, 6, 6), mode="noise", seed=42)
        b = ablate_outside_box(image, (2, 2, 6, 6), mode="noise", seed=42)
        assert np.array_equal(a, b)

    def test_box_fully_outside_rejected(self):
        image = np.zeros((5, 5, 3), dtype=np.uint8)
        with pytest.raises(ValueError):
            ablate_outside_box(image, (10, 10, 12, 12))

    def test_non_object_all_foreground_is_identity(self):
        rng = np.random.default_rng(11)
        image = _random_image(rng, 8, 8)
        mask = np.ones((8, 8), dtype=bool)
        out = ablate_non_object_inside_box(image, (1, 1, 6, 6), mask)
        assert np.array_equal(out, image)

    def test_non_object_all_background_blanks_box(self):
        rng = np.random.default_rng(12)
        image = _random_image(rng, 8, 8)
        mask = np.zeros((8, 8), dtype=bool)
        out = ablate_non_object_inside_box(image, (1, 1, 6, 6), mask)
        assert (out[1:6, 1:6] == 0).all()
        outside = np.ones((8, 8), dtype=bool)
        outside[1:6, 1:6] = False
        assert np.array_equal(out[outside], image[outside])

    def test_non_object_random_mask_formula(self):
        rng = np.random.default_rng(13)
        image = _random_image(rng, 12, 12)
        mask = rng.random((12, 12)) < 0.5
        box = (2, 3, 9, 10)
        out = ablate_non_object_inside_box(image, box, mask)
        for y in range(12):
            for x in range(12):
                in_box = box[0] <= x < box[2] and box[1] <= y < box[3]
                if in_box and not mask[y, x]:
                    assert (out[y, x] == 0).all()
                else:
                    assert (out[y, x] == image[y, x]).all()

    def test_dimension_mismatch_rejected(self):
        image = np.zeros((8, 8, 3), dtype=np.uint8)
        with pytest.raises(ValueError):
            ablate_non_object_inside_box(image, (0, 0, 4, 4), np.zeros((4, 4), dtype=bool))
