"""Pixel-level image manipulations: sprite extraction, transplanting,
same-image duplication, and the box/mask ablations.

All operations are pure: inputs are never mutated and identical inputs
(including seeds) produce bit-identical outputs. Compositing is hard-edged
by design: foreground pixels are copied verbatim, with no blending or
feathering at the sprite border.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from transplant_bench.dataset import Instance


@dataclass(frozen=True)
class Translation:
    """Placement origin (t_x, t_y) of a sprite in the base image."""

    t_x: int
    t_y: int

    def __post_init__(self):
        if self.t_x < 0 or self.t_y < 0:
            raise ValueError("translation components must be non-negative")


@dataclass(frozen=True)
class Sprite:
    """Bounding-box crop of an object plus its binary mask."""

    pixels: np.ndarray  # uint8 (h, w, 3)
    mask: np.ndarray  # bool (h, w)
    source_instance_id: int
    source_image_id: int

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


def _int_box(bbox, image_shape):
    """Round a float (x, y, w, h) bbox outward to integer pixel bounds."""
    x, y, w, h = bbox
    x0 = max(0, int(np.floor(x)))
    y0 = max(0, int(np.floor(y)))
    x1 = min(image_shape[1], int(np.ceil(x + w)))
    y1 = min(image_shape[0], int(np.ceil(y + h)))
    return x0, y0, x1, y1


def extract_sprite(image: np.ndarray, instance: Instance) -> Sprite:
    """Crop the instance's bbox out of its image along with its mask."""
    if instance.mask.shape != image.shape[:2]:
        raise ValueError("instance mask does not match image dimensions")
    x0, y0, x1, y1 = _int_box(instance.bbox, image.shape)
    if x1 <= x0 or y1 <= y0:
        raise ValueError("instance bbox lies outside the image")
    pixels = image[y0:y1, x0:x1].copy()
    mask = instance.mask[y0:y1, x0:x1].copy()
    if not mask.any():
        raise ValueError("sprite mask has no foreground pixels")
    pixels.setflags(write=False)
    mask.setflags(write=False)
    return Sprite(
        pixels=pixels,
        mask=mask,
        source_instance_id=instance.instance_id,
        source_image_id=instance.image_id,
    )


def transplant(base: np.ndarray, sprite: Sprite, t: Translation) -> np.ndarray:
    """Copy the sprite's mask-foreground pixels into a copy of the base.

    Output pixel (x, y) is sprite pixel (x - t_x, y - t_y) where that
    position is mask-foreground, and the base pixel everywhere else.
    """
    h, w = sprite.mask.shape
    bh, bw = base.shape[:2]
    if t.t_x + w > bw or t.t_y + h > bh:
        raise ValueError(
            f"sprite {w}x{h} at ({t.t_x}, {t.t_y}) exceeds base {bw}x{bh}"
        )
    out = base.copy()
    region = out[t.t_y : t.t_y + h, t.t_x : t.t_x + w]
    region[sprite.mask] = sprite.pixels[sprite.mask]
    return out


def duplicate_within(image: np.ndarray, instance: Instance, t: Translation) -> np.ndarray:
    """Copy an object to another location in its own image."""
    return transplant(image, extract_sprite(image, instance), t)


def ablate_outside_box(image: np.ndarray, box, mode="zero", seed=0) -> np.ndarray:
    """Replace everything outside an (x0, y0, x1, y1) rectangle.

    mode="zero" blanks the outside region; mode="noise" fills it with
    uniform independent uint8 samples from a generator seeded with `seed`.
    """
    x0, y0, x1, y1 = (int(v) for v in box)
    bh, bw = image.shape[:2]
    x0c, y0c = max(0, x0), max(0, y0)
    x1c, y1c = min(bw, x1), min(bh, y1)
    if x1c <= x0c or y1c <= y0c:
        raise ValueError("box does not intersect the image")
    if mode == "zero":
        out = np.zeros_like(image)
    elif mode == "noise":
        rng = np.random.default_rng(seed)
        out = rng.integers(0, 256, size=image.shape, dtype=np.uint8)
    else:
        raise ValueError(f"unknown ablation mode: {mode!r}")
    out[y0c:y1c, x0c:x1c] = image[y0c:y1c, x0c:x1c]
    return out


def ablate_non_object_inside_box(image: np.ndarray, box, mask: np.ndarray) -> np.ndarray:
    """Blank mask-background pixels inside the rectangle; leave the rest.

    Composes with :func:`ablate_outside_box` to isolate an object from both
    its in-box and out-of-box surroundings.
    """
    if mask.shape != image.shape[:2]:
        raise ValueError("mask does not match image dimensions")
    x0, y0, x1, y1 = (int(v) for v in box)
    bh, bw = image.shape[:2]
    x0c, y0c = max(0, x0), max(0, y0)
    x1c, y1c = min(bw, x1), min(bh, y1)
    out = image.copy()
    region = out[y0c:y1c, x0c:x1c]
    region[~mask[y0c:y1c, x0c:x1c]] = 0
    return out
