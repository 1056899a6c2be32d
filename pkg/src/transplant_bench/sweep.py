"""Translation-grid enumeration and test-case generation.

A sweep takes one base image and one source instance, places the
instance's sprite at every grid translation that keeps it fully inside
the base image, and streams the generated images together with their
provenance records. The unmodified base image is emitted once as the
null case so the original detections are always produced by the same
detector configuration.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from transplant_bench.compositing import Translation, extract_sprite, transplant
from transplant_bench.dataset import DatasetIndex, Instance, load_image


class SweepError(Exception):
    pass


@dataclass(frozen=True)
class SweepConfig:
    stride: int = 10
    min_area_fraction: float = 0.01
    max_area_fraction: float = 0.30
    exclude_crowd: bool = True
    seed: int = 0
    confidence_threshold: float = 0.5

    def __post_init__(self):
        if self.stride < 1:
            raise ValueError("stride must be >= 1")
        if not (0.0 < self.min_area_fraction < self.max_area_fraction <= 1.0):
            raise ValueError("need 0 < min_area_fraction < max_area_fraction <= 1")


@dataclass(frozen=True)
class TestCase:
    """Provenance record binding a generated image to how it was made."""

    case_id: str
    base_image_id: int
    source_image_id: int
    instance_id: int
    translation: Translation | None  # None for the null (unmodified) case
    variant: str  # transplant | duplicate | null
    t_box: tuple[int, int, int, int] | None  # sprite placement rectangle


def _case_id(variant, base_image_id, source_image_id, instance_id, translation):
    stem = f"{variant}-b{base_image_id}-j{source_image_id}-i{instance_id}"
    if translation is None:
        return stem
    return f"{stem}-x{translation.t_x}-y{translation.t_y}"


def _axis_positions(limit: int, k: int) -> list[int]:
    """Multiples of k up to limit, with limit itself always included."""
    positions = list(range(0, limit + 1, k))
    if positions[-1] != limit:
        positions.append(limit)
    return positions


def enumerate_translations(base_dims, sprite_dims, k) -> list[Translation]:
    """All grid placements keeping the sprite fully inside the base.

    base_dims and sprite_dims are (width, height). The grid is multiples
    of k on each axis, clipped to the far boundary, with the boundary
    itself appended when it is not already a multiple; ordered row-major.
    """
    bw, bh = base_dims
    sw, sh = sprite_dims
    if sw > bw or sh > bh:
        raise ValueError(f"sprite {sw}x{sh} larger than base {bw}x{bh}")
    xs = _axis_positions(bw - sw, k)
    ys = _axis_positions(bh - sh, k)
    return [Translation(t_x=x, t_y=y) for y in ys for x in xs]


def sprite_dims_of(instance: Instance) -> tuple[int, int]:
    """Sprite crop dimensions: the instance bbox rounded outward."""
    x, y, w, h = instance.bbox
    return (
        int(math.ceil(x + w)) - int(math.floor(x)),
        int(math.ceil(y + h)) - int(math.floor(y)),
    )


def eligible_instance(instance: Instance, base_dims, cfg: SweepConfig):
    """Decide whether an instance may be transplanted onto a base image.

    Returns (accepted, reason). Rejects sprites taking more than
    max_area_fraction of the base (degenerate translation count), less
    than min_area_fraction (no distinguishing visual features), crowd
    annotations when configured, and sprites that do not fit at all.
    """
    bw, bh = base_dims
    sw, sh = sprite_dims_of(instance)
    if cfg.exclude_crowd and instance.iscrowd:
        return False, "crowd"
    if sw > bw or sh > bh:
        return False, "does-not-fit"
    fraction = (sw * sh) / (bw * bh)
    if fraction > cfg.max_area_fraction:
        return False, "too-large"
    if fraction < cfg.min_area_fraction:
        return False, "too-small"
    return True, "ok"


def _select_instance(
    dataset: DatasetIndex, base_image_id, cfg: SweepConfig, duplicate: bool,
    source_image_id: int | None = None, max_draws: int = 100,
):
    """Seeded random draw of an eligible source instance."""
    info = dataset.images[base_image_id]
    base_dims = (info.width, info.height)
    if duplicate:
        candidates = list(dataset.by_image.get(base_image_id, []))
    elif source_image_id is not None:
        candidates = list(dataset.by_image.get(source_image_id, []))
    else:
        candidates = [
            iid
            for iid, inst in dataset.instances.items()
            if inst.image_id != base_image_id
        ]
    candidates.sort()
    rng = np.random.default_rng(cfg.seed)
    rng.shuffle(candidates)
    for iid in candidates[:max_draws]:
        ok, _ = eligible_instance(dataset.instances[iid], base_dims, cfg)
        if ok:
            return iid
    raise SweepError(
        f"no eligible source instance for base image {base_image_id} "
        f"after {min(len(candidates), max_draws)} draws"
    )


def generate_sweep(
    dataset: DatasetIndex,
    base_image_id: int,
    cfg: SweepConfig,
    instance_id: int | None = None,
    duplicate: bool = False,
    source_image_id: int | None = None,
) -> Iterator[tuple[TestCase, np.ndarray]]:
    """Stream (TestCase, image) for every grid translation plus the null case.

    With duplicate=True the source instance comes from the base image
    itself; otherwise it is transplanted from another image. When
    instance_id is None an eligible instance is drawn with the config
    seed, so the whole stream is reproducible from (dataset, ids, seed,
    config).
    """
    if instance_id is None:
        instance_id = _select_instance(
            dataset, base_image_id, cfg, duplicate, source_image_id
        )
    instance = dataset.instances[instance_id]
    if duplicate and instance.image_id != base_image_id:
        raise SweepError("duplicate sweep needs an instance from the base image")
    info = dataset.images[base_image_id]
    ok, reason = eligible_instance(instance, (info.width, info.height), cfg)
    if not ok:
        raise SweepError(f"instance {instance_id} not eligible: {reason}")

    base = load_image(dataset, base_image_id)
    if duplicate:
        sprite = extract_sprite(base, instance)
        variant = "duplicate"
    else:
        source = load_image(dataset, instance.image_id)
        sprite = extract_sprite(source, instance)
        variant = "transplant"

    null_case = TestCase(
        case_id=_case_id("null", base_image_id, instance.image_id, instance_id, None),
        base_image_id=base_image_id,
        source_image_id=instance.image_id,
        instance_id=instance_id,
        translation=None,
        variant="null",
        t_box=None,
    )
    yield null_case, base

    for t in enumerate_translations(
        (info.width, info.height), (sprite.width, sprite.height), cfg.stride
    ):
        case = TestCase(
            case_id=_case_id(variant, base_image_id, instance.image_id, instance_id, t),
            base_image_id=base_image_id,
            source_image_id=instance.image_id,
            instance_id=instance_id,
            translation=t,
            variant=variant,
            t_box=(t.t_x, t.t_y, t.t_x + sprite.width, t.t_y + sprite.height),
        )
        yield case, transplant(base, sprite, t)


# ---------------------------------------------------------------------------
# Sweep manifest (line-delimited records alongside the generated images)


def manifest_record(case: TestCase, path: str) -> str:
    record = {
        "case_id": case.case_id,
        "variant": case.variant,
        "base_image_id": case.base_image_id,
        "source_image_id": case.source_image_id,
        "instance_id": case.instance_id,
        "t_x": None if case.translation is None else case.translation.t_x,
        "t_y": None if case.translation is None else case.translation.t_y,
        "t_box": None if case.t_box is None else list(case.t_box),
        "path": path,
    }
    return json.dumps(record, separators=(",", ":"))


def load_manifest(path) -> list[dict]:
    records = []
    with open(path) as f:
        for line in f:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return records
