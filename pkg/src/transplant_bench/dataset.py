"""COCO-style dataset ingestion: annotation parsing and mask decoding.

Supports all three segmentation encodings found in COCO instance
annotations: polygon lists, uncompressed RLE (integer run lengths in
column-major pixel order, background first) and the compressed RLE string
encoding (5-bit little-endian groups, 6 bits per character offset by ASCII
48, with delta coding for later counts).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class DatasetError(Exception):
    """Unrecoverable problem with an annotation document."""


class RleError(ValueError):
    """Malformed run-length-encoded segmentation."""


# Relative tolerance between decoded foreground count and the annotation's
# area field. COCO area values are rasterization-derived and inexact.
AREA_RTOL = 0.02

# Rasterization slack (pixels) allowed between mask foreground and bbox.
BBOX_SLACK = 1.0


@dataclass(frozen=True)
class ImageInfo:
    image_id: int
    file_name: str
    path: Path
    width: int
    height: int


@dataclass(frozen=True)
class Instance:
    """One annotated object: category, box, and decoded binary mask."""

    instance_id: int
    image_id: int
    category_id: int
    category_name: str
    bbox: tuple[float, float, float, float]  # (x, y, w, h), top-left origin
    mask: np.ndarray  # bool, (H, W) of the annotated image
    area: float
    iscrowd: bool = False
    encoding: str = "polygon"  # polygon | rle | compressed_rle


@dataclass(frozen=True)
class RejectedInstance:
    instance_id: int | None
    image_id: int | None
    reason: str


@dataclass(frozen=True)
class DatasetIndex:
    """Validated, immutable view of one COCO instances document."""

    images: dict[int, ImageInfo]
    instances: dict[int, Instance]
    by_image: dict[int, list[int]]
    categories: dict[int, str]
    rejected: list[RejectedInstance] = field(default_factory=list)
    missing_images: list[int] = field(default_factory=list)


# ---------------------------------------------------------------------------
# RLE decoding / encoding


def decode_uncompressed_rle(counts, height, width):
    """Decode COCO uncompressed RLE counts into a bool mask.

    Counts alternate background-first run lengths over the pixels in
    column-major order.
    """
    counts = [int(c) for c in counts]
    if any(c < 0 for c in counts):
        raise RleError("negative run length")
    if sum(counts) != height * width:
        raise RleError(
            f"run lengths sum to {sum(counts)}, expected {height * width}"
        )
    values = np.zeros(len(counts), dtype=bool)
    values[1::2] = True
    flat = np.repeat(values, counts)
    # column-major: flat index = col * height + row
    return flat.reshape(width, height).T.copy()


def mask_to_rle_counts(mask):
    """Inverse of :func:`decode_uncompressed_rle` (background-first counts)."""
    flat = np.asarray(mask, dtype=bool).T.ravel()
    if flat.size == 0:
        return [0]
    change = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    bounds = np.concatenate(([0], change, [flat.size]))
    counts = np.diff(bounds).tolist()
    if flat[0]:
        counts.insert(0, 0)
    return [int(c) for c in counts]


def _counts_to_string(counts):
    """Compressed-RLE character stream for a counts list (COCO convention)."""
    out = []
    for i, c in enumerate(counts):
        x = int(c)
        if i > 2:
            x -= int(counts[i - 2])
        more = True
        while more:
            ch = x & 0x1F
            x >>= 5
            more = (x != -1) if (ch & 0x10) else (x != 0)
            if more:
                ch |= 0x20
            out.append(chr(ch + 48))
    return "".join(out)


def _string_to_counts(encoded):
    counts: list[int] = []
    p = 0
    n = len(encoded)
    while p < n:
        x = 0
        k = 0
        more = True
        while more:
            if p >= n:
                raise RleError("truncated compressed RLE stream")
            c = ord(encoded[p]) - 48
            if c < 0 or c > 63:
                raise RleError(f"invalid RLE character at position {p}")
            x |= (c & 0x1F) << (5 * k)
            more = bool(c & 0x20)
            p += 1
            k += 1
            if not more and (c & 0x10):
                x |= -1 << (5 * k)
        if len(counts) > 2:
            x += counts[-2]
        counts.append(x)
    return counts


def decode_compressed_rle(encoded, height, width):
    """Decode COCO compressed (string) RLE into a bool mask."""
    counts = _string_to_counts(encoded)
    return decode_uncompressed_rle(counts, height, width)


def encode_compressed_rle(mask):
    """Encode a bool mask as a COCO compressed RLE string."""
    return _counts_to_string(mask_to_rle_counts(mask))


# ---------------------------------------------------------------------------
# Polygon rasterization


def rasterize_polygons(polygons, height, width):
    """Rasterize a union of polygons into a bool mask.

    Each polygon is a flat [x0, y0, x1, y1, ...] or (N, 2) vertex sequence.
    A pixel is foreground when its center lies inside any polygon under the
    even-odd rule; vertices marginally outside the image are clamped.
    """
    if not polygons:
        raise ValueError("empty polygon list")
    mask = np.zeros((height, width), dtype=bool)
    centers_x = np.arange(width) + 0.5
    for poly in polygons:
        pts = np.asarray(poly, dtype=float).reshape(-1, 2)
        if pts.shape[0] < 3:
            raise ValueError("polygon needs at least 3 vertices")
        px = np.clip(pts[:, 0], 0.0, float(width))
        py = np.clip(pts[:, 1], 0.0, float(height))
        x1, y1 = px, py
        x2, y2 = np.roll(px, -1), np.roll(py, -1)
        ymin = np.minimum(y1, y2)
        ymax = np.maximum(y1, y2)
        for row in range(height):
            yc = row + 0.5
            # half-open rule: edge crosses the scanline when ymin <= yc < ymax
            hit = (ymin <= yc) & (yc < ymax)
            if not hit.any():
                continue
            xs = x1[hit] + (yc - y1[hit]) * (x2[hit] - x1[hit]) / (y2[hit] - y1[hit])
            xs.sort()
            # inside when the number of crossings strictly left of the
            # pixel center is odd
            inside = (np.searchsorted(xs, centers_x, side="left") % 2).astype(bool)
            mask[row] |= inside
    return mask


def decode_segmentation(segmentation, height, width):
    """Decode any COCO segmentation value into (mask, encoding-name)."""
    if isinstance(segmentation, list):
        return rasterize_polygons(segmentation, height, width), "polygon"
    if isinstance(segmentation, dict):
        counts = segmentation.get("counts")
        size = segmentation.get("size")
        if size is not None and tuple(size) != (height, width):
            raise RleError(f"RLE size {size} does not match image {height}x{width}")
        if isinstance(counts, str):
            return decode_compressed_rle(counts, height, width), "compressed_rle"
        if isinstance(counts, list):
            return decode_uncompressed_rle(counts, height, width), "rle"
    raise RleError(f"unknown segmentation encoding: {type(segmentation).__name__}")


# ---------------------------------------------------------------------------
# Loading


def _validate_instance(inst: Instance, info: ImageInfo) -> str | None:
    """Return a rejection reason, or None when the instance is valid."""
    x, y, w, h = inst.bbox
    if w <= 0 or h <= 0:
        return "degenerate-bbox"
    if (
        x < -BBOX_SLACK
        or y < -BBOX_SLACK
        or x + w > info.width + BBOX_SLACK
        or y + h > info.height + BBOX_SLACK
    ):
        return "bbox-outside-image"
    fg = int(inst.mask.sum())
    if fg == 0:
        return "empty-mask"
    rows, cols = np.nonzero(inst.mask)
    if (
        cols.min() < x - BBOX_SLACK
        or rows.min() < y - BBOX_SLACK
        or cols.max() + 1 > x + w + BBOX_SLACK
        or rows.max() + 1 > y + h + BBOX_SLACK
    ):
        return "mask-outside-bbox"
    if inst.area > 0 and abs(fg - inst.area) / inst.area > AREA_RTOL:
        return f"area-mismatch: annotated {inst.area}, decoded {fg}"
    return None


def load_dataset(annotations_path, images_root) -> DatasetIndex:
    """Load and validate a COCO instances document.

    Instances violating the Instance invariants are rejected and reported in
    ``DatasetIndex.rejected``; image entries whose file is missing under
    ``images_root`` are reported in ``missing_images``. Neither aborts the
    load.
    """
    annotations_path = Path(annotations_path)
    images_root = Path(images_root)
    try:
        with open(annotations_path) as f:
            doc = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise DatasetError(f"cannot read annotations {annotations_path}: {e}") from e
    for key in ("images", "annotations", "categories"):
        if key not in doc:
            raise DatasetError(f"annotations document missing '{key}' array")

    categories = {int(c["id"]): str(c["name"]) for c in doc["categories"]}

    images: dict[int, ImageInfo] = {}
    missing: list[int] = []
    for entry in doc["images"]:
        image_id = int(entry["id"])
        path = images_root / entry["file_name"]
        images[image_id] = ImageInfo(
            image_id=image_id,
            file_name=str(entry["file_name"]),
            path=path,
            width=int(entry["width"]),
            height=int(entry["height"]),
        )
        if not path.is_file():
            missing.append(image_id)

    instances: dict[int, Instance] = {}
    by_image: dict[int, list[int]] = {image_id: [] for image_id in images}
    rejected: list[RejectedInstance] = []
    for ann in doc["annotations"]:
        ann_id = int(ann["id"])
        image_id = int(ann["image_id"])
        info = images.get(image_id)
        if info is None:
            rejected.append(RejectedInstance(ann_id, image_id, "unknown-image"))
            continue
        category_id = int(ann["category_id"])
        if category_id not in categories:
            rejected.append(RejectedInstance(ann_id, image_id, "unknown-category"))
            continue
        try:
            mask, encoding = decode_segmentation(
                ann["segmentation"], info.height, info.width
            )
        except (RleError, ValueError, KeyError) as e:
            rejected.append(RejectedInstance(ann_id, image_id, f"bad-segmentation: {e}"))
            continue
        mask.setflags(write=False)
        inst = Instance(
            instance_id=ann_id,
            image_id=image_id,
            category_id=category_id,
            category_name=categories[category_id],
            bbox=tuple(float(v) for v in ann["bbox"]),
            mask=mask,
            area=float(ann.get("area", mask.sum())),
            iscrowd=bool(ann.get("iscrowd", 0)),
            encoding=encoding,
        )
        reason = _validate_instance(inst, info)
        if reason is not None:
            rejected.append(RejectedInstance(ann_id, image_id, reason))
            continue
        instances[ann_id] = inst
        by_image[image_id].append(ann_id)

    return DatasetIndex(
        images=images,
        instances=instances,
        by_image=by_image,
        categories=categories,
        rejected=rejected,
        missing_images=missing,
    )


def load_image(index: DatasetIndex, image_id: int) -> np.ndarray:
    """Load an image file as an RGB uint8 array."""
    from PIL import Image

    info = index.images[image_id]
    with Image.open(info.path) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.uint8)
    if arr.shape[:2] != (info.height, info.width):
        raise DatasetError(
            f"image {image_id}: file is {arr.shape[1]}x{arr.shape[0]}, "
            f"annotations say {info.width}x{info.height}"
        )
    return arr
