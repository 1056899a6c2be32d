"""Deterministic synthetic COCO-style corpus for tests and demos.

Images are white with a few solid colored rectangles that the stub
detector recognizes; annotations use all three segmentation encodings in
rotation. Everything is derived from a seed so fixtures are reproducible
byte for byte.
"""

import json
from pathlib import Path

import numpy as np

from transplant_bench.dataset import encode_compressed_rle, mask_to_rle_counts
from transplant_bench.pngio import save_png

COLORS = {
    1: ("red", (255, 0, 0)),
    2: ("green", (0, 255, 0)),
    3: ("blue", (0, 0, 255)),
    4: ("yellow", (255, 255, 0)),
    5: ("magenta", (255, 0, 255)),
    6: ("cyan", (0, 255, 255)),
}

ENCODINGS = ("polygon", "rle", "compressed_rle")


def _rect_segmentation(x, y, w, h, height, width, encoding):
    if encoding == "polygon":
        return [[x, y, x + w, y, x + w, y + h, x, y + h]]
    mask = np.zeros((height, width), dtype=bool)
    mask[y : y + h, x : x + w] = True
    if encoding == "rle":
        return {"counts": mask_to_rle_counts(mask), "size": [height, width]}
    return {"counts": encode_compressed_rle(mask), "size": [height, width]}


def build_corpus(
    root,
    seed=0,
    n_images=4,
    width=96,
    height=96,
    rects_per_image=(2, 3),
    rect_size=(12, 28),
    with_crowd=False,
):
    """Write images/ and annotations.json under root; returns their paths."""
    root = Path(root)
    images_dir = root / "images"
    images_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)

    images = []
    annotations = []
    ann_id = 1
    for image_id in range(1, n_images + 1):
        image = np.full((height, width, 3), 255, dtype=np.uint8)
        n_rects = int(rng.integers(rects_per_image[0], rects_per_image[1] + 1))
        placed = []
        for _ in range(n_rects):
            for _attempt in range(50):
                w = int(rng.integers(rect_size[0], rect_size[1] + 1))
                h = int(rng.integers(rect_size[0], rect_size[1] + 1))
                x = int(rng.integers(0, width - w + 1))
                y = int(rng.integers(0, height - h + 1))
                # keep rectangles separated so each stays a clean component
                if all(
                    x + w + 1 < px or px + pw + 1 < x or y + h + 1 < py or py + ph + 1 < y
                    for px, py, pw, ph in placed
                ):
                    break
            else:
                continue
            placed.append((x, y, w, h))
            category_id = int(rng.integers(1, len(COLORS) + 1))
            _, rgb = COLORS[category_id]
            image[y : y + h, x : x + w] = rgb
            encoding = ENCODINGS[ann_id % len(ENCODINGS)]
            annotations.append(
                {
                    "id": ann_id,
                    "image_id": image_id,
                    "category_id": category_id,
                    "bbox": [x, y, w, h],
                    "area": w * h,
                    "iscrowd": 0,
                    "segmentation": _rect_segmentation(
                        x, y, w, h, height, width, encoding
                    ),
                }
            )
            ann_id += 1
        if with_crowd and placed:
            x, y, w, h = placed[0]
            annotations.append(
                {
                    "id": ann_id,
                    "image_id": image_id,
                    "category_id": 1,
                    "bbox": [x, y, w, h],
                    "area": w * h,
                    "iscrowd": 1,
                    "segmentation": _rect_segmentation(
                        x, y, w, h, height, width, "rle"
                    ),
                }
            )
            ann_id += 1
        file_name = f"img_{image_id:04d}.png"
        save_png(image, images_dir / file_name)
        images.append(
            {"id": image_id, "file_name": file_name, "width": width, "height": height}
        )

    doc = {
        "images": images,
        "annotations": annotations,
        "categories": [
            {"id": cid, "name": name} for cid, (name, _) in sorted(COLORS.items())
        ],
    }
    annotations_path = root / "annotations.json"
    annotations_path.write_text(json.dumps(doc))
    return annotations_path, images_dir
