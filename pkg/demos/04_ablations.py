"""Context-removal ablations around a single annotated object.

Starting from a scene with one annotated rectangle, produce the three
ablation variants: everything outside the bounding box zeroed, only the
mask-foreground pixels kept, and mask-foreground on a noise background.
The variants isolate how much a detector relies on surrounding context
versus the object's own pixels.

Run with:  python3 demos/04_ablations.py OUTPUT_DIR
"""

import sys
from pathlib import Path

import numpy as np

from transplant_bench.compositing import (
    ablate_non_object_inside_box,
    ablate_outside_box,
)
from transplant_bench.detector import stub_detect
from transplant_bench.pngio import save_png


def build_scene():
    scene = np.full((96, 96, 3), 255, dtype=np.uint8)
    scene[12:30, 10:50] = (200, 200, 200)  # background clutter
    scene[40:70, 30:60] = (255, 0, 0)  # the object of interest
    mask = np.zeros((96, 96), dtype=bool)
    mask[40:70, 30:60] = True
    return scene, mask, (25, 35, 65, 75)  # box padded beyond the object


def main():
    out_dir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("ablation-demo")
    out_dir.mkdir(parents=True, exist_ok=True)
    scene, mask, box = build_scene()

    variants = {
        "original": scene,
        "outside-zero": ablate_outside_box(scene, box, mode="zero"),
        "mask-only": ablate_non_object_inside_box(
            ablate_outside_box(scene, box, mode="zero"), box, mask
        ),
        "mask-plus-noise": ablate_outside_box(
            ablate_non_object_inside_box(scene, box, mask),
            box,
            mode="noise",
            seed=0,
        ),
    }
    print(f"{'variant':<16} {'detections':>10}  file")
    for name, image in variants.items():
        path = out_dir / f"{name}.png"
        save_png(image, path)
        found = stub_detect(image, name).detections
        labels = ", ".join(d.category_name for d in found) or "-"
        print(f"{name:<16} {labels:>10}  {path}")
    print(
        "\nthe rectangle detector still finds the object in every variant"
        " because it ignores context entirely; a learned detector typically"
        " degrades as the surroundings are stripped away"
    )


if __name__ == "__main__":
    main()
