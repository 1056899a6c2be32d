"""Non-maximum suppression can propagate a change to far-away detections.

Three overlapping boxes A > B > C by score, arranged so A suppresses B and
B would suppress C, while A and C barely overlap.  With all three present
the greedy sweep keeps {A, C}.  Remove A and suddenly B survives and kills
C - a detection whose IoU with the removed box is near zero disappears.

Run with:  python3 demos/03_nms_chain_reaction.py
"""

from transplant_bench.detector import Detection
from transplant_bench.matching import iou
from transplant_bench.nms import NmsConfig, chain_reaction_probe, greedy_nms


def main():
    a = Detection(box=(0, 0, 10, 10), score=0.9, category_id=1, category_name="A")
    b = Detection(box=(4, 0, 14, 10), score=0.8, category_id=1, category_name="B")
    c = Detection(box=(8, 0, 18, 10), score=0.7, category_id=1, category_name="C")
    cfg = NmsConfig(iou_threshold=0.4)

    print("pairwise IoU:")
    for left, right in ((a, b), (b, c), (a, c)):
        print(
            f"  {left.category_name}-{right.category_name}: "
            f"{iou(left.box, right.box):.3f}"
        )

    kept = greedy_nms([a, b, c], cfg)
    print(f"\nkept with all three present: {[d.category_name for d in kept]}")

    before, after, surfaced, suppressed = chain_reaction_probe([a, b, c], 0, cfg)
    names = {0: "A", 1: "B", 2: "C"}
    print(f"kept after removing A:       {[d.category_name for d in after]}")
    print(f"newly surfaced:   {[names[i] for i in surfaced]}")
    print(f"newly suppressed: {[names[i] for i in suppressed]}")
    print(
        "\nC overlaps A by only "
        f"{iou(a.box, c.box):.3f} IoU, yet removing A makes C vanish: "
        "B is no longer suppressed and wins the sweep against C"
    )


if __name__ == "__main__":
    main()
