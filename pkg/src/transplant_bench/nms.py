"""Greedy non-maximum suppression and a chain-reaction probe.

The probe makes the suppression chain-reaction hypothesis executable:
removing (or attenuating) one detection before NMS and diffing the kept
sets shows how a local change can surface or suppress detections far away
from the removed one.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from transplant_bench.detector import Detection, _sort_key
from transplant_bench.matching import iou


@dataclass(frozen=True)
class NmsConfig:
    iou_threshold: float = 0.5
    class_aware: bool = True

    def __post_init__(self):
        if not (0.0 < self.iou_threshold < 1.0):
            raise ValueError("iou_threshold must lie in (0, 1)")


def greedy_nms(detections, cfg: NmsConfig = NmsConfig()) -> list[Detection]:
    """Standard greedy sweep in descending score order.

    A detection is suppressed when its overlap with an already-kept
    detection exceeds the threshold (same category required when
    class_aware). Ties in score are broken by the canonical detection
    ordering, so the result is deterministic.
    """
    kept: list[Detection] = []
    for det in sorted(detections, key=_sort_key):
        suppressed = any(
            (not cfg.class_aware or k.category_id == det.category_id)
            and iou(k.box, det.box) > cfg.iou_threshold
            for k in kept
        )
        if not suppressed:
            kept.append(det)
    return kept


def chain_reaction_probe(
    detections,
    removed_index: int,
    cfg: NmsConfig = NmsConfig(),
    mode: str = "remove",
    attenuation: float = 0.1,
):
    """Diff the NMS kept set before and after perturbing one detection.

    mode="remove" drops the detection entirely; mode="attenuate"
    multiplies its score by `attenuation` instead (a detection that loses
    confidence rather than vanishing). Returns (kept_before, kept_after,
    newly_surfaced, newly_suppressed) where the last two are indices into
    the input list, diffed by identity of the remaining detections.
    """
    detections = list(detections)
    if not (0 <= removed_index < len(detections)):
        raise IndexError(f"removed_index {removed_index} out of range")
    if mode == "remove":
        perturbed = [d for i, d in enumerate(detections) if i != removed_index]
    elif mode == "attenuate":
        perturbed = list(detections)
        target = perturbed[removed_index]
        perturbed[removed_index] = replace(target, score=target.score * attenuation)
    else:
        raise ValueError(f"unknown probe mode: {mode!r}")

    kept_before = greedy_nms(detections, cfg)
    kept_after = greedy_nms(perturbed, cfg)

    # Identity diff over the unperturbed detections; the perturbed one is
    # tracked under its original object when attenuated.
    before_ids = {id(detections[i]): i for i in range(len(detections))}
    if mode == "attenuate":
        before_ids[id(perturbed[removed_index])] = removed_index
    kept_before_idx = {before_ids[id(d)] for d in kept_before}
    kept_after_idx = {before_ids[id(d)] for d in kept_after}

    newly_surfaced = sorted(kept_after_idx - kept_before_idx)
    newly_suppressed = sorted(kept_before_idx - kept_after_idx)
    return kept_before, kept_after, newly_surfaced, newly_suppressed
