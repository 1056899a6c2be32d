"""Quantifying interpretation drift between two detection sets.

Given the detections on a modified image and on the original image, this
module builds a bipartite graph over the two sets (edges only between
overlapping boxes, optionally restricted to identical classes), finds an
exact maximum-weight matching, and reduces it to:

  - the match score S = sum(w) / max(n_mod - 1, n_orig), where the -1
    credits the transplanted object's own detection;
  - the set of newly introduced classes (the class-matching criterion);
  - occlusion coverage of each original box by the transplanted object.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from transplant_bench.detector import DetectionSet

_TIE_EPS = 1e-12


@dataclass(frozen=True)
class MatchResult:
    """Maximum-weight pairing between modified and original detections."""

    pairs: tuple[tuple[int, int, float], ...]  # (modified idx, original idx, weight)
    score: float
    unmatched_modified: tuple[int, ...]
    unmatched_original: tuple[int, ...]
    class_constrained: bool

    @property
    def total_weight(self) -> float:
        return math.fsum(w for _, _, w in self.pairs)


@dataclass(frozen=True)
class CoverageReport:
    """Per-box and maximal coverage of original boxes by the transplant."""

    per_box: tuple[tuple[int, float], ...]
    max_coverage: float


def iou(b1, b2) -> float:
    """Intersection-over-union of two corner-form boxes; 0 when disjoint."""
    ix = min(b1[2], b2[2]) - max(b1[0], b2[0])
    iy = min(b1[3], b2[3]) - max(b1[1], b2[1])
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    a1 = (b1[2] - b1[0]) * (b1[3] - b1[1])
    a2 = (b2[2] - b2[0]) * (b2[3] - b2[1])
    return inter / (a1 + a2 - inter)


def _max_weight(weights: np.ndarray, rows, cols) -> float:
    """Maximum matching weight over a subset of rows/cols of the edge matrix."""
    if not rows or not cols:
        return 0.0
    sub = weights[np.ix_(rows, cols)]
    ri, ci = linear_sum_assignment(sub, maximize=True)
    return math.fsum(sub[i, j] for i, j in zip(ri, ci))


def build_match(
    d_mod: DetectionSet,
    d_orig: DetectionSet,
    class_constrained: bool = True,
    weight_fn=iou,
) -> MatchResult:
    """Exact maximum-weight bipartite matching between two detection sets.

    Edges exist between cross-set pairs with positive overlap weight and,
    when class_constrained, identical category ids. Among all optimal
    matchings the lexicographically smallest pair-index set is returned,
    so the result is deterministic even under ties. Both sets are expected
    to be threshold-filtered by the same confidence cutoff already.
    """
    n_mod = len(d_mod.detections)
    n_orig = len(d_orig.detections)
    weights = np.zeros((n_mod, n_orig))
    for i, dm in enumerate(d_mod.detections):
        for j, do in enumerate(d_orig.detections):
            if class_constrained and dm.category_id != do.category_id:
                continue
            w = weight_fn(dm.box, do.box)
            if w > 0.0:
                weights[i, j] = w

    optimum = _max_weight(weights, list(range(n_mod)), list(range(n_orig)))

    # Fix pairs greedily in lexicographic order, keeping each pair only if
    # an optimal matching containing all fixed pairs still exists.
    pairs: list[tuple[int, int, float]] = []
    fixed = 0.0
    free_rows = list(range(n_mod))
    free_cols = list(range(n_orig))
    for i in range(n_mod):
        if i not in free_rows:
            continue
        for j in range(n_orig):
            if j not in free_cols or weights[i, j] <= 0.0:
                continue
            cand_rows = [r for r in free_rows if r != i]
            cand_cols = [c for c in free_cols if c != j]
            total = math.fsum(
                [fixed, weights[i, j], _max_weight(weights, cand_rows, cand_cols)]
            )
            if total >= optimum - _TIE_EPS * max(1.0, abs(optimum)):
                pairs.append((i, j, float(weights[i, j])))
                fixed = math.fsum(w for _, _, w in pairs)
                free_rows = cand_rows
                free_cols = cand_cols
                break

    score = match_score_value(fixed, n_mod, n_orig)
    return MatchResult(
        pairs=tuple(pairs),
        score=score,
        unmatched_modified=tuple(free_rows),
        unmatched_original=tuple(free_cols),
        class_constrained=class_constrained,
    )


def match_score_value(total_weight: float, n_mod: int, n_orig: int) -> float:
    """S = sum(w) / max(n_mod - 1, n_orig); 1 when the denominator vanishes.

    The -1 keeps the score from being reduced by the detection of the
    transplanted object itself; an empty scene that stays empty counts as
    unaffected (S = 1).
    """
    denom = max(n_mod - 1, n_orig)
    if denom <= 0:
        return 1.0
    return total_weight / denom


def match_score(m: MatchResult, n_mod: int, n_orig: int) -> float:
    return match_score_value(m.total_weight, n_mod, n_orig)


def class_set_difference(d_mod: DetectionSet, d_orig: DetectionSet):
    """Categories present in the modified image but not the original.

    Returns (new category ids, cardinality); lost categories are not
    counted by this criterion.
    """
    new = d_mod.category_ids() - d_orig.category_ids()
    return new, len(new)


def coverage(d_orig: DetectionSet, t_box) -> CoverageReport:
    """Coverage of each original box by the transplanted object's box.

    Per-box coverage is area(b intersect T) / area(b); the report's
    max_coverage is the maximum over all original boxes (0 when there are
    none).
    """
    per_box = []
    for idx, det in enumerate(d_orig.detections):
        b = det.box
        ix = min(b[2], t_box[2]) - max(b[0], t_box[0])
        iy = min(b[3], t_box[3]) - max(b[1], t_box[1])
        inter = max(0.0, ix) * max(0.0, iy) if ix > 0 and iy > 0 else 0.0
        area = (b[2] - b[0]) * (b[3] - b[1])
        per_box.append((idx, inter / area))
    max_cov = max((c for _, c in per_box), default=0.0)
    return CoverageReport(per_box=tuple(per_box), max_coverage=max_cov)
