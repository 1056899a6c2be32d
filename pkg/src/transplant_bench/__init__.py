"""Robustness harness for object detectors based on mask-guided object transplanting.

The library composites masked objects into images over a translation grid,
collects detections from a pluggable detector backend, and quantifies how
much the scene interpretation drifts: maximum-weight bipartite matching of
detection sets, match scores, newly introduced classes, occlusion coverage,
and the affected-translation statistics table.

Images are RGB uint8 numpy arrays of shape (H, W, 3); binary masks are bool
arrays of shape (H, W).
"""

from transplant_bench.dataset import (
    DatasetIndex,
    Instance,
    decode_compressed_rle,
    decode_uncompressed_rle,
    encode_compressed_rle,
    load_dataset,
    rasterize_polygons,
)
from transplant_bench.compositing import (
    Sprite,
    Translation,
    ablate_non_object_inside_box,
    ablate_outside_box,
    duplicate_within,
    extract_sprite,
    transplant,
)
from transplant_bench.sweep import (
    SweepConfig,
    TestCase,
    eligible_instance,
    enumerate_translations,
    generate_sweep,
)
from transplant_bench.detector import (
    Detection,
    DetectionSet,
    FileDetector,
    HttpDetector,
    StubDetector,
    load_detections,
    serialize_record,
    stub_detect,
    threshold_filter,
    write_detections,
)
from transplant_bench.matching import (
    CoverageReport,
    MatchResult,
    build_match,
    class_set_difference,
    coverage,
    iou,
    match_score,
)
from transplant_bench.stats import (
    AffectedTable,
    SweepRecord,
    affected,
    build_affected_table,
    emit_report,
    rank_by_new_classes,
    select_novel_exemplars,
)
from transplant_bench.nms import NmsConfig, chain_reaction_probe, greedy_nms

__version__ = "0.1.0"
