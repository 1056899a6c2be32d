"""End-to-end acceptance checks.

Each test exercises one externally observable guarantee of the harness and
prints a single PASS/FAIL line so the whole gate can be read at a glance:

    python3 -m pytest tests/test_acceptance.py -s
"""

import contextlib
import math
import time

import numpy as np
import pytest

from _corpus import build_corpus
from _oracles import brute_force_max_matching, decode_rle_reference, iou_reference

from transplant_bench import cli
from transplant_bench.compositing import Sprite, Translation, transplant
from transplant_bench.dataset import (
    decode_compressed_rle,
    encode_compressed_rle,
    load_dataset,
    mask_to_rle_counts,
)
from transplant_bench.detector import Detection, DetectionSet
from transplant_bench.matching import build_match, match_score_value
from transplant_bench.nms import NmsConfig, chain_reaction_probe
from transplant_bench.stats import (
    SweepRecord,
    build_affected_table,
    select_novel_exemplars,
)
from transplant_bench.sweep import enumerate_translations


@contextlib.contextmanager
def _criterion(name):
    try:
        yield
    except BaseException:
        print(f"FAIL: {name}")
        raise
    print(f"PASS: {name}")


def _random_detections(rng, n, case_id="c"):
    dets = []
    for _ in range(n):
        x0 = int(rng.integers(0, 60))
        y0 = int(rng.integers(0, 60))
        w = int(rng.integers(2, 40))
        h = int(rng.integers(2, 40))
        dets.append(
            Detection(
                box=(float(x0), float(y0), float(x0 + w), float(y0 + h)),
                score=float(rng.uniform(0.5, 1.0)),
                category_id=int(rng.integers(1, 4)),
                category_name=f"c{int(rng.integers(1, 4))}",
            )
        )
    return DetectionSet(case_id=case_id, detections=tuple(dets), detector_id="t")


def test_matching_agrees_with_exhaustive_oracle():
    with _criterion(
        "max-weight matching and score formula agree with exhaustive oracle"
    ):
        start = time.monotonic()
        rng = np.random.default_rng(2024)
        for trial in range(500):
            d_mod = _random_detections(rng, int(rng.integers(0, 7)))
            d_orig = _random_detections(rng, int(rng.integers(0, 7)))
            constrained = bool(rng.integers(0, 2))
            m = build_match(d_mod, d_orig, class_constrained=constrained)
            weights = np.zeros((len(d_mod.detections), len(d_orig.detections)))
            for i, dm in enumerate(d_mod.detections):
                for j, do in enumerate(d_orig.detections):
                    if constrained and dm.category_id != do.category_id:
                        continue
                    weights[i, j] = iou_reference(dm.box, do.box)
            best, _ = brute_force_max_matching(weights)
            assert m.total_weight == pytest.approx(best, abs=1e-12), trial
            expected = match_score_value(
                m.total_weight, len(d_mod.detections), len(d_orig.detections)
            )
            assert abs(m.score - expected) <= 1e-9, trial
        assert time.monotonic() - start < 10.0


def test_transplant_pixel_contract():
    with _criterion("transplanting follows the per-pixel contract exactly"):
        start = time.monotonic()
        rng = np.random.default_rng(7)
        for trial in range(100):
            base = rng.integers(0, 256, size=(32, 32, 3), dtype=np.uint8)
            pixels = rng.integers(0, 256, size=(8, 8, 3), dtype=np.uint8)
            mask = rng.random((8, 8)) < 0.5
            sprite = Sprite(
                pixels=pixels, mask=mask, source_instance_id=1, source_image_id=1
            )
            t = Translation(int(rng.integers(0, 25)), int(rng.integers(0, 25)))
            out = transplant(base, sprite, t)
            for y in range(32):
                for x in range(32):
                    sy, sx = y - t.t_y, x - t.t_x
                    inside = 0 <= sy < 8 and 0 <= sx < 8 and mask[sy, sx]
                    expected = pixels[sy, sx] if inside else base[y, x]
                    assert (out[y, x] == expected).all(), trial
        # empty-mask sprite must reproduce the base bit for bit
        empty = Sprite(
            pixels=np.zeros((8, 8, 3), dtype=np.uint8),
            mask=np.zeros((8, 8), dtype=bool),
            source_instance_id=1,
            source_image_id=1,
        )
        base = np.random.default_rng(0).integers(
            0, 256, size=(32, 32, 3), dtype=np.uint8
        )
        assert transplant(base, empty, Translation(3, 5)).tobytes() == base.tobytes()
        assert time.monotonic() - start < 5.0


def test_reference_grid_size():
    with _criterion(
        "640x480 base with a 100x80 sprite at stride 10 yields 2255 placements"
    ):
        grid = enumerate_translations((640, 480), (100, 80), 10)
        assert len(grid) == 2255


def test_mask_encoding_round_trip():
    with _criterion("run-length mask encoding round-trips and areas stay faithful"):
        rng = np.random.default_rng(5)
        for trial in range(200):
            h = int(rng.integers(1, 40))
            w = int(rng.integers(1, 40))
            mask = rng.random((h, w)) < rng.uniform(0.05, 0.95)
            encoded = encode_compressed_rle(mask)
            decoded = decode_compressed_rle(encoded, h, w)
            assert np.array_equal(decoded, mask), trial
            counts = mask_to_rle_counts(mask)
            assert np.array_equal(decode_rle_reference(counts, h, w), mask), trial


def test_annotation_areas_within_tolerance(corpus):
    with _criterion("decoded fixture masks match annotated areas within 2%"):
        index = load_dataset(corpus["annotations"], corpus["images"])
        assert not index.rejected
        for inst in index.instances.values():
            decoded_area = int(inst.mask.sum())
            assert math.isclose(decoded_area, inst.area, rel_tol=0.02), inst.instance_id


def test_affected_table_structure(corpus, tmp_path):
    with _criterion(
        "stub sweep produces a well-formed affected table with consistent rows"
    ):
        start = time.monotonic()
        out = tmp_path / "sweep"
        assert (
            cli.main(
                [
                    "generate",
                    "--annotations", str(corpus["annotations"]),
                    "--images", str(corpus["images"]),
                    "--base-image", "1",
                    "--stride", "16",
                    "--seed", "3",
                    "--out", str(out),
                ]
            )
            == 0
        )
        assert cli.main(["run", "--out", str(out), "--detector", "stub"]) == 0
        assert (
            cli.main(["score", "--out", str(out), "--threshold", "0.05"]) == 0
        )
        lines = (out / "reports" / "affected_table.csv").read_text().splitlines()
        assert lines[0].startswith("variant,tau_")

        import transplant_bench.stats as stats

        records = [
            stats.record_from_json(line)
            for line in (out / "reports" / "records.jsonl").read_text().splitlines()
        ]
        table = build_affected_table(records)
        for row in table.rows.values():
            if row is not None:
                assert row == sorted(row)  # non-decreasing in tau
        if table.rows["Affected-class-Agnostic"] is not None:
            for a, c in zip(
                table.rows["Affected-class-Agnostic"], table.rows["Affected"]
            ):
                assert a <= c + 1e-9
        assert (
            table.denominators.get("Affected-No-Occ", 0)
            <= table.denominators.get("Affected-Occ-20", 0)
            <= table.denominators["Affected"]
        )

        # hand-computed fixture: exact percentages
        fixture = [
            SweepRecord("r1", 0, 0, 0.20, 0.40, 0, (), 0.00, 3, 3),
            SweepRecord("r2", 0, 0, 0.60, 0.70, 0, (), 0.10, 3, 3),
            SweepRecord("r3", 0, 0, 0.90, 0.95, 0, (), 0.30, 3, 3),
            SweepRecord("r4", 0, 0, 1.00, 1.00, 0, (), 0.00, 3, 3),
            SweepRecord("r5", 0, 0, 0.45, 0.50, 0, (), 0.15, 3, 3),
            SweepRecord("r6", 0, 0, 0.75, 0.80, 0, (), 0.50, 3, 3),
        ]
        six = build_affected_table(fixture, tau_values=(0.5, 0.8))
        assert six.rows["Affected"] == pytest.approx([100 * 2 / 6, 100 * 4 / 6])
        assert six.rows["Affected-class-Agnostic"] == pytest.approx(
            [100 * 1 / 6, 100 * 3 / 6]
        )
        assert six.rows["Affected-Occ-20"] == pytest.approx([50.0, 75.0])
        assert six.rows["Affected-No-Occ"] == pytest.approx([50.0, 50.0])
        assert time.monotonic() - start < 60.0


def test_nms_chain_reaction():
    with _criterion(
        "removing one detection can suppress a far-away detection through the"
        " greedy sweep"
    ):
        a = Detection(box=(0, 0, 10, 10), score=0.9, category_id=1, category_name="x")
        b = Detection(box=(4, 0, 14, 10), score=0.8, category_id=1, category_name="x")
        c = Detection(box=(8, 0, 18, 10), score=0.7, category_id=1, category_name="x")
        cfg = NmsConfig(iou_threshold=0.4)
        before, after, surfaced, suppressed = chain_reaction_probe([a, b, c], 0, cfg)
        assert before == [a, c]
        assert after == [b]
        assert surfaced == [1]
        assert suppressed == [0, 2]


def test_exemplar_selection_disjoint_novel_classes():
    with _criterion(
        "exemplar selection yields incrementally novel, disjoint class sets"
    ):
        records = [
            SweepRecord("row2", 0, 0, 1, 1, 1, ("kite",), 0, 3, 3),
            SweepRecord("row3", 10, 0, 1, 1, 1, ("knife",), 0, 3, 3),
            SweepRecord("row4", 20, 0, 1, 1, 1, ("cellphone",), 0, 3, 3),
        ]
        picked = select_novel_exemplars(records, limit=10)
        increments = [set(inc) for _, inc in picked]
        assert increments == [{"kite"}, {"knife"}, {"cellphone"}]
        for i in range(len(increments)):
            for j in range(i + 1, len(increments)):
                assert not (increments[i] & increments[j])


def test_pipeline_determinism(corpus, tmp_path):
    with _criterion(
        "generate+run+score is byte-for-byte reproducible across directories"
    ):
        outputs = []
        for name in ("first", "second"):
            out = tmp_path / name
            args = [
                "generate",
                "--annotations", str(corpus["annotations"]),
                "--images", str(corpus["images"]),
                "--base-image", "2",
                "--stride", "16",
                "--seed", "9",
                "--out", str(out),
            ]
            assert cli.main(args) == 0
            assert cli.main(["run", "--out", str(out), "--detector", "stub"]) == 0
            assert (
                cli.main(["score", "--out", str(out), "--threshold", "0.05"]) == 0
            )
            snapshot = {
                "manifest": (out / "manifest.jsonl").read_bytes(),
                "detections": (out / "detections.jsonl").read_bytes(),
            }
            for report in sorted((out / "reports").iterdir()):
                snapshot[report.name] = report.read_bytes()
            for png in sorted((out / "images").iterdir()):
                snapshot[png.name] = png.read_bytes()
            outputs.append(snapshot)
        assert outputs[0].keys() == outputs[1].keys()
        for key in outputs[0]:
            assert outputs[0][key] == outputs[1][key], key
