"""Batch command-line frontend.

The pipeline is split into stages with on-disk handoff so detector
inference (possibly on another machine) is decoupled from generation and
scoring:

    transplant-bench generate  --annotations ... --images ... --base-image N --out DIR
    transplant-bench run       --out DIR --detector {stub|file:PATH|http:URL}
    transplant-bench score     --out DIR [--tau ... --threshold ...]
    transplant-bench ablate    --annotations ... --images ... --instance N --variant ...
    transplant-bench nms-probe --detections FILE --removed-index N

Exit codes: 0 success, 1 pipeline failure, 2 usage/config error.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from transplant_bench import compositing, dataset, detector, matching, nms, pngio, stats, sweep


class UsageError(Exception):
    """Configuration problem the user must fix; maps to exit code 2."""


def _load_index(args) -> dataset.DatasetIndex:
    annotations = Path(args.annotations)
    if not annotations.is_file():
        raise UsageError(f"annotations file not found: {annotations}")
    images_root = Path(args.images)
    if not images_root.is_dir():
        raise UsageError(f"images directory not found: {images_root}")
    index = dataset.load_dataset(annotations, images_root)
    for rej in index.rejected:
        print(
            f"warning: rejected instance {rej.instance_id} "
            f"(image {rej.image_id}): {rej.reason}",
            file=sys.stderr,
        )
    for image_id in index.missing_images:
        print(f"warning: image file missing for image {image_id}", file=sys.stderr)
    return index


def _make_detector(spec: str):
    if spec == "stub":
        return detector.StubDetector()
    if spec.startswith("file:"):
        path = Path(spec[5:])
        if not path.is_file():
            raise UsageError(f"detections file not found: {path}")
        return detector.FileDetector(path)
    if spec.startswith("http:") or spec.startswith("https:"):
        return detector.HttpDetector(spec)
    raise UsageError(f"unknown detector backend: {spec!r}")


def cmd_generate(args) -> int:
    index = _load_index(args)
    if args.base_image not in index.images:
        raise UsageError(f"base image {args.base_image} not in dataset")
    cfg = sweep.SweepConfig(
        stride=args.stride,
        seed=args.seed,
        confidence_threshold=args.threshold,
    )
    out = Path(args.out)
    images_dir = out / "images"
    images_dir.mkdir(parents=True, exist_ok=True)
    manifest_lines = []
    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        futures = []
        for case, image in sweep.generate_sweep(
            index,
            args.base_image,
            cfg,
            instance_id=args.instance,
            duplicate=args.duplicate,
            source_image_id=args.source_image,
        ):
            rel_path = f"images/{case.case_id}.png"
            futures.append(pool.submit(pngio.save_png, image, out / rel_path))
            # manifest paths are relative to the sweep directory so the
            # directory is relocatable and reruns are byte-identical
            manifest_lines.append(sweep.manifest_record(case, rel_path))
        for fut in futures:
            fut.result()
    manifest_path = out / "manifest.jsonl"
    manifest_path.write_text("".join(line + "\n" for line in manifest_lines))
    print(f"generated {len(manifest_lines)} cases -> {manifest_path}")
    return 0


def cmd_run(args) -> int:
    out = Path(args.out)
    manifest_path = out / "manifest.jsonl"
    if not manifest_path.is_file():
        raise UsageError(f"no manifest at {manifest_path}; run generate first")
    rows = sweep.load_manifest(manifest_path)
    backend = _make_detector(args.detector)
    detections_path = out / "detections.jsonl"

    def work(row):
        path = Path(row["path"])
        if not path.is_absolute():
            path = out / path
        image = pngio.load_png(path)
        return backend.detect(image, row["case_id"])

    results: dict[str, detector.DetectionSet] = {}
    failures: list[str] = []
    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        futures = {row["case_id"]: pool.submit(work, row) for row in rows}
        for case_id, fut in futures.items():
            try:
                results[case_id] = fut.result()
            except (detector.BackendError, OSError) as e:
                failures.append(f"{case_id}: {e}")

    # flush whatever completed, in manifest order, even on failure
    ordered = [results[row["case_id"]] for row in rows if row["case_id"] in results]
    detector.write_detections(ordered, detections_path)
    if failures:
        for msg in failures[:5]:
            print(f"error: {msg}", file=sys.stderr)
        print(
            f"error: {len(failures)} of {len(rows)} cases failed; "
            f"partial results retained in {detections_path}",
            file=sys.stderr,
        )
        return 1
    print(f"wrote {len(ordered)} detection records -> {detections_path}")
    return 0


def cmd_score(args) -> int:
    out = Path(args.out)
    manifest_path = out / "manifest.jsonl"
    detections_path = Path(args.detections) if args.detections else out / "detections.jsonl"
    if not manifest_path.is_file():
        raise UsageError(f"no manifest at {manifest_path}")
    if not detections_path.is_file():
        raise UsageError(f"no detections at {detections_path}")
    rows = sweep.load_manifest(manifest_path)
    det_file = detector.load_detections(detections_path)

    missing = [r["case_id"] for r in rows if r["case_id"] not in det_file.by_case]
    if missing:
        print(f"error: detections missing for cases: {missing[:5]}...", file=sys.stderr)
        return 1

    theta = args.threshold
    originals: dict[int, detector.DetectionSet] = {}
    for row in rows:
        if row["variant"] == "null":
            originals[row["base_image_id"]] = detector.threshold_filter(
                det_file.by_case[row["case_id"]], theta
            )
    records = []
    for row in rows:
        if row["variant"] == "null":
            continue
        d_orig = originals.get(row["base_image_id"])
        if d_orig is None:
            print(
                f"error: no null case for base image {row['base_image_id']}",
                file=sys.stderr,
            )
            return 1
        d_mod = detector.threshold_filter(det_file.by_case[row["case_id"]], theta)
        constrained = matching.build_match(d_mod, d_orig, class_constrained=True)
        agnostic = matching.build_match(d_mod, d_orig, class_constrained=False)
        new_ids, count = matching.class_set_difference(d_mod, d_orig)
        names = sorted(
            {d.category_name for d in d_mod.detections if d.category_id in new_ids}
        )
        cover = matching.coverage(d_orig, row["t_box"])
        records.append(
            stats.SweepRecord(
                case_id=row["case_id"],
                t_x=row["t_x"],
                t_y=row["t_y"],
                s_constrained=constrained.score,
                s_agnostic=agnostic.score,
                new_class_count=count,
                new_classes=tuple(names),
                c_t=cover.max_coverage,
                n_mod=len(d_mod.detections),
                n_orig=len(d_orig.detections),
                base_image_id=row["base_image_id"],
            )
        )
    if not records:
        print("error: no non-null cases to score", file=sys.stderr)
        return 1
    table = stats.build_affected_table(records, tuple(args.tau))
    exemplars = stats.select_novel_exemplars(records, limit=args.exemplars)
    paths = stats.emit_report(table, records, exemplars, out / "reports")
    print(stats.format_table(table))
    print(f"reports -> {paths['table'].parent}")
    return 0


def cmd_ablate(args) -> int:
    index = _load_index(args)
    inst = index.instances.get(args.instance)
    if inst is None:
        raise UsageError(f"instance {args.instance} not in dataset (or was rejected)")
    image = dataset.load_image(index, inst.image_id)
    box = compositing._int_box(inst.bbox, image.shape)
    if args.variant == "outside-zero":
        result = compositing.ablate_outside_box(image, box, mode="zero")
    elif args.variant == "mask-only":
        result = compositing.ablate_outside_box(image, box, mode="zero")
        result = compositing.ablate_non_object_inside_box(result, box, inst.mask)
    elif args.variant == "mask-plus-noise":
        result = compositing.ablate_non_object_inside_box(image, box, inst.mask)
        result = compositing.ablate_outside_box(result, box, mode="noise", seed=args.seed)
    else:  # argparse choices should prevent this
        raise UsageError(f"unknown variant {args.variant!r}")
    pngio.save_png(result, args.out)
    print(f"wrote {args.out}")
    return 0


def cmd_nms_probe(args) -> int:
    path = Path(args.detections)
    if not path.is_file():
        raise UsageError(f"detections file not found: {path}")
    det_file = detector.load_detections(path)
    if args.case is not None:
        if args.case not in det_file.by_case:
            raise UsageError(f"case {args.case!r} not in {path}")
        ds = det_file.by_case[args.case]
    elif len(det_file.by_case) == 1:
        ds = next(iter(det_file.by_case.values()))
    else:
        raise UsageError("file has multiple cases; pick one with --case")
    cfg = nms.NmsConfig(iou_threshold=args.iou_threshold, class_aware=not args.class_agnostic)
    detections = list(ds.detections)
    try:
        before, after, surfaced, suppressed = nms.chain_reaction_probe(
            detections, args.removed_index, cfg, mode=args.mode
        )
    except IndexError as e:
        raise UsageError(str(e)) from e

    def describe(d):
        return {"box": list(d.box), "score": d.score, "category": d.category_name}

    report = {
        "case_id": ds.case_id,
        "removed_index": args.removed_index,
        "kept_before": len(before),
        "kept_after": len(after),
        "newly_surfaced": [{"index": i, **describe(detections[i])} for i in surfaced],
        "newly_suppressed": [{"index": i, **describe(detections[i])} for i in suppressed],
    }
    print(json.dumps(report, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="transplant-bench",
        description="Object-transplanting robustness harness for object detectors",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_dataset_args(p):
        p.add_argument("--annotations", required=True, help="COCO instances JSON")
        p.add_argument("--images", required=True, help="image files root directory")

    gen = sub.add_parser("generate", help="generate sweep images and manifest")
    add_dataset_args(gen)
    gen.add_argument("--base-image", type=int, required=True)
    gen.add_argument("--source-image", type=int, default=None,
                     help="restrict random instance selection to this image")
    gen.add_argument("--instance", type=int, default=None,
                     help="explicit source instance id")
    gen.add_argument("--stride", type=int, default=10)
    gen.add_argument("--threshold", type=float, default=0.5)
    gen.add_argument("--duplicate", action="store_true",
                     help="copy an object to another location in the same image")
    gen.add_argument("--out", required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--jobs", type=int, default=1)
    gen.set_defaults(func=cmd_generate)

    run = sub.add_parser("run", help="collect detections for a generated sweep")
    run.add_argument("--out", required=True, help="sweep directory from generate")
    run.add_argument("--detector", required=True, help="stub | file:PATH | http:URL")
    run.add_argument("--jobs", type=int, default=4)
    run.set_defaults(func=cmd_run)

    score = sub.add_parser("score", help="compute match scores and reports")
    score.add_argument("--out", required=True, help="sweep directory")
    score.add_argument("--detections", default=None,
                       help="detections file (default: OUT/detections.jsonl)")
    score.add_argument("--tau", type=float, action="append", default=None)
    score.add_argument("--threshold", type=float, default=0.5)
    score.add_argument("--exemplars", type=int, default=10)
    score.set_defaults(func=cmd_score)

    abl = sub.add_parser("ablate", help="box/mask ablation of one instance")
    add_dataset_args(abl)
    abl.add_argument("--instance", type=int, required=True)
    abl.add_argument("--variant", required=True,
                     choices=["outside-zero", "mask-only", "mask-plus-noise"])
    abl.add_argument("--seed", type=int, default=0)
    abl.add_argument("--out", required=True, help="output PNG path")
    abl.set_defaults(func=cmd_ablate)

    probe = sub.add_parser("nms-probe", help="NMS chain-reaction probe")
    probe.add_argument("--detections", required=True)
    probe.add_argument("--case", default=None)
    probe.add_argument("--removed-index", type=int, required=True)
    probe.add_argument("--iou-threshold", type=float, default=0.5)
    probe.add_argument("--class-agnostic", action="store_true")
    probe.add_argument("--mode", choices=["remove", "attenuate"], default="remove")
    probe.set_defaults(func=cmd_nms_probe)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "tau", None) is not None and not args.tau:
        args.tau = None
    if hasattr(args, "tau") and args.tau is None:
        args.tau = list(stats.DEFAULT_TAUS)
    try:
        return args.func(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (
        dataset.DatasetError,
        detector.BackendError,
        detector.DetectionFormatError,
        sweep.SweepError,
    ) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
