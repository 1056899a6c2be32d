"""Detector port: a deterministic stub detector over synthetic images, a
file importer for externally produced detections, and an HTTP client for a
remote inference service.

All backends speak the same detection-exchange format: line-delimited JSON
records, one per test case::

    {"case_id": ..., "detector_id": ...,
     "detections": [{"box": [x_min, y_min, x_max, y_max],
                     "score": ..., "category_id": ..., "category_name": ...}]}

Boxes are corner-form (min/max) in pixel coordinates of the submitted
image.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from transplant_bench.pngio import png_bytes

DEFAULT_HTTP_TIMEOUT_MS = 30000
HTTP_TIMEOUT_ENV = "TRANSPLANT_BENCH_HTTP_TIMEOUT_MS"


class BackendError(Exception):
    """Detector backend unavailable or returned an unusable response."""


class DetectionFormatError(ValueError):
    """Malformed detection-exchange file."""


@dataclass(frozen=True)
class Detection:
    """One detector output: bounding box, confidence score, category."""

    box: tuple[float, float, float, float]  # (x_min, y_min, x_max, y_max)
    score: float
    category_id: int
    category_name: str

    def __post_init__(self):
        x0, y0, x1, y1 = self.box
        if not (x0 < x1 and y0 < y1):
            raise ValueError(f"degenerate box {self.box}")
        if not (0.0 <= self.score <= 1.0):
            raise ValueError(f"score {self.score} outside [0, 1]")


def _sort_key(d: Detection):
    return (-d.score, d.category_id, d.box[0], d.box[1])


@dataclass(frozen=True)
class DetectionSet:
    """Detections for one test case, in canonical stable order.

    Ordering is normalized on construction: descending score, ties broken
    by (category id, x_min, y_min).
    """

    case_id: str
    detections: tuple[Detection, ...]
    detector_id: str

    def __post_init__(self):
        object.__setattr__(
            self, "detections", tuple(sorted(self.detections, key=_sort_key))
        )

    def category_ids(self) -> set[int]:
        return {d.category_id for d in self.detections}


def threshold_filter(d: DetectionSet, theta: float) -> DetectionSet:
    """Keep detections whose score strictly exceeds theta."""
    if not (0.0 <= theta <= 1.0):
        raise ValueError("threshold must lie in [0, 1]")
    return DetectionSet(
        case_id=d.case_id,
        detections=tuple(det for det in d.detections if det.score > theta),
        detector_id=d.detector_id,
    )


# ---------------------------------------------------------------------------
# Stub detector

# Exact saturated colors the stub recognizes, with their category table.
STUB_COLOR_TABLE: tuple[tuple[tuple[int, int, int], int, str], ...] = (
    ((255, 0, 0), 1, "red"),
    ((0, 255, 0), 2, "green"),
    ((0, 0, 255), 3, "blue"),
    ((255, 255, 0), 4, "yellow"),
    ((255, 0, 255), 5, "magenta"),
    ((0, 255, 255), 6, "cyan"),
)

STUB_DETECTOR_ID = "stub-rectangles-v1"


def stub_detect(image: np.ndarray, case_id: str = "") -> DetectionSet:
    """Detect maximal connected rectangles of uniform saturated color.

    A connected component of pixels exactly equal to one of the table
    colors counts as a detection only when it fills its bounding box (a
    partially occluded rectangle stops being one, which is what makes
    detection drift observable). Score is the rectangle's share of the
    image area, clamped to [0.1, 0.99]. Fully deterministic.
    """
    from scipy import ndimage

    h, w = image.shape[:2]
    image_area = float(h * w)
    detections = []
    for color, category_id, name in STUB_COLOR_TABLE:
        hits = np.all(image == np.asarray(color, dtype=np.uint8), axis=2)
        if not hits.any():
            continue
        labels, n = ndimage.label(hits)  # 4-connectivity
        for slc in ndimage.find_objects(labels):
            if slc is None:
                continue
            ys, xs = slc
            height = ys.stop - ys.start
            width = xs.stop - xs.start
            component = labels[ys, xs] > 0
            if int(component.sum()) != height * width or not component.all():
                continue  # not a filled rectangle
            area = float(height * width)
            score = float(np.clip(area / image_area, 0.1, 0.99))
            detections.append(
                Detection(
                    box=(float(xs.start), float(ys.start), float(xs.stop), float(ys.stop)),
                    score=score,
                    category_id=category_id,
                    category_name=name,
                )
            )
    return DetectionSet(
        case_id=case_id, detections=tuple(detections), detector_id=STUB_DETECTOR_ID
    )


class StubDetector:
    """Detector-port adapter around :func:`stub_detect`."""

    detector_id = STUB_DETECTOR_ID

    def detect(self, image: np.ndarray, case_id: str) -> DetectionSet:
        return stub_detect(image, case_id)


# ---------------------------------------------------------------------------
# Detection-exchange serialization


def serialize_record(ds: DetectionSet) -> str:
    """Canonical one-line JSON for a DetectionSet (no trailing newline)."""
    record = {
        "case_id": ds.case_id,
        "detector_id": ds.detector_id,
        "detections": [
            {
                "box": [float(v) for v in d.box],
                "score": float(d.score),
                "category_id": int(d.category_id),
                "category_name": d.category_name,
            }
            for d in ds.detections
        ],
    }
    return json.dumps(record, separators=(",", ":"))


def parse_record(text: str):
    """Parse one detection-exchange record.

    Returns (DetectionSet, rejected) where rejected lists the
    invariant-violating detections that were dropped, as (entry, reason).
    """
    doc = json.loads(text)
    if not isinstance(doc, dict) or "case_id" not in doc or "detections" not in doc:
        raise DetectionFormatError("record missing case_id/detections")
    rejected = []
    detections = []
    for entry in doc["detections"]:
        try:
            detections.append(
                Detection(
                    box=tuple(float(v) for v in entry["box"]),
                    score=float(entry["score"]),
                    category_id=int(entry["category_id"]),
                    category_name=str(entry["category_name"]),
                )
            )
        except (ValueError, KeyError, TypeError) as e:
            rejected.append((entry, str(e)))
    ds = DetectionSet(
        case_id=str(doc["case_id"]),
        detections=tuple(detections),
        detector_id=str(doc.get("detector_id", "")),
    )
    return ds, rejected


@dataclass
class DetectionsFile:
    """Parsed detection-exchange file plus its rejection report."""

    by_case: dict[str, DetectionSet]
    rejected: list[tuple[str, object, str]] = field(default_factory=list)


def load_detections(path) -> DetectionsFile:
    """Load a detection-exchange file into a case_id -> DetectionSet map.

    Raises DetectionFormatError on malformed records (with the line
    number) and on duplicate case ids; invariant-violating individual
    detections are dropped and reported in ``rejected``.
    """
    by_case: dict[str, DetectionSet] = {}
    rejected: list[tuple[str, object, str]] = []
    with open(path) as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                ds, bad = parse_record(line)
            except (json.JSONDecodeError, DetectionFormatError) as e:
                raise DetectionFormatError(f"line {lineno}: {e}") from e
            if ds.case_id in by_case:
                raise DetectionFormatError(
                    f"line {lineno}: duplicate case_id {ds.case_id!r}"
                )
            by_case[ds.case_id] = ds
            rejected.extend((ds.case_id, entry, reason) for entry, reason in bad)
    return DetectionsFile(by_case=by_case, rejected=rejected)


def write_detections(sets, path) -> None:
    """Write DetectionSets as a detection-exchange file (one record/line)."""
    with open(path, "w") as f:
        for ds in sets:
            f.write(serialize_record(ds))
            f.write("\n")


class FileDetector:
    """Detector port backed by a previously written detections file."""

    def __init__(self, path):
        self._file = load_detections(path)
        ids = {ds.detector_id for ds in self._file.by_case.values()}
        if len(ids) > 1:
            raise DetectionFormatError(f"mixed detector ids in file: {sorted(ids)}")
        self.detector_id = next(iter(ids)) if ids else "file"

    def detect(self, image: np.ndarray, case_id: str) -> DetectionSet:
        try:
            return self._file.by_case[case_id]
        except KeyError:
            raise BackendError(f"detections file has no case {case_id!r}") from None


# ---------------------------------------------------------------------------
# HTTP backend


class HttpDetector:
    """Client for the detector service's POST /detect endpoint.

    Requests are idempotent and retried a bounded number of times; the
    reported detector_id comes from the service so mixed-backend runs stay
    attributable.
    """

    def __init__(self, base_url: str, timeout_ms: int | None = None, retries: int = 3,
                 client=None):
        import httpx

        if timeout_ms is None:
            timeout_ms = int(os.environ.get(HTTP_TIMEOUT_ENV, DEFAULT_HTTP_TIMEOUT_MS))
        self.base_url = base_url.rstrip("/")
        self.retries = retries
        self.detector_id = f"http:{self.base_url}"
        self._client = client or httpx.Client(timeout=timeout_ms / 1000.0)

    def detect(self, image: np.ndarray, case_id: str) -> DetectionSet:
        import httpx

        body = png_bytes(image)
        last_error = None
        for _ in range(self.retries):
            try:
                resp = self._client.post(
                    f"{self.base_url}/detect",
                    params={"case_id": case_id},
                    content=body,
                    headers={"Content-Type": "image/png"},
                )
            except httpx.HTTPError as e:
                last_error = str(e)
                continue
            if resp.status_code == 200:
                ds, bad = parse_record(resp.text)
                if bad:
                    raise BackendError(f"service returned invalid detections: {bad}")
                self.detector_id = ds.detector_id
                return ds
            last_error = f"HTTP {resp.status_code}: {resp.text[:200]}"
            if 400 <= resp.status_code < 500:
                break  # client errors will not heal on retry
        raise BackendError(f"detector service failed for {case_id!r}: {last_error}")
