"""Aggregation of per-translation results: the affected-percentage table,
the class-matching ranking, and novel-class exemplar selection.

A translation counts as "affected" when its match score falls strictly
below the threshold tau. The table has four variants: class-constrained
scores over all translations, class-agnostic scores over all
translations, and the class-constrained scores restricted to translations
with little (max coverage <= 0.2) or no occlusion of original objects.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

DEFAULT_TAUS = (0.3, 0.5, 0.7, 0.95, 0.99)

TABLE_ROWS = (
    "Affected",
    "Affected-class-Agnostic",
    "Affected-Occ-20",
    "Affected-No-Occ",
)


@dataclass(frozen=True)
class SweepRecord:
    """Per-translation outcome of scoring one test case."""

    case_id: str
    t_x: int | None
    t_y: int | None
    s_constrained: float
    s_agnostic: float
    new_class_count: int
    new_classes: tuple[str, ...]
    c_t: float
    n_mod: int
    n_orig: int
    base_image_id: int | None = None

    def __post_init__(self):
        if self.s_agnostic < self.s_constrained - 1e-9:
            raise ValueError(
                "class-agnostic score cannot be below the constrained score"
            )
        if not (0.0 <= self.c_t <= 1.0):
            raise ValueError("coverage must lie in [0, 1]")


@dataclass(frozen=True)
class AffectedTable:
    """Table-shaped affected statistics: one percentage row per variant.

    A row whose restricted record set is empty is not applicable and its
    percentages are None rather than zero.
    """

    tau_values: tuple[float, ...]
    rows: dict[str, list[float] | None]
    denominators: dict[str, int]


def affected(s: float, tau: float) -> bool:
    """A translation is affected when its score is strictly below tau."""
    if not (0.0 <= s <= 1.0 and 0.0 <= tau <= 1.0):
        raise ValueError("score and threshold must lie in [0, 1]")
    return s < tau


def _row_percentages(scores, tau_values):
    if not scores:
        return None
    n = len(scores)
    return [100.0 * sum(1 for s in scores if affected(s, tau)) / n for tau in tau_values]


def build_affected_table(records, tau_values=DEFAULT_TAUS) -> AffectedTable:
    """Pool records into the four-variant affected table."""
    records = list(records)
    if not records:
        raise ValueError("no records to aggregate")
    tau_values = tuple(tau_values)
    occ20 = [r for r in records if r.c_t <= 0.2]
    no_occ = [r for r in records if r.c_t == 0.0]
    selections = {
        "Affected": [r.s_constrained for r in records],
        "Affected-class-Agnostic": [r.s_agnostic for r in records],
        "Affected-Occ-20": [r.s_constrained for r in occ20],
        "Affected-No-Occ": [r.s_constrained for r in no_occ],
    }
    return AffectedTable(
        tau_values=tau_values,
        rows={name: _row_percentages(scores, tau_values) for name, scores in selections.items()},
        denominators={name: len(scores) for name, scores in selections.items()},
    )


def rank_by_new_classes(records) -> list[SweepRecord]:
    """Order records by how many new classes they introduced (descending),
    ties broken by case_id for determinism."""
    return sorted(records, key=lambda r: (-r.new_class_count, r.case_id))


def select_novel_exemplars(records, limit: int):
    """Greedy pick of records that each add at least one class not seen in
    the original image nor in any previously selected record.

    Returns [(record, incremental class names)] with pairwise-disjoint
    incremental sets; record.new_classes is already relative to the
    original image's classes.
    """
    selected: list[tuple[SweepRecord, tuple[str, ...]]] = []
    seen: set[str] = set()
    for record in rank_by_new_classes(records):
        if len(selected) >= limit:
            break
        incremental = sorted(set(record.new_classes) - seen)
        if not incremental:
            continue
        selected.append((record, tuple(incremental)))
        seen.update(incremental)
    return selected


# ---------------------------------------------------------------------------
# Report emission


def record_to_json(record: SweepRecord) -> str:
    doc = {
        "case_id": record.case_id,
        "t_x": record.t_x,
        "t_y": record.t_y,
        "S_constrained": record.s_constrained,
        "S_agnostic": record.s_agnostic,
        "new_class_count": record.new_class_count,
        "new_classes": list(record.new_classes),
        "C_T": record.c_t,
        "n_mod": record.n_mod,
        "n_orig": record.n_orig,
    }
    return json.dumps(doc, separators=(",", ":"))


def record_from_json(text: str) -> SweepRecord:
    doc = json.loads(text)
    return SweepRecord(
        case_id=doc["case_id"],
        t_x=doc["t_x"],
        t_y=doc["t_y"],
        s_constrained=doc["S_constrained"],
        s_agnostic=doc["S_agnostic"],
        new_class_count=doc["new_class_count"],
        new_classes=tuple(doc["new_classes"]),
        c_t=doc["C_T"],
        n_mod=doc["n_mod"],
        n_orig=doc["n_orig"],
    )


def _write_table_csv(table: AffectedTable, path: Path) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(
            ["variant"]
            + [f"tau_{tau:g}" for tau in table.tau_values]
            + ["denominator"]
        )
        for name in TABLE_ROWS:
            row = table.rows[name]
            if row is None:
                cells = ["n/a"] * len(table.tau_values)
            else:
                cells = [f"{p:.1f}" for p in row]
            writer.writerow([name] + cells + [table.denominators[name]])


def format_table(table: AffectedTable) -> str:
    """Human-readable rendering of the affected table."""
    width = max(len(name) for name in TABLE_ROWS)
    lines = [
        " " * width
        + "".join(f"  tau={tau:<6g}" for tau in table.tau_values)
        + "  n"
    ]
    for name in TABLE_ROWS:
        row = table.rows[name]
        if row is None:
            cells = "".join(f"  {'n/a':<10}" for _ in table.tau_values)
        else:
            cells = "".join(f"  {p:<10.1f}" for p in row)
        lines.append(f"{name:<{width}}{cells}  {table.denominators[name]}")
    return "\n".join(lines)


def emit_report(table: AffectedTable, records, exemplars, out_dir) -> dict[str, Path]:
    """Write the affected table, per-translation records, per-image
    sub-tables, and the exemplar manifest. Byte-deterministic for
    identical inputs."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    records = list(records)

    table_path = out_dir / "affected_table.csv"
    _write_table_csv(table, table_path)

    records_path = out_dir / "records.jsonl"
    with open(records_path, "w") as f:
        for record in sorted(records, key=lambda r: r.case_id):
            f.write(record_to_json(record))
            f.write("\n")

    # per-image sub-tables, so per-image-then-averaged readings stay recoverable
    by_image_path = out_dir / "affected_by_image.csv"
    with open(by_image_path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(
            ["base_image_id", "variant"]
            + [f"tau_{tau:g}" for tau in table.tau_values]
            + ["denominator"]
        )
        image_ids = sorted({r.base_image_id for r in records if r.base_image_id is not None})
        for image_id in image_ids:
            sub = build_affected_table(
                [r for r in records if r.base_image_id == image_id], table.tau_values
            )
            for name in TABLE_ROWS:
                row = sub.rows[name]
                cells = (
                    ["n/a"] * len(table.tau_values)
                    if row is None
                    else [f"{p:.1f}" for p in row]
                )
                writer.writerow([image_id, name] + cells + [sub.denominators[name]])

    exemplars_path = out_dir / "exemplars.json"
    manifest = [
        {
            "case_id": record.case_id,
            "incremental_classes": list(incremental),
            "new_class_count": record.new_class_count,
        }
        for record, incremental in exemplars
    ]
    exemplars_path.write_text(json.dumps(manifest, indent=2) + "\n")

    return {
        "table": table_path,
        "records": records_path,
        "by_image": by_image_path,
        "exemplars": exemplars_path,
    }
