"""Per-location counts, yearly averages, and year-over-year change.

Aggregation is defensive about missing data: a location without records for
a requested year is skipped with a reason, never silently coerced to zero,
and an undefined ratio (earlier-year average of 0) is reported as skipped
rather than coerced.

File contracts:
  * counts CSV: `scene_id,location_id,capture_date,aoi,count`
  * trend CSV:  `location_id,year_a,year_b,avg_count_a,avg_count_b,change_ratio`
                with the overall ratio and skipped locations in # comments
  * trend JSON: document mirroring TrendReport, skipped section included
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .detection import Detection
from .geometry import AoiPolygon, point_in_polygon
from .ingestion import Location, ManifestError

COUNTS_FIELDS = ("scene_id", "location_id", "capture_date", "aoi", "count")
TREND_FIELDS = (
    "location_id",
    "year_a",
    "year_b",
    "avg_count_a",
    "avg_count_b",
    "change_ratio",
)


class NoDataError(ValueError):
    """Raised when an aggregate is requested over an empty record set."""


@dataclass(frozen=True)
class CountRecord:
    scene_id: str
    location_id: str
    capture_date: date
    aoi_name: str
    count: int

    def __post_init__(self) -> None:
        if self.count < 0:
            raise ValueError(f"count must be >= 0, got {self.count}")


@dataclass(frozen=True)
class TrendRow:
    location_id: str
    year_a: int
    year_b: int
    avg_count_a: float
    avg_count_b: float
    change_ratio: float


@dataclass(frozen=True)
class TrendReport:
    """Per-location and overall change between two years.

    change_ratio = (avg_b - avg_a) / avg_a; the overall figure is the
    unweighted mean over locations with a defined ratio.
    """

    year_a: int
    year_b: int
    rows: tuple[TrendRow, ...]
    overall_change_ratio: float
    skipped: tuple[tuple[str, str], ...]  # (location_id, reason)


def count_in_aoi(detections: Sequence[Detection], aoi: AoiPolygon) -> int:
    """Number of detections whose box center falls inside the polygon.

    Center membership gives each vehicle exactly one counting area; the
    input is expected to be deduplicated already. Boundary centers count
    as inside.
    """
    return sum(1 for d in detections if point_in_polygon(d.box.center(), aoi))


def yearly_average(records: Iterable[CountRecord], location_id: str, year: int) -> float:
    """Mean count over one location's scenes captured in one calendar year."""
    counts = [
        r.count
        for r in records
        if r.location_id == location_id and r.capture_date.year == year
    ]
    if not counts:
        raise NoDataError(f"no count records for location {location_id!r} in {year}")
    return sum(counts) / len(counts)


def change_report(records: Sequence[CountRecord], year_a: int, year_b: int) -> TrendReport:
    """Per-location change ratios between two years, plus their unweighted mean.

    Locations missing either year, or with an earlier-year average of zero,
    are listed as skipped with the reason. Raises NoDataError when no
    location yields a defined ratio.
    """
    if year_a == year_b:
        raise ValueError(f"years must be distinct, got {year_a} twice")

    rows: list[TrendRow] = []
    skipped: list[tuple[str, str]] = []
    any_both_years = False
    for location_id in sorted({r.location_id for r in records}):
        try:
            avg_a = yearly_average(records, location_id, year_a)
        except NoDataError:
            skipped.append((location_id, f"no records for {year_a}"))
            continue
        try:
            avg_b = yearly_average(records, location_id, year_b)
        except NoDataError:
            skipped.append((location_id, f"no records for {year_b}"))
            continue
        any_both_years = True
        if avg_a == 0.0:
            skipped.append(
                (location_id, f"undefined ratio: average for {year_a} is 0")
            )
            continue
        rows.append(
            TrendRow(
                location_id=location_id,
                year_a=year_a,
                year_b=year_b,
                avg_count_a=avg_a,
                avg_count_b=avg_b,
                change_ratio=(avg_b - avg_a) / avg_a,
            )
        )

    if not any_both_years:
        raise NoDataError(f"no location has count records in both {year_a} and {year_b}")
    if not rows:
        raise NoDataError(
            f"no location has a defined change ratio between {year_a} and {year_b}"
        )
    overall = sum(r.change_ratio for r in rows) / len(rows)
    return TrendReport(
        year_a=year_a,
        year_b=year_b,
        rows=tuple(rows),
        overall_change_ratio=overall,
        skipped=tuple(skipped),
    )


def density_per_km2(count: int, location: Location) -> float:
    """Vehicles per square kilometer of the location's parking area."""
    return count / location.area_km2


def write_counts_csv(
    path: str | Path,
    records: Iterable[CountRecord],
    metadata: Mapping[str, object] = (),
    errors: Sequence[tuple[str, str]] = (),
) -> None:
    """Write count records; run metadata and per-scene errors go in # comments."""
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        for key, value in dict(metadata).items():
            handle.write(f"# {key}={value}\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(COUNTS_FIELDS)
        for r in records:
            writer.writerow(
                [r.scene_id, r.location_id, r.capture_date.isoformat(), r.aoi_name, r.count]
            )
        for scene_id, message in errors:
            handle.write(f"# error scene_id={scene_id} message={_oneline(message)}\n")


def read_counts_csv(path: str | Path) -> list[CountRecord]:
    """Read a counts CSV back into records, ignoring # comment lines."""
    path = Path(path)
    records: list[CountRecord] = []
    with path.open(newline="", encoding="utf-8") as handle:
        rows = csv.reader(line for line in handle if not line.startswith("#"))
        header = next(rows, None)
        if header is None:
            raise ManifestError(f"{path}: no header row found")
        if tuple(header) != COUNTS_FIELDS:
            raise ManifestError(
                f"{path}: unexpected header {','.join(header)!r}, "
                f"expected {','.join(COUNTS_FIELDS)}"
            )
        for row_number, row in enumerate(rows, start=2):
            if not row or all(cell.strip() == "" for cell in row):
                continue
            if len(row) != len(COUNTS_FIELDS):
                raise ManifestError(
                    f"{path}: row {row_number}: expected {len(COUNTS_FIELDS)} fields, "
                    f"got {len(row)}"
                )
            try:
                records.append(
                    CountRecord(
                        scene_id=row[0],
                        location_id=row[1],
                        capture_date=date.fromisoformat(row[2]),
                        aoi_name=row[3],
                        count=int(row[4]),
                    )
                )
            except ValueError as exc:
                raise ManifestError(f"{path}: row {row_number}: {exc}") from None
    return records


def write_trend_csv(
    path: str | Path, report: TrendReport, metadata: Mapping[str, object] = ()
) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        for key, value in dict(metadata).items():
            handle.write(f"# {key}={value}\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(TREND_FIELDS)
        for row in report.rows:
            writer.writerow(
                [
                    row.location_id,
                    row.year_a,
                    row.year_b,
                    row.avg_count_a,
                    row.avg_count_b,
                    row.change_ratio,
                ]
            )
        handle.write(f"# overall_change_ratio={report.overall_change_ratio!r}\n")
        for location_id, reason in report.skipped:
            handle.write(f"# skipped location_id={location_id} reason={_oneline(reason)}\n")


def trend_report_to_dict(report: TrendReport, metadata: Mapping[str, object] = ()) -> dict:
    return {
        "year_a": report.year_a,
        "year_b": report.year_b,
        "rows": [
            {
                "location_id": r.location_id,
                "avg_count_a": r.avg_count_a,
                "avg_count_b": r.avg_count_b,
                "change_ratio": r.change_ratio,
            }
            for r in report.rows
        ],
        "overall_change_ratio": report.overall_change_ratio,
        "skipped": [
            {"location_id": location_id, "reason": reason}
            for location_id, reason in report.skipped
        ],
        "parameters": {k: str(v) for k, v in dict(metadata).items()},
    }


def write_trend_json(
    path: str | Path, report: TrendReport, metadata: Mapping[str, object] = ()
) -> None:
    payload = trend_report_to_dict(report, metadata)
    with Path(path).open("w", encoding="utf-8", newline="\n") as handle:
        json.dump(payload, handle, indent=2)
        handle.write("\n")


def _oneline(text: str) -> str:
    return " ".join(str(text).split())
