"""Scene manifests, the location registry, and point annotations.

File contracts:
  * location registry: CSV `location_id,name,area_km2`
  * scene manifest:    CSV `scene_id,location_id,capture_date,gsd_m,width,height,image_path`
                       plus an optional trailing `grayscale` column (0/1);
                       grayscale scenes are kept out of pipeline runs
  * annotations:       plain text, one `x y` vehicle center per line, one file
                       per scene (mask-image annotation sources must be
                       converted to this point format first)
"""

from __future__ import annotations

import csv
import hashlib
import re
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import Iterable, Sequence

from .geometry import GeoTransform, PixelBox

LOCATION_FIELDS = ("location_id", "name", "area_km2")
MANIFEST_FIELDS = (
    "scene_id",
    "location_id",
    "capture_date",
    "gsd_m",
    "width",
    "height",
    "image_path",
)

_ISO_DATE = re.compile(r"^\d{4}-\d{2}-\d{2}$")
_TRUE_VALUES = {"1", "true", "yes"}
_FALSE_VALUES = {"0", "false", "no", ""}


class ManifestError(ValueError):
    """Malformed manifest or registry content (message names the row and field)."""


class AnnotationError(ValueError):
    """Malformed or out-of-bounds annotation content."""


@dataclass(frozen=True)
class Location:
    location_id: str
    name: str
    area_km2: float

    def __post_init__(self) -> None:
        if not self.location_id:
            raise ValueError("location_id must be non-empty")
        if not self.area_km2 > 0:
            raise ValueError(f"location {self.location_id!r}: area_km2 must be > 0")


@dataclass(frozen=True)
class Scene:
    """One georeferenced raster capture of a location at a date."""

    scene_id: str
    location_id: str
    capture_date: date
    gsd_m: float
    width: int
    height: int
    image_path: str
    geo: GeoTransform | None = None
    grayscale: bool = False

    def __post_init__(self) -> None:
        if not self.scene_id:
            raise ValueError("scene_id must be non-empty")
        if self.width < 1 or self.height < 1:
            raise ValueError(f"scene {self.scene_id!r}: width and height must be >= 1")
        if not self.gsd_m > 0:
            raise ValueError(f"scene {self.scene_id!r}: gsd_m must be > 0")


@dataclass(frozen=True)
class AnnotationSet:
    """Ground-truth boxes for one scene, derived from annotated center points."""

    scene_id: str
    boxes: tuple[PixelBox, ...]
    source_box_size_px: float


def _read_csv_rows(path: Path, expected_fields: Sequence[str], optional: Sequence[str] = ()):
    """Yield (row_number, dict) pairs after validating the header."""
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise ManifestError(f"{path}: file is empty, expected header "
                                f"{','.join(expected_fields)}") from None
        allowed = [list(expected_fields)] + [
            list(expected_fields) + list(optional[: i + 1]) for i in range(len(optional))
        ]
        if header not in allowed:
            raise ManifestError(
                f"{path}: unexpected header {','.join(header)!r}, "
                f"expected {','.join(expected_fields)}"
            )
        for row_number, row in enumerate(reader, start=2):
            if not row or all(cell.strip() == "" for cell in row):
                continue
            if len(row) != len(header):
                raise ManifestError(
                    f"{path}: row {row_number}: expected {len(header)} fields, got {len(row)}"
                )
            yield row_number, dict(zip(header, row))


def _parse_number(path: Path, row_number: int, field: str, raw: str, kind):
    try:
        return kind(raw)
    except ValueError:
        raise ManifestError(
            f"{path}: row {row_number}: field {field!r} has invalid value {raw!r}"
        ) from None


def parse_locations(path: str | Path) -> dict[str, Location]:
    """Read the location registry; returns locations keyed by id, in file order."""
    path = Path(path)
    locations: dict[str, Location] = {}
    for row_number, row in _read_csv_rows(path, LOCATION_FIELDS):
        location_id = row["location_id"].strip()
        if location_id in locations:
            raise ManifestError(
                f"{path}: row {row_number}: duplicate location_id {location_id!r}"
            )
        area = _parse_number(path, row_number, "area_km2", row["area_km2"], float)
        try:
            locations[location_id] = Location(location_id, row["name"], area)
        except ValueError as exc:
            raise ManifestError(f"{path}: row {row_number}: {exc}") from None
    return locations


def parse_manifest(path: str | Path, locations: dict[str, Location]) -> list[Scene]:
    """Read a scene manifest, one Scene per row.

    Rows referencing unknown location ids, duplicate scene ids, or
    out-of-range values are rejected with the offending row number.
    """
    path = Path(path)
    scenes: list[Scene] = []
    seen: set[str] = set()
    for row_number, row in _read_csv_rows(path, MANIFEST_FIELDS, optional=("grayscale",)):
        scene_id = row["scene_id"].strip()
        if scene_id in seen:
            raise ManifestError(f"{path}: row {row_number}: duplicate scene_id {scene_id!r}")
        seen.add(scene_id)
        location_id = row["location_id"].strip()
        if location_id not in locations:
            raise ManifestError(
                f"{path}: row {row_number}: unknown location_id {location_id!r}"
            )
        raw_date = row["capture_date"].strip()
        if not _ISO_DATE.match(raw_date):
            raise ManifestError(
                f"{path}: row {row_number}: field 'capture_date' must be ISO-8601 "
                f"(YYYY-MM-DD), got {raw_date!r}"
            )
        try:
            capture_date = date.fromisoformat(raw_date)
        except ValueError:
            raise ManifestError(
                f"{path}: row {row_number}: field 'capture_date' has invalid value {raw_date!r}"
            ) from None
        grayscale_raw = row.get("grayscale", "").strip().lower()
        if grayscale_raw in _TRUE_VALUES:
            grayscale = True
        elif grayscale_raw in _FALSE_VALUES:
            grayscale = False
        else:
            raise ManifestError(
                f"{path}: row {row_number}: field 'grayscale' has invalid value {grayscale_raw!r}"
            )
        try:
            scene = Scene(
                scene_id=scene_id,
                location_id=location_id,
                capture_date=capture_date,
                gsd_m=_parse_number(path, row_number, "gsd_m", row["gsd_m"], float),
                width=_parse_number(path, row_number, "width", row["width"], int),
                height=_parse_number(path, row_number, "height", row["height"], int),
                image_path=row["image_path"].strip(),
                grayscale=grayscale,
            )
        except ValueError as exc:
            if isinstance(exc, ManifestError):
                raise
            raise ManifestError(f"{path}: row {row_number}: {exc}") from None
        scenes.append(scene)
    return scenes


def write_manifest(scenes: Iterable[Scene], path: str | Path) -> None:
    """Emit a manifest that parses back to field-equal scenes."""
    scenes = list(scenes)
    with_flag = any(s.grayscale for s in scenes)
    fields = list(MANIFEST_FIELDS) + (["grayscale"] if with_flag else [])
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(fields)
        for s in scenes:
            row = [
                s.scene_id,
                s.location_id,
                s.capture_date.isoformat(),
                repr(s.gsd_m),
                s.width,
                s.height,
                s.image_path,
            ]
            if with_flag:
                row.append(int(s.grayscale))
            writer.writerow(row)


def read_annotation_points(path: str | Path) -> list[tuple[float, float]]:
    """Read per-scene vehicle center points (one `x y` pair per line)."""
    path = Path(path)
    points: list[tuple[float, float]] = []
    with path.open(encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, start=1):
            stripped = line.strip()
            if not stripped:
                continue
            parts = stripped.split()
            if len(parts) != 2:
                raise AnnotationError(
                    f"{path}: line {line_number}: expected 'x y', got {stripped!r}"
                )
            try:
                points.append((float(parts[0]), float(parts[1])))
            except ValueError:
                raise AnnotationError(
                    f"{path}: line {line_number}: non-numeric coordinates {stripped!r}"
                ) from None
    return points


def cowc_points_to_boxes(
    scene_id: str,
    points: Sequence[tuple[float, float]],
    box_size_px: float,
    width: float,
    height: float,
) -> AnnotationSet:
    """Expand annotated center points into square boxes clipped to the scene.

    Point order is preserved; each point yields exactly one box. Points
    outside the scene bounds are rejected with their indices.
    """
    if box_size_px < 2:
        raise ValueError(f"box_size_px must be >= 2, got {box_size_px}")
    out_of_bounds = [
        i
        for i, (x, y) in enumerate(points)
        if not (0 <= x <= width and 0 <= y <= height)
    ]
    if out_of_bounds:
        raise AnnotationError(
            f"scene {scene_id!r}: points outside scene bounds at indices {out_of_bounds}"
        )
    half = box_size_px / 2.0
    boxes = tuple(
        PixelBox(x - half, y - half, x + half, y + half).clip(0.0, 0.0, width, height)
        for x, y in points
    )
    return AnnotationSet(scene_id=scene_id, boxes=boxes, source_box_size_px=float(box_size_px))


def _split_rank(seed: int, scene_id: str) -> str:
    return hashlib.sha256(f"{seed}:{scene_id}".encode("utf-8")).hexdigest()


def split_scenes(
    scenes: Sequence[Scene], train_fraction: float, seed: int
) -> tuple[list[Scene], list[Scene]]:
    """Deterministic train/test partition.

    Assignment depends on a seeded hash of each scene_id, not on list order,
    so re-sorting a manifest never changes membership. Train size is
    round(n * train_fraction); outputs preserve input order.
    """
    if not 0 < train_fraction < 1:
        raise ValueError(f"train_fraction must be in (0, 1), got {train_fraction}")
    ranked = sorted(scenes, key=lambda s: (_split_rank(seed, s.scene_id), s.scene_id))
    train_count = round(len(scenes) * train_fraction)
    train_ids = {s.scene_id for s in ranked[:train_count]}
    train = [s for s in scenes if s.scene_id in train_ids]
    test = [s for s in scenes if s.scene_id not in train_ids]
    return train, test
