"""Detector contract and its three implementations.

A detector maps one 8-bit RGB tile image to a list of tile-local scored
boxes. Three interchangeable sources are provided:

  * `blob_detect`   deterministic brightness-blob baseline
  * `oracle_detect` ground truth replayed through the tiling, for pipeline tests
  * `read_detections` adapter ingesting externally produced detections

Detectors hold no mutable state, so one instance of each may be called
concurrently on distinct tiles. Errors are raised, never swallowed, so a
failing tile is always reported.

Interchange format (consumed and produced): one flat JSON object per line,
`{"scene_id": s, "x_min": f, "y_min": f, "x_max": f, "y_max": f, "score": f,
"class": "car"}`, scene-global pixel coordinates with up to 2 decimal
places, UTF-8, LF line endings.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable

import numpy as np
from scipy import ndimage

from .geometry import PixelBox
from .ingestion import AnnotationSet
from .tiler import Tile, localize_box

TILE_LOCAL = "tile-local"
SCENE_GLOBAL = "scene-global"

INTERCHANGE_FIELDS = ("scene_id", "x_min", "y_min", "x_max", "y_max", "score", "class")

# 4-connectivity: blobs touching only diagonally stay separate components
_CONNECTIVITY = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


class InterchangeError(ValueError):
    """Malformed detection interchange content (message names the line)."""


@dataclass(frozen=True)
class Detection:
    """One scored axis-aligned vehicle box, tile-local or scene-global."""

    box: PixelBox
    score: float
    class_label: str = "car"
    frame: str = SCENE_GLOBAL
    tile_index: tuple[int, int] | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score must be in [0, 1], got {self.score}")
        if self.frame not in (TILE_LOCAL, SCENE_GLOBAL):
            raise ValueError(f"frame must be {TILE_LOCAL!r} or {SCENE_GLOBAL!r}, got {self.frame!r}")


@dataclass(frozen=True)
class DetectorConfig:
    """Parameters for the brightness-blob baseline."""

    threshold: float = 128.0  # luminance cut, 0..255
    min_area_px: float = 50.0
    max_area_px: float = 5000.0

    def __post_init__(self) -> None:
        if not 0 <= self.threshold <= 255:
            raise ValueError(f"threshold must be in [0, 255], got {self.threshold}")
        if not self.min_area_px < self.max_area_px:
            raise ValueError(
                f"min_area_px must be < max_area_px, got "
                f"{self.min_area_px} >= {self.max_area_px}"
            )


def blob_detect(
    image: np.ndarray,
    config: DetectorConfig,
    tile_index: tuple[int, int] | None = None,
) -> list[Detection]:
    """Detect bright blobs on a dark background.

    Pixels with luminance (R+G+B)/3 at or above the threshold are grouped
    into 4-connected components; components with area inside
    [min_area_px, max_area_px] become detections. The score is the
    component's fill ratio (component area / bounding-box area), so compact
    rectangular blobs score close to 1. Deterministic: components are
    emitted in raster order of their first pixel.
    """
    arr = np.asarray(image)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"expected an HxWx3 RGB image, got shape {arr.shape}")
    if arr.dtype != np.uint8:
        raise ValueError(f"expected 8-bit image data, got dtype {arr.dtype}")
    luminance = arr.astype(np.float64).sum(axis=2) / 3.0
    mask = luminance >= config.threshold
    labels, count = ndimage.label(mask, structure=_CONNECTIVITY)
    if count == 0:
        return []
    detections: list[Detection] = []
    areas = ndimage.sum_labels(mask, labels, index=np.arange(1, count + 1))
    for label_id, slices in enumerate(ndimage.find_objects(labels), start=1):
        if slices is None:
            continue
        area = float(areas[label_id - 1])
        if not config.min_area_px <= area <= config.max_area_px:
            continue
        row_slice, col_slice = slices
        box = PixelBox(
            float(col_slice.start),
            float(row_slice.start),
            float(col_slice.stop),
            float(row_slice.stop),
        )
        detections.append(
            Detection(
                box=box,
                score=min(1.0, area / box.area),
                frame=TILE_LOCAL,
                tile_index=tile_index,
            )
        )
    return detections


def oracle_detect(tile: Tile, truth: AnnotationSet) -> list[Detection]:
    """Replay ground truth as perfect detections for one tile.

    Every truth box intersecting the tile window is returned tile-local,
    clipped to the window, with score 1.0. Boxes straddling an overlap are
    therefore emitted by more than one tile; deduplication is the merger's
    job, exactly as with a real detector.
    """
    detections: list[Detection] = []
    for box in truth.boxes:
        if not box.intersects(tile.window):
            continue
        detections.append(
            Detection(
                box=localize_box(tile, box),
                score=1.0,
                frame=TILE_LOCAL,
                tile_index=tile.tile_index,
            )
        )
    return detections


def _round_coord(value: float) -> float:
    # + 0.0 normalizes -0.0 so serialization is sign-stable
    return round(float(value), 2) + 0.0


def format_detection_line(scene_id: str, detection: Detection) -> str:
    """Canonical single-line serialization of one scene-global detection."""
    record = {
        "scene_id": scene_id,
        "x_min": _round_coord(detection.box.x_min),
        "y_min": _round_coord(detection.box.y_min),
        "x_max": _round_coord(detection.box.x_max),
        "y_max": _round_coord(detection.box.y_max),
        "score": round(float(detection.score), 4) + 0.0,
        "class": detection.class_label,
    }
    return json.dumps(record)


def write_detections(
    target: str | Path | IO[str], records: Iterable[tuple[str, Detection]]
) -> None:
    """Write (scene_id, detection) pairs in the interchange format."""

    def _emit(handle: IO[str]) -> None:
        for scene_id, detection in records:
            handle.write(format_detection_line(scene_id, detection))
            handle.write("\n")

    if isinstance(target, (str, Path)):
        with Path(target).open("w", encoding="utf-8", newline="\n") as handle:
            _emit(handle)
    else:
        _emit(target)


def read_detections(path: str | Path) -> list[tuple[str, Detection]]:
    """Parse an interchange file into (scene_id, scene-global Detection) pairs.

    Order-preserving. Malformed lines, unknown keys, invalid boxes, and
    scores outside [0, 1] are all rejected with the offending line number.
    """
    path = Path(path)
    records: list[tuple[str, Detection]] = []
    with path.open(encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, start=1):
            stripped = line.strip()
            if not stripped:
                continue
            try:
                obj = json.loads(stripped)
            except json.JSONDecodeError as exc:
                raise InterchangeError(f"{path}: line {line_number}: invalid JSON: {exc}") from None
            if not isinstance(obj, dict):
                raise InterchangeError(
                    f"{path}: line {line_number}: expected a JSON object, got {type(obj).__name__}"
                )
            missing = [k for k in INTERCHANGE_FIELDS if k not in obj]
            extra = [k for k in obj if k not in INTERCHANGE_FIELDS]
            if missing or extra:
                raise InterchangeError(
                    f"{path}: line {line_number}: wrong keys "
                    f"(missing {missing or 'none'}, unexpected {extra or 'none'})"
                )
            scene_id = obj["scene_id"]
            if not isinstance(scene_id, str) or not scene_id:
                raise InterchangeError(
                    f"{path}: line {line_number}: scene_id must be a non-empty string"
                )
            values = {}
            for key in ("x_min", "y_min", "x_max", "y_max", "score"):
                value = obj[key]
                if isinstance(value, bool) or not isinstance(value, (int, float)):
                    raise InterchangeError(
                        f"{path}: line {line_number}: {key} must be a number, got {value!r}"
                    )
                values[key] = float(value)
            if not 0.0 <= values["score"] <= 1.0:
                raise InterchangeError(
                    f"{path}: line {line_number}: score {values['score']} outside [0, 1]"
                )
            try:
                box = PixelBox(values["x_min"], values["y_min"], values["x_max"], values["y_max"])
            except ValueError as exc:
                raise InterchangeError(f"{path}: line {line_number}: {exc}") from None
            records.append(
                (
                    scene_id,
                    Detection(
                        box=box,
                        score=values["score"],
                        class_label=str(obj["class"]),
                        frame=SCENE_GLOBAL,
                    ),
                )
            )
    return records


def group_by_scene(records: Iterable[tuple[str, Detection]]) -> dict[str, list[Detection]]:
    """Group interchange records by scene, preserving per-scene order."""
    grouped: dict[str, list[Detection]] = {}
    for scene_id, detection in records:
        grouped.setdefault(scene_id, []).append(detection)
    return grouped
