"""Combine per-tile detections into one scene-global set without duplicates.

Objects sitting in tile overlaps are detected once per covering tile;
`globalize_all` moves everything into the scene frame and `dedupe` keeps a
single box per object via greedy non-maximum suppression.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

from .detection import Detection, SCENE_GLOBAL, TILE_LOCAL
from .geometry import iou
from .tiler import Tile, globalize_box


def globalize_all(detections: Iterable[Detection], tiles: Sequence[Tile]) -> list[Detection]:
    """Translate tile-local detections into the scene frame.

    Accepts detections produced in any (possibly concurrent) tile order and
    emits them ordered by tile row-major index, preserving within-tile
    order. Every detection must carry the index of a known tile.
    """
    by_index: dict[tuple[int, int], Tile] = {t.tile_index: t for t in tiles}
    grouped: dict[tuple[int, int], list[Detection]] = {}
    for detection in detections:
        if detection.frame != TILE_LOCAL:
            raise ValueError(
                f"expected tile-local detections, got frame {detection.frame!r}"
            )
        if detection.tile_index not in by_index:
            raise ValueError(f"detection references unknown tile_index {detection.tile_index}")
        grouped.setdefault(detection.tile_index, []).append(detection)

    merged: list[Detection] = []
    for tile in sorted(tiles, key=lambda t: t.tile_index):
        for detection in grouped.get(tile.tile_index, ()):
            merged.append(
                Detection(
                    box=globalize_box(tile, detection.box),
                    score=detection.score,
                    class_label=detection.class_label,
                    frame=SCENE_GLOBAL,
                    tile_index=detection.tile_index,
                )
            )
    return merged


def _sort_key(detection: Detection):
    box = detection.box
    return (-detection.score, box.x_min, box.y_min, box.x_max, box.y_max)


def dedupe(detections: Sequence[Detection], iou_threshold: float = 0.3) -> list[Detection]:
    """Greedy non-maximum suppression over scene-global detections.

    Candidates are visited by descending score (coordinate order breaks
    ties); a candidate is accepted iff its IoU with every already-accepted
    box stays below the threshold. Output order is acceptance order, which
    makes the result independent of input permutation.

    A uniform spatial grid limits IoU checks to nearby accepted boxes, so
    large mostly-disjoint sets stay near-linear instead of quadratic.
    """
    if not 0.0 < iou_threshold <= 1.0:
        raise ValueError(f"iou_threshold must be in (0, 1], got {iou_threshold}")
    if not detections:
        return []

    order = sorted(detections, key=_sort_key)

    cell = max(
        1e-9,
        sum(max(d.box.width, d.box.height) for d in detections) / len(detections),
    )
    grid: dict[tuple[int, int], list[Detection]] = {}
    kept: list[Detection] = []

    for candidate in order:
        box = candidate.box
        cx0 = math.floor(box.x_min / cell)
        cx1 = math.floor(box.x_max / cell)
        cy0 = math.floor(box.y_min / cell)
        cy1 = math.floor(box.y_max / cell)
        conflict = False
        seen: set[int] = set()
        for cy in range(cy0, cy1 + 1):
            for cx in range(cx0, cx1 + 1):
                for accepted in grid.get((cx, cy), ()):
                    marker = id(accepted)
                    if marker in seen:
                        continue
                    seen.add(marker)
                    if iou(box, accepted.box) >= iou_threshold:
                        conflict = True
                        break
                if conflict:
                    break
            if conflict:
                break
        if conflict:
            continue
        kept.append(candidate)
        for cy in range(cy0, cy1 + 1):
            for cx in range(cx0, cx1 + 1):
                grid.setdefault((cx, cy), []).append(candidate)
    return kept
