"""Shared test oracles and synthetic-data generators.

Every oracle here is an independent brute-force implementation of the
behavior it checks: exhaustive pairwise suppression, BFS flood fill,
half-plane membership, exhaustive greedy matching. None of them call into
the code paths they verify.
"""

from __future__ import annotations

import math
import random

import numpy as np

from overcount import Detection, PixelBox, SCENE_GLOBAL


# ---------------------------------------------------------------------------
# brute-force IoU and greedy suppression oracle


def iou_brute(a: PixelBox, b: PixelBox) -> float:
    w = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    h = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    if w <= 0 or h <= 0:
        return 0.0
    inter = w * h
    area_a = (a.x_max - a.x_min) * (a.y_max - a.y_min)
    area_b = (b.x_max - b.x_min) * (b.y_max - b.y_min)
    return inter / (area_a + area_b - inter)


def nms_oracle(detections, threshold: float) -> list[Detection]:
    """Greedy acceptance re-checked by exhaustive pairwise IoU."""

    def key(d: Detection):
        b = d.box
        return (-d.score, b.x_min, b.y_min, b.x_max, b.y_max)

    kept: list[Detection] = []
    for det in sorted(detections, key=key):
        if all(iou_brute(det.box, k.box) < threshold for k in kept):
            kept.append(det)
    return kept


def match_oracle(predictions, truths, threshold: float):
    """Exhaustive greedy assignment: best-score prediction claims the
    unclaimed truth with the highest qualifying IoU; ties break on
    coordinates. Returns (prediction index, truth index, iou) triples."""

    def pred_key(i):
        b = predictions[i].box
        return (-predictions[i].score, b.x_min, b.y_min, b.x_max, b.y_max)

    def truth_key(j):
        t = truths[j]
        return (t.x_min, t.y_min, t.x_max, t.y_max)

    unclaimed = list(range(len(truths)))
    pairs = []
    for i in sorted(range(len(predictions)), key=pred_key):
        candidates = [(iou_brute(predictions[i].box, truths[j]), j) for j in unclaimed]
        candidates = [(v, j) for v, j in candidates if v >= threshold]
        if not candidates:
            continue
        best_v = max(v for v, _ in candidates)
        best_j = min((j for v, j in candidates if v == best_v), key=truth_key)
        unclaimed.remove(best_j)
        pairs.append((i, best_j, best_v))
    return pairs


# ---------------------------------------------------------------------------
# BFS flood-fill connected components (4-connectivity)


def flood_components(mask: np.ndarray) -> list[tuple[int, tuple[int, int, int, int]]]:
    """Connected bright regions in raster order of their first pixel.

    Returns (area, (row_min, col_min, row_stop, col_stop)) per component,
    with half-open row/col extents.
    """
    rows, cols = mask.shape
    seen = np.zeros_like(mask, dtype=bool)
    components = []
    for r0 in range(rows):
        for c0 in range(cols):
            if not mask[r0, c0] or seen[r0, c0]:
                continue
            queue = [(r0, c0)]
            seen[r0, c0] = True
            area = 0
            rmin = rmax = r0
            cmin = cmax = c0
            while queue:
                r, c = queue.pop()
                area += 1
                rmin = min(rmin, r)
                rmax = max(rmax, r)
                cmin = min(cmin, c)
                cmax = max(cmax, c)
                for rr, cc in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
                    if 0 <= rr < rows and 0 <= cc < cols and mask[rr, cc] and not seen[rr, cc]:
                        seen[rr, cc] = True
                        queue.append((rr, cc))
            components.append((area, (rmin, cmin, rmax + 1, cmax + 1)))
    return components


# ---------------------------------------------------------------------------
# convex polygon membership by half-plane intersection


def random_convex_polygon(rng: random.Random, cx: float, cy: float, radius: float, n: int):
    angles = sorted(rng.uniform(0.0, 2.0 * math.pi) for _ in range(n))
    return tuple(
        (cx + radius * math.cos(a), cy + radius * math.sin(a)) for a in angles
    )


def convex_contains(vertices, point) -> bool:
    """Point lies in the convex hull iff it is on one side of every edge."""
    px, py = point
    crosses = []
    n = len(vertices)
    for i in range(n):
        ax, ay = vertices[i]
        bx, by = vertices[(i + 1) % n]
        crosses.append((bx - ax) * (py - ay) - (by - ay) * (px - ax))
    return all(c >= 0 for c in crosses) or all(c <= 0 for c in crosses)


# ---------------------------------------------------------------------------
# synthetic imagery


def make_lot_image(
    width: int,
    height: int,
    rects,
    bg=(18, 22, 26),
    fill=(210, 214, 200),
) -> np.ndarray:
    """Dark background with bright axis-aligned rectangles at integer bounds."""
    image = np.empty((height, width, 3), dtype=np.uint8)
    image[:, :] = bg
    for rect in rects:
        image[int(rect.y_min) : int(rect.y_max), int(rect.x_min) : int(rect.x_max)] = fill
    return image


def place_rects(
    rng: random.Random,
    width: int,
    height: int,
    n: int,
    sizes=((30, 15), (15, 30)),
    gap: int = 2,
    max_attempts: int = 2000,
) -> list[PixelBox]:
    """Place up to n integer-aligned rectangles separated by at least `gap` px."""
    placed: list[PixelBox] = []
    attempts = 0
    while len(placed) < n and attempts < max_attempts:
        attempts += 1
        w, h = sizes[rng.randrange(len(sizes))]
        if width - w <= 0 or height - h <= 0:
            break
        x = rng.randrange(0, width - w + 1)
        y = rng.randrange(0, height - h + 1)
        candidate = PixelBox(float(x), float(y), float(x + w), float(y + h))
        if all(
            candidate.x_min - gap >= p.x_max
            or p.x_min - gap >= candidate.x_max
            or candidate.y_min - gap >= p.y_max
            or p.y_min - gap >= candidate.y_max
            for p in placed
        ):
            placed.append(candidate)
    return placed


# ---------------------------------------------------------------------------
# random detections for suppression tests


def random_detections(
    rng: random.Random,
    n: int,
    extent: float = 400.0,
    min_size: float = 8.0,
    max_size: float = 40.0,
    near_duplicate_rate: float = 0.3,
) -> list[Detection]:
    """Random scored boxes with a controlled share of near-duplicates.

    Scores round to 3 decimals so ties occur and tie-breaking is exercised.
    """
    detections: list[Detection] = []
    while len(detections) < n:
        if detections and rng.random() < near_duplicate_rate:
            base = detections[rng.randrange(len(detections))].box
            dx = rng.uniform(-4.0, 4.0)
            dy = rng.uniform(-4.0, 4.0)
            box = PixelBox(base.x_min + dx, base.y_min + dy, base.x_max + dx, base.y_max + dy)
        else:
            w = rng.uniform(min_size, max_size)
            h = rng.uniform(min_size, max_size)
            x = rng.uniform(0.0, extent - w)
            y = rng.uniform(0.0, extent - h)
            box = PixelBox(x, y, x + w, y + h)
        detections.append(
            Detection(box=box, score=round(rng.random(), 3), frame=SCENE_GLOBAL)
        )
    return detections


def detection_signature(detections) -> list[tuple[float, float, float, float, float]]:
    """Comparable identity of a detection list: coordinates plus score."""
    return [
        (d.box.x_min, d.box.y_min, d.box.x_max, d.box.y_max, d.score) for d in detections
    ]
