"""Box arithmetic, affine pixel/geographic transforms, and polygon tests.

Coordinates are continuous (sub-pixel) throughout; rasterization only
happens at image I/O. All values here are immutable after construction and
safe to share between worker threads.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path


@dataclass(frozen=True)
class PixelBox:
    """Axis-aligned box in continuous pixel coordinates (scene or tile frame).

    Degenerate (zero-area) and non-finite boxes are rejected at construction
    so downstream overlap ratios are always well defined.
    """

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self) -> None:
        for name in ("x_min", "y_min", "x_max", "y_max"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"box coordinate {name}={value!r} is not finite")
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError(
                f"box must have positive extent, got "
                f"[{self.x_min}, {self.y_min}, {self.x_max}, {self.y_max}]"
            )

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def area(self) -> float:
        return self.width * self.height

    def center(self) -> tuple[float, float]:
        return (self.x_min + self.x_max) / 2.0, (self.y_min + self.y_max) / 2.0

    def translate(self, dx: float, dy: float) -> "PixelBox":
        return PixelBox(self.x_min + dx, self.y_min + dy, self.x_max + dx, self.y_max + dy)

    def intersects(self, other: "PixelBox") -> bool:
        """True when the boxes share positive area (edge contact does not count)."""
        return (
            min(self.x_max, other.x_max) > max(self.x_min, other.x_min)
            and min(self.y_max, other.y_max) > max(self.y_min, other.y_min)
        )

    def clip(self, x_min: float, y_min: float, x_max: float, y_max: float) -> "PixelBox":
        """Clip to a rectangle; raises ValueError when nothing remains."""
        nx_min = max(self.x_min, x_min)
        ny_min = max(self.y_min, y_min)
        nx_max = min(self.x_max, x_max)
        ny_max = min(self.y_max, y_max)
        if nx_min >= nx_max or ny_min >= ny_max:
            raise ValueError(
                f"clipping box [{self.x_min}, {self.y_min}, {self.x_max}, {self.y_max}] "
                f"to [{x_min}, {y_min}, {x_max}, {y_max}] leaves an empty box"
            )
        return PixelBox(nx_min, ny_min, nx_max, ny_max)


def intersection_area(a: PixelBox, b: PixelBox) -> float:
    w = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    if w <= 0.0:
        return 0.0
    h = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    if h <= 0.0:
        return 0.0
    return w * h


def iou(a: PixelBox, b: PixelBox) -> float:
    """Intersection over union of two boxes; 0.0 when disjoint, 1.0 when identical."""
    inter = intersection_area(a, b)
    if inter == 0.0:
        return 0.0
    return inter / (a.area + b.area - inter)


@dataclass(frozen=True)
class GeoTransform:
    """Affine mapping from pixel (col, row) to geographic (x, y).

        geo_x = origin_x + col * pixel_size_x + row * rotation_x
        geo_y = origin_y + col * rotation_y + row * pixel_size_y

    Units are meters or degrees per pixel. The linear part must be
    invertible; singular transforms are rejected at construction.
    """

    origin_x: float
    pixel_size_x: float
    rotation_x: float
    origin_y: float
    rotation_y: float
    pixel_size_y: float

    def __post_init__(self) -> None:
        coeffs = (
            self.origin_x,
            self.pixel_size_x,
            self.rotation_x,
            self.origin_y,
            self.rotation_y,
            self.pixel_size_y,
        )
        if not all(math.isfinite(c) for c in coeffs):
            raise ValueError(f"geotransform coefficients must be finite, got {coeffs}")
        if self._determinant() == 0.0:
            raise ValueError("geotransform is not invertible (zero determinant)")

    def _determinant(self) -> float:
        return self.pixel_size_x * self.pixel_size_y - self.rotation_x * self.rotation_y


def pixel_to_geo(transform: GeoTransform, col: float, row: float) -> tuple[float, float]:
    """Map a pixel position to geographic coordinates."""
    x = transform.origin_x + col * transform.pixel_size_x + row * transform.rotation_x
    y = transform.origin_y + col * transform.rotation_y + row * transform.pixel_size_y
    return x, y


def geo_to_pixel(transform: GeoTransform, x: float, y: float) -> tuple[float, float]:
    """Map geographic coordinates back to a (col, row) pixel position."""
    dx = x - transform.origin_x
    dy = y - transform.origin_y
    det = transform._determinant()
    col = (dx * transform.pixel_size_y - transform.rotation_x * dy) / det
    row = (transform.pixel_size_x * dy - dx * transform.rotation_y) / det
    return col, row


def _orientation(ax: float, ay: float, bx: float, by: float, cx: float, cy: float) -> float:
    """Cross product of (b - a) and (c - a); sign gives turn direction."""
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


def _on_segment(px: float, py: float, ax: float, ay: float, bx: float, by: float) -> bool:
    """True when p lies on the closed segment a-b."""
    if _orientation(ax, ay, bx, by, px, py) != 0.0:
        return False
    return (
        min(ax, bx) <= px <= max(ax, bx)
        and min(ay, by) <= py <= max(ay, by)
    )


def _segments_intersect(
    p1: tuple[float, float],
    p2: tuple[float, float],
    q1: tuple[float, float],
    q2: tuple[float, float],
) -> bool:
    d1 = _orientation(*q1, *q2, *p1)
    d2 = _orientation(*q1, *q2, *p2)
    d3 = _orientation(*p1, *p2, *q1)
    d4 = _orientation(*p1, *p2, *q2)
    if ((d1 > 0 and d2 < 0) or (d1 < 0 and d2 > 0)) and (
        (d3 > 0 and d4 < 0) or (d3 < 0 and d4 > 0)
    ):
        return True
    if d1 == 0.0 and _on_segment(*p1, *q1, *q2):
        return True
    if d2 == 0.0 and _on_segment(*p2, *q1, *q2):
        return True
    if d3 == 0.0 and _on_segment(*q1, *p1, *p2):
        return True
    if d4 == 0.0 and _on_segment(*q2, *p1, *p2):
        return True
    return False


@dataclass(frozen=True)
class AoiPolygon:
    """Named polygon (implicitly closed) bounding one counting area, in pixels.

    Vertices form an open ring: the closing edge from the last vertex back to
    the first is implied. Rings with fewer than three vertices, repeated
    consecutive vertices, or self-intersections are rejected.
    """

    name: str
    vertices: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        verts = tuple((float(x), float(y)) for x, y in self.vertices)
        object.__setattr__(self, "vertices", verts)
        n = len(verts)
        if n < 3:
            raise ValueError(f"polygon {self.name!r} needs at least 3 vertices, got {n}")
        for i in range(n):
            if verts[i] == verts[(i + 1) % n]:
                raise ValueError(
                    f"polygon {self.name!r} repeats vertex {verts[i]} (pass an open ring)"
                )
        edges = [(verts[i], verts[(i + 1) % n]) for i in range(n)]
        for i in range(n):
            for j in range(i + 1, n):
                # adjacent edges share an endpoint by construction
                if j == i + 1 or (i == 0 and j == n - 1):
                    continue
                if _segments_intersect(*edges[i], *edges[j]):
                    raise ValueError(
                        f"polygon {self.name!r} is self-intersecting "
                        f"(edges {i} and {j} cross)"
                    )


def point_in_polygon(point: tuple[float, float], poly: AoiPolygon) -> bool:
    """Even-odd (ray crossing) membership test; boundary points count as inside."""
    x, y = point
    verts = poly.vertices
    n = len(verts)
    inside = False
    for i in range(n):
        x1, y1 = verts[i]
        x2, y2 = verts[(i + 1) % n]
        if _on_segment(x, y, x1, y1, x2, y2):
            return True
        if (y1 > y) != (y2 > y):
            x_cross = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            if x < x_cross:
                inside = not inside
    return inside


def whole_scene_aoi(width: float, height: float, name: str = "scene") -> AoiPolygon:
    """Rectangle covering a full scene; the default counting area."""
    w = float(width)
    h = float(height)
    return AoiPolygon(name, ((0.0, 0.0), (w, 0.0), (w, h), (0.0, h)))


def load_aoi_polygons(path: str | Path) -> list[AoiPolygon]:
    """Read counting areas from a GeoJSON-compatible polygon file.

    Accepts a bare Polygon geometry, a Feature, or a FeatureCollection.
    Coordinates are interpreted as scene pixel coordinates. Only the first
    (outer) ring is meaningful; interior rings (holes) are rejected.
    """
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: not valid JSON: {exc}") from exc

    kind = data.get("type") if isinstance(data, dict) else None
    if kind == "FeatureCollection":
        features = data.get("features", [])
    elif kind == "Feature":
        features = [data]
    elif kind == "Polygon":
        features = [{"type": "Feature", "geometry": data, "properties": {}}]
    else:
        raise ValueError(f"{path}: expected Polygon, Feature, or FeatureCollection, got {kind!r}")

    polygons = []
    for i, feature in enumerate(features):
        geometry = feature.get("geometry") or {}
        if geometry.get("type") != "Polygon":
            raise ValueError(
                f"{path}: feature {i} has geometry type {geometry.get('type')!r}, "
                "only Polygon is supported"
            )
        rings = geometry.get("coordinates", [])
        if not rings:
            raise ValueError(f"{path}: feature {i} has no coordinate ring")
        if len(rings) > 1:
            raise ValueError(f"{path}: feature {i} has holes, which are not supported")
        ring = [(float(pt[0]), float(pt[1])) for pt in rings[0]]
        if len(ring) > 1 and ring[0] == ring[-1]:
            ring = ring[:-1]
        properties = feature.get("properties") or {}
        name = str(properties.get("name", f"aoi-{i}"))
        polygons.append(AoiPolygon(name, tuple(ring)))
    if not polygons:
        raise ValueError(f"{path}: no polygons found")
    return polygons
