import json
import math
import random

import pytest

from overcount import (
    AoiPolygon,
    GeoTransform,
    PixelBox,
    geo_to_pixel,
    iou,
    load_aoi_polygons,
    pixel_to_geo,
    point_in_polygon,
    whole_scene_aoi,
)
from support import convex_contains, random_convex_polygon


class TestPixelBox:
    def test_valid_box(self):
        box = PixelBox(1.5, 2.0, 10.0, 20.0)
        assert box.width == 8.5
        assert box.height == 18.0
        assert box.center() == (5.75, 11.0)

    @pytest.mark.parametrize(
        "coords",
        [
            (0, 0, 0, 10),  # zero width
            (0, 0, 10, 0),  # zero height
            (5, 0, 5, 5),
            (10, 0, 0, 10),  # inverted x
            (0, 10, 10, 0),  # inverted y
            (0, 0, math.nan, 10),
            (0, 0, math.inf, 10),
        ],
    )
    def test_degenerate_boxes_rejected(self, coords):
        with pytest.raises(ValueError):
            PixelBox(*coords)

    def test_clip(self):
        box = PixelBox(-5, -5, 15, 15)
        assert box.clip(0, 0, 10, 10) == PixelBox(0, 0, 10, 10)

    def test_clip_to_nothing_raises(self):
        with pytest.raises(ValueError):
            PixelBox(0, 0, 5, 5).clip(10, 10, 20, 20)

    def test_touching_boxes_do_not_intersect(self):
        assert not PixelBox(0, 0, 5, 5).intersects(PixelBox(5, 0, 10, 5))


class TestIou:
    def test_identity_is_one(self):
        box = PixelBox(3, 4, 10, 12)
        assert iou(box, box) == 1.0

    def test_disjoint_is_zero(self):
        assert iou(PixelBox(0, 0, 10, 10), PixelBox(20, 20, 30, 30)) == 0.0

    def test_half_overlap(self):
        # intersection 50, union 150, worked by hand
        value = iou(PixelBox(0, 0, 10, 10), PixelBox(5, 0, 15, 10))
        assert value == pytest.approx(1 / 3, rel=1e-12)

    def test_symmetric_and_bounded(self):
        rng = random.Random(7)
        for _ in range(300):
            a = _random_box(rng)
            b = _random_box(rng)
            ab = iou(a, b)
            assert ab == iou(b, a)
            assert 0.0 <= ab <= 1.0

    def test_one_only_for_identical(self):
        rng = random.Random(8)
        for _ in range(300):
            a = _random_box(rng)
            b = _random_box(rng)
            if iou(a, b) == 1.0:
                assert a == b
        # near-identical boxes stay strictly below 1
        a = PixelBox(0, 0, 10, 10)
        assert iou(a, PixelBox(0, 0, 10, 10.0001)) < 1.0


def _random_box(rng, extent=100.0):
    x = rng.uniform(0, extent)
    y = rng.uniform(0, extent)
    return PixelBox(x, y, x + rng.uniform(0.5, 30), y + rng.uniform(0.5, 30))


class TestGeoTransform:
    def test_identity(self):
        t = GeoTransform(0, 1, 0, 0, 0, 1)
        assert pixel_to_geo(t, 5, 7) == (5, 7)

    def test_offset_scale(self):
        # 0.15 m/px imagery with a north-up origin at (100, 200)
        t = GeoTransform(100.0, 0.15, 0.0, 200.0, 0.0, -0.15)
        assert pixel_to_geo(t, 10, 10) == (101.5, 198.5)

    def test_round_trip_many_points(self):
        rng = random.Random(11)
        for _ in range(20):
            t = _random_invertible_transform(rng)
            for _ in range(50):
                col = rng.uniform(-5000, 5000)
                row = rng.uniform(-5000, 5000)
                x, y = pixel_to_geo(t, col, row)
                col2, row2 = geo_to_pixel(t, x, y)
                assert col2 == pytest.approx(col, rel=1e-9, abs=1e-9)
                assert row2 == pytest.approx(row, rel=1e-9, abs=1e-9)

    def test_singular_rejected(self):
        with pytest.raises(ValueError):
            GeoTransform(0, 1, 2, 0, 1, 2)
        with pytest.raises(ValueError):
            GeoTransform(0, 0, 0, 0, 0, 0)

    def test_tiny_scale_is_fine(self):
        # degree-scale pixels must not be mistaken for singular
        t = GeoTransform(-95.0, 1.5e-6, 0.0, 29.0, 0.0, -1.5e-6)
        x, y = pixel_to_geo(t, 100, 100)
        col, row = geo_to_pixel(t, x, y)
        assert col == pytest.approx(100, rel=1e-9)
        assert row == pytest.approx(100, rel=1e-9)


def _random_invertible_transform(rng):
    while True:
        coeffs = [
            rng.uniform(-1000, 1000),
            rng.uniform(-2, 2),
            rng.uniform(-0.5, 0.5),
            rng.uniform(-1000, 1000),
            rng.uniform(-0.5, 0.5),
            rng.uniform(-2, 2),
        ]
        try:
            return GeoTransform(*coeffs)
        except ValueError:
            continue


UNIT_SQUARE = AoiPolygon("unit", ((0, 0), (1, 0), (1, 1), (0, 1)))


class TestPointInPolygon:
    def test_center_inside(self):
        assert point_in_polygon((0.5, 0.5), UNIT_SQUARE)

    def test_outside(self):
        assert not point_in_polygon((2, 2), UNIT_SQUARE)

    def test_boundary_counts_as_inside(self):
        assert point_in_polygon((0.5, 0.0), UNIT_SQUARE)
        assert point_in_polygon((1.0, 0.5), UNIT_SQUARE)
        assert point_in_polygon((0.0, 0.0), UNIT_SQUARE)
        assert point_in_polygon((1.0, 1.0), UNIT_SQUARE)

    def test_concave_polygon(self):
        # U-shape; the notch interior is outside
        poly = AoiPolygon(
            "u", ((0, 0), (6, 0), (6, 6), (4, 6), (4, 2), (2, 2), (2, 6), (0, 6))
        )
        assert point_in_polygon((1, 3), poly)
        assert point_in_polygon((5, 3), poly)
        assert not point_in_polygon((3, 5), poly)
        assert point_in_polygon((3, 1), poly)

    def test_matches_half_plane_oracle_on_convex(self):
        rng = random.Random(23)
        for _ in range(10):
            verts = random_convex_polygon(rng, 50, 50, 30, rng.randint(3, 9))
            poly = AoiPolygon("convex", verts)
            for _ in range(100):
                p = (rng.uniform(0, 100), rng.uniform(0, 100))
                assert point_in_polygon(p, poly) == convex_contains(verts, p)


class TestAoiPolygon:
    def test_too_few_vertices(self):
        with pytest.raises(ValueError):
            AoiPolygon("bad", ((0, 0), (1, 1)))

    def test_repeated_vertex(self):
        with pytest.raises(ValueError):
            AoiPolygon("bad", ((0, 0), (0, 0), (1, 1)))

    def test_closed_ring_rejected(self):
        # the closing edge is implied; an explicitly closed ring repeats a vertex
        with pytest.raises(ValueError):
            AoiPolygon("bad", ((0, 0), (1, 0), (1, 1), (0, 0)))

    def test_self_intersection_rejected(self):
        with pytest.raises(ValueError, match="self-intersecting"):
            AoiPolygon("bowtie", ((0, 0), (2, 2), (2, 0), (0, 2)))

    def test_whole_scene_aoi(self):
        aoi = whole_scene_aoi(256, 128)
        assert point_in_polygon((100, 100), aoi)
        assert point_in_polygon((0, 0), aoi)
        assert point_in_polygon((256, 128), aoi)
        assert not point_in_polygon((257, 10), aoi)


class TestLoadAoiPolygons:
    def _write(self, tmp_path, payload):
        path = tmp_path / "aoi.geojson"
        path.write_text(json.dumps(payload), encoding="utf-8")
        return path

    def test_bare_polygon(self, tmp_path):
        path = self._write(
            tmp_path,
            {"type": "Polygon", "coordinates": [[[0, 0], [10, 0], [10, 10], [0, 10], [0, 0]]]},
        )
        polys = load_aoi_polygons(path)
        assert len(polys) == 1
        assert polys[0].vertices == ((0, 0), (10, 0), (10, 10), (0, 10))

    def test_feature_collection_with_names(self, tmp_path):
        path = self._write(
            tmp_path,
            {
                "type": "FeatureCollection",
                "features": [
                    {
                        "type": "Feature",
                        "properties": {"name": "north-lot"},
                        "geometry": {
                            "type": "Polygon",
                            "coordinates": [[[0, 0], [5, 0], [5, 5], [0, 5], [0, 0]]],
                        },
                    },
                    {
                        "type": "Feature",
                        "properties": {},
                        "geometry": {
                            "type": "Polygon",
                            "coordinates": [[[10, 10], [20, 10], [20, 20], [10, 20], [10, 10]]],
                        },
                    },
                ],
            },
        )
        polys = load_aoi_polygons(path)
        assert [p.name for p in polys] == ["north-lot", "aoi-1"]

    def test_holes_rejected(self, tmp_path):
        path = self._write(
            tmp_path,
            {
                "type": "Polygon",
                "coordinates": [
                    [[0, 0], [10, 0], [10, 10], [0, 10], [0, 0]],
                    [[2, 2], [4, 2], [4, 4], [2, 4], [2, 2]],
                ],
            },
        )
        with pytest.raises(ValueError, match="holes"):
            load_aoi_polygons(path)

    def test_non_polygon_rejected(self, tmp_path):
        path = self._write(tmp_path, {"type": "Point", "coordinates": [0, 0]})
        with pytest.raises(ValueError):
            load_aoi_polygons(path)

    def test_invalid_json_rejected(self, tmp_path):
        path = tmp_path / "aoi.geojson"
        path.write_text("{not json", encoding="utf-8")
        with pytest.raises(ValueError, match="JSON"):
            load_aoi_polygons(path)
