"""Vehicle counting in overhead imagery with year-over-year trend analysis."""

from .analytics import (
    CountRecord,
    NoDataError,
    TrendReport,
    TrendRow,
    change_report,
    count_in_aoi,
    density_per_km2,
    read_counts_csv,
    write_counts_csv,
    write_trend_csv,
    write_trend_json,
    yearly_average,
)
from .detection import (
    Detection,
    DetectorConfig,
    InterchangeError,
    SCENE_GLOBAL,
    TILE_LOCAL,
    blob_detect,
    group_by_scene,
    oracle_detect,
    read_detections,
    write_detections,
)
from .evaluation import (
    EvaluationRow,
    MatchResult,
    aggregate_rows,
    count_accuracy,
    evaluate_scene,
    match,
    prf,
    write_evaluation_report,
)
from .geometry import (
    AoiPolygon,
    GeoTransform,
    PixelBox,
    geo_to_pixel,
    intersection_area,
    iou,
    load_aoi_polygons,
    pixel_to_geo,
    point_in_polygon,
    whole_scene_aoi,
)
from .ingestion import (
    AnnotationError,
    AnnotationSet,
    Location,
    ManifestError,
    Scene,
    cowc_points_to_boxes,
    parse_locations,
    parse_manifest,
    read_annotation_points,
    split_scenes,
    write_manifest,
)
from .merger import dedupe, globalize_all
from .tiler import Tile, TileGrid, globalize_box, localize_box, plan_tiles

__version__ = "0.1.0"

__all__ = [
    "AnnotationError",
    "AnnotationSet",
    "AoiPolygon",
    "CountRecord",
    "Detection",
    "DetectorConfig",
    "EvaluationRow",
    "GeoTransform",
    "InterchangeError",
    "Location",
    "ManifestError",
    "MatchResult",
    "NoDataError",
    "PixelBox",
    "SCENE_GLOBAL",
    "Scene",
    "TILE_LOCAL",
    "Tile",
    "TileGrid",
    "TrendReport",
    "TrendRow",
    "aggregate_rows",
    "blob_detect",
    "change_report",
    "count_accuracy",
    "count_in_aoi",
    "cowc_points_to_boxes",
    "dedupe",
    "density_per_km2",
    "evaluate_scene",
    "geo_to_pixel",
    "globalize_all",
    "globalize_box",
    "group_by_scene",
    "intersection_area",
    "iou",
    "load_aoi_polygons",
    "localize_box",
    "match",
    "oracle_detect",
    "parse_locations",
    "parse_manifest",
    "pixel_to_geo",
    "plan_tiles",
    "point_in_polygon",
    "prf",
    "read_annotation_points",
    "read_counts_csv",
    "read_detections",
    "split_scenes",
    "whole_scene_aoi",
    "write_counts_csv",
    "write_detections",
    "write_evaluation_report",
    "write_manifest",
    "write_trend_csv",
    "write_trend_json",
    "yearly_average",
]
