"""Command-line pipeline: ingest, tile, detect, merge, count, evaluate, trend.

Outputs are reproducible: identical inputs and parameters give byte-identical
files regardless of worker count, and every delimited output embeds the
parameters needed to re-run it. Scene-level work is parallelized with
threads; the OVERCOUNT_THREADS environment variable caps the pool size.
"""

from __future__ import annotations

import argparse
import hashlib
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
from PIL import Image

from .analytics import (
    CountRecord,
    NoDataError,
    change_report,
    count_in_aoi,
    read_counts_csv,
    write_counts_csv,
    write_trend_csv,
    write_trend_json,
)
from .detection import (
    Detection,
    DetectorConfig,
    blob_detect,
    group_by_scene,
    oracle_detect,
    read_detections,
    write_detections,
)
from .evaluation import aggregate_rows, evaluate_scene, write_evaluation_report
from .figures import render_trend_figure
from .geometry import load_aoi_polygons, whole_scene_aoi
from .ingestion import (
    Scene,
    cowc_points_to_boxes,
    parse_locations,
    parse_manifest,
    read_annotation_points,
)
from .merger import dedupe, globalize_all
from .tiler import TileGrid, plan_tiles

TOOL_VERSION = "0.1.0"

PARAM_DEFAULTS: dict[str, object] = {
    "detector": "blob",
    "tile_size": 256,
    "tile_stride": 192,
    "nms_iou": 0.3,
    "match_iou": 0.25,
    "box_size": 32,
    "seed": 0,
}

_PARAM_TYPES = {
    "detector": str,
    "tile_size": int,
    "tile_stride": int,
    "nms_iou": float,
    "match_iou": float,
    "box_size": int,
    "seed": int,
}


def load_config_file(path: str | Path) -> dict[str, str]:
    """Parse a flat key=value config file; # lines and blanks are ignored."""
    values: dict[str, str] = {}
    path = Path(path)
    with path.open(encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise ValueError(f"{path}: line {line_number}: expected key=value, got {stripped!r}")
            key, _, value = stripped.partition("=")
            key = key.strip()
            if key not in PARAM_DEFAULTS:
                raise ValueError(
                    f"{path}: line {line_number}: unknown key {key!r} "
                    f"(known: {', '.join(sorted(PARAM_DEFAULTS))})"
                )
            values[key] = value.strip()
    return values


def resolve_params(args: argparse.Namespace) -> dict[str, object]:
    """Effective parameters: CLI flag > config file > built-in default."""
    file_values = load_config_file(args.config) if getattr(args, "config", None) else {}
    params: dict[str, object] = {}
    for key, default in PARAM_DEFAULTS.items():
        cli_value = getattr(args, key, None)
        if cli_value is not None:
            params[key] = cli_value
        elif key in file_values:
            try:
                params[key] = _PARAM_TYPES[key](file_values[key])
            except ValueError:
                raise ValueError(
                    f"config key {key!r} has invalid value {file_values[key]!r}"
                ) from None
        else:
            params[key] = default
    return params


def config_hash(params: dict[str, object]) -> str:
    digest = hashlib.sha256(
        "\n".join(f"{k}={params[k]}" for k in sorted(params)).encode("utf-8")
    )
    return digest.hexdigest()[:12]


def run_metadata(command: str, params: dict[str, object], keys: tuple[str, ...]) -> dict[str, object]:
    subset = {k: params[k] for k in keys}
    metadata: dict[str, object] = {
        "tool": f"overcount {TOOL_VERSION}",
        "command": command,
        "config_hash": config_hash(subset),
    }
    metadata.update(subset)
    return metadata


def _worker_count(n_items: int) -> int:
    env = os.environ.get("OVERCOUNT_THREADS", "").strip()
    if env:
        try:
            cap = int(env)
        except ValueError:
            raise ValueError(f"OVERCOUNT_THREADS must be an integer, got {env!r}") from None
        cap = max(1, cap)
    else:
        cap = min(8, os.cpu_count() or 1)
    return max(1, min(cap, n_items)) if n_items else 1


def _load_scene_image(scene: Scene) -> np.ndarray:
    path = Path(scene.image_path)
    with Image.open(path) as img:
        arr = np.asarray(img.convert("RGB"))
    if arr.shape[0] != scene.height or arr.shape[1] != scene.width:
        raise ValueError(
            f"image {path} is {arr.shape[1]}x{arr.shape[0]} but the manifest says "
            f"{scene.width}x{scene.height}"
        )
    return arr


def _scene_truth(scene: Scene, annotations_dir: Path, box_size: int):
    ann_path = annotations_dir / f"{scene.scene_id}.txt"
    if not ann_path.exists():
        raise FileNotFoundError(f"no annotations file {ann_path}")
    points = read_annotation_points(ann_path)
    return cowc_points_to_boxes(scene.scene_id, points, box_size, scene.width, scene.height)


def _process_scene(
    scene: Scene,
    params: dict[str, object],
    aois,
    annotations_dir: Path | None,
    file_detections: dict[str, list[Detection]] | None,
) -> tuple[list[Detection], list[CountRecord]]:
    detector = params["detector"]
    if detector == "file":
        assert file_detections is not None
        merged = dedupe(file_detections.get(scene.scene_id, []), params["nms_iou"])
    else:
        grid = TileGrid(params["tile_size"], params["tile_stride"])
        tiles = plan_tiles(scene.width, scene.height, grid)
        per_tile: list[Detection] = []
        if detector == "oracle":
            assert annotations_dir is not None
            truth = _scene_truth(scene, annotations_dir, params["box_size"])
            for tile in tiles:
                per_tile.extend(oracle_detect(tile, truth))
        elif detector == "blob":
            arr = _load_scene_image(scene)
            config = DetectorConfig()
            for tile in tiles:
                w = tile.window
                view = arr[int(w.y_min) : int(w.y_max), int(w.x_min) : int(w.x_max)]
                per_tile.extend(blob_detect(view, config, tile.tile_index))
        else:
            raise ValueError(f"unknown detector {detector!r}")
        merged = dedupe(globalize_all(per_tile, tiles), params["nms_iou"])

    scene_aois = aois if aois is not None else [whole_scene_aoi(scene.width, scene.height)]
    records = [
        CountRecord(
            scene_id=scene.scene_id,
            location_id=scene.location_id,
            capture_date=scene.capture_date,
            aoi_name=aoi.name,
            count=count_in_aoi(merged, aoi),
        )
        for aoi in scene_aois
    ]
    return merged, records


def cmd_count(args: argparse.Namespace) -> int:
    params = resolve_params(args)
    detector = params["detector"]
    if detector == "file" and not args.detections_in:
        raise ValueError("--detector file requires --detections-in")
    if detector == "oracle" and not args.annotations:
        raise ValueError("--detector oracle requires --annotations")

    locations = parse_locations(args.locations)
    scenes = [s for s in parse_manifest(args.manifest, locations) if not s.grayscale]
    aois = load_aoi_polygons(args.aoi) if args.aoi else None
    annotations_dir = Path(args.annotations) if args.annotations else None
    file_detections = (
        group_by_scene(read_detections(args.detections_in)) if detector == "file" else None
    )

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    def safe_process(scene: Scene):
        try:
            return _process_scene(scene, params, aois, annotations_dir, file_detections), None
        except Exception as exc:  # scene-scoped failure; the batch continues
            return None, f"{type(exc).__name__}: {exc}"

    workers = _worker_count(len(scenes))
    if scenes:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(safe_process, scenes))
    else:
        results = []

    all_records: list[CountRecord] = []
    detection_pairs: list[tuple[str, Detection]] = []
    errors: list[tuple[str, str]] = []
    for scene, (outcome, error) in zip(scenes, results):
        if error is not None:
            errors.append((scene.scene_id, error))
            continue
        merged, records = outcome
        all_records.extend(records)
        detection_pairs.extend((scene.scene_id, d) for d in merged)

    metadata = run_metadata(
        "count",
        params,
        ("detector", "tile_size", "tile_stride", "nms_iou", "box_size", "seed"),
    )
    metadata["aoi"] = args.aoi if args.aoi else "whole-scene"
    write_counts_csv(out_dir / "counts.csv", all_records, metadata, errors)
    write_detections(out_dir / "detections.jsonl", detection_pairs)

    for scene_id, message in errors:
        print(f"error: scene {scene_id}: {message}", file=sys.stderr)
    print(
        f"counted {len(all_records)} scene/aoi pairs over {len(scenes) - len(errors)} scenes "
        f"-> {out_dir / 'counts.csv'}"
    )
    if scenes and len(errors) == len(scenes):
        print("error: every scene failed", file=sys.stderr)
        return 1
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    params = resolve_params(args)
    locations = parse_locations(args.locations)
    scenes = [s for s in parse_manifest(args.manifest, locations) if not s.grayscale]
    detections = group_by_scene(read_detections(args.detections_in))
    annotations_dir = Path(args.annotations)

    rows = []
    skipped: list[tuple[str, str]] = []
    for scene in scenes:
        try:
            truth = _scene_truth(scene, annotations_dir, params["box_size"])
        except FileNotFoundError as exc:
            skipped.append((scene.scene_id, str(exc)))
            continue
        predictions = detections.get(scene.scene_id, [])
        rows.append(
            evaluate_scene(scene.scene_id, predictions, truth.boxes, params["match_iou"])
        )

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    metadata = run_metadata("eval", params, ("match_iou", "box_size"))
    report_rows = rows + ([aggregate_rows(rows)] if rows else [])
    write_evaluation_report(out_dir / "evaluation.csv", report_rows, metadata, skipped)

    for scene_id, reason in skipped:
        print(f"skipped scene {scene_id}: {reason}", file=sys.stderr)
    print(f"evaluated {len(rows)} scenes -> {out_dir / 'evaluation.csv'}")
    return 0


def cmd_trend(args: argparse.Namespace) -> int:
    records = read_counts_csv(args.counts)
    report = change_report(records, args.year_a, args.year_b)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    metadata = {
        "tool": f"overcount {TOOL_VERSION}",
        "command": "trend",
        "counts": args.counts,
        "year_a": args.year_a,
        "year_b": args.year_b,
    }
    write_trend_csv(out_dir / "trend.csv", report, metadata)
    write_trend_json(out_dir / "trend.json", report, metadata)
    render_trend_figure(report, out_dir / "trend.png")

    print(
        f"overall change {report.overall_change_ratio:+.2%} across {len(report.rows)} "
        f"locations ({len(report.skipped)} skipped) -> {out_dir / 'trend.csv'}"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="overcount",
        description="Count vehicles in overhead imagery and estimate travel-demand change.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="flat key=value config file; CLI flags override it")
        p.add_argument("--out-dir", default=".", help="directory for output files")

    count = sub.add_parser("count", help="tile scenes, detect vehicles, and count them per area")
    count.add_argument("--manifest", required=True, help="scene manifest CSV")
    count.add_argument("--locations", required=True, help="location registry CSV")
    count.add_argument("--aoi", help="GeoJSON polygon file of counting areas (default: whole scene)")
    count.add_argument(
        "--detector",
        choices=["blob", "oracle", "file"],
        help="detection source (default: blob)",
    )
    count.add_argument("--detections-in", help="interchange file, required with --detector file")
    count.add_argument(
        "--annotations",
        help="directory of <scene_id>.txt center points, required with --detector oracle",
    )
    count.add_argument("--tile-size", dest="tile_size", type=int, help="tile edge in pixels (default 256)")
    count.add_argument("--tile-stride", dest="tile_stride", type=int, help="tile stride in pixels (default 192)")
    count.add_argument("--nms-iou", dest="nms_iou", type=float, help="duplicate-suppression IoU (default 0.3)")
    count.add_argument("--box-size", dest="box_size", type=int, help="annotation box edge in pixels (default 32)")
    count.add_argument("--seed", type=int, help="seed recorded in run metadata (default 0)")
    add_common(count)
    count.set_defaults(func=cmd_count)

    evaluate = sub.add_parser("eval", help="score an interchange file against annotations")
    evaluate.add_argument("--manifest", required=True, help="scene manifest CSV")
    evaluate.add_argument("--locations", required=True, help="location registry CSV")
    evaluate.add_argument(
        "--annotations", required=True, help="directory of <scene_id>.txt center points"
    )
    evaluate.add_argument("--detections-in", required=True, help="interchange file to score")
    evaluate.add_argument("--match-iou", dest="match_iou", type=float, help="matching IoU (default 0.25)")
    evaluate.add_argument("--box-size", dest="box_size", type=int, help="annotation box edge in pixels (default 32)")
    add_common(evaluate)
    evaluate.set_defaults(func=cmd_eval)

    trend = sub.add_parser("trend", help="year-over-year change report from a counts CSV")
    trend.add_argument("--counts", required=True, help="counts CSV produced by the count command")
    trend.add_argument("--year-a", dest="year_a", type=int, required=True, help="earlier year")
    trend.add_argument("--year-b", dest="year_b", type=int, required=True, help="later year")
    add_common(trend)
    trend.set_defaults(func=cmd_trend)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except NoDataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
