"""Score detections against ground truth.

Two views of quality are reported side by side: detection-level
precision/recall/F1 from greedy IoU matching, and count-level accuracy.
Neither is privileged; which one a published "accuracy" figure means is
often unstated, so both appear in every report row.

Report contract: CSV with header
`scene_id,tp,fp,fn,precision,recall,f1,pred_count,true_count,count_accuracy`.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .detection import Detection
from .geometry import PixelBox, iou

EVALUATION_FIELDS = (
    "scene_id",
    "tp",
    "fp",
    "fn",
    "precision",
    "recall",
    "f1",
    "pred_count",
    "true_count",
    "count_accuracy",
)

AGGREGATE_SCENE_ID = "aggregate"


@dataclass(frozen=True)
class MatchResult:
    true_positives: int
    false_positives: int
    false_negatives: int
    pairs: tuple[tuple[int, int, float], ...]  # (prediction index, truth index, iou)


def match(
    predictions: Sequence[Detection],
    truths: Sequence[PixelBox],
    iou_threshold: float = 0.25,
) -> MatchResult:
    """Greedily match predictions to truths at an IoU threshold.

    Predictions are visited in score-descending order (coordinate order
    breaks ties); each claims the still-unclaimed truth with the highest
    IoU at or above the threshold. Every prediction and truth ends up in at
    most one pair, so TP + FP = #predictions and TP + FN = #truths.
    """
    if not 0.0 < iou_threshold <= 1.0:
        raise ValueError(f"iou_threshold must be in (0, 1], got {iou_threshold}")

    def pred_key(i: int):
        b = predictions[i].box
        return (-predictions[i].score, b.x_min, b.y_min, b.x_max, b.y_max)

    def truth_key(j: int):
        t = truths[j]
        return (t.x_min, t.y_min, t.x_max, t.y_max)

    unclaimed = set(range(len(truths)))
    pairs: list[tuple[int, int, float]] = []
    for i in sorted(range(len(predictions)), key=pred_key):
        box = predictions[i].box
        best_j = -1
        best_iou = 0.0
        for j in unclaimed:
            value = iou(box, truths[j])
            if value < iou_threshold:
                continue
            if (
                best_j < 0
                or value > best_iou
                or (value == best_iou and truth_key(j) < truth_key(best_j))
            ):
                best_j = j
                best_iou = value
        if best_j >= 0:
            unclaimed.remove(best_j)
            pairs.append((i, best_j, best_iou))

    tp = len(pairs)
    return MatchResult(
        true_positives=tp,
        false_positives=len(predictions) - tp,
        false_negatives=len(truths) - tp,
        pairs=tuple(pairs),
    )


def prf(result: MatchResult) -> tuple[float, float, float]:
    """Precision, recall, and F1 with empty-scene conventions.

    0/0 ratios resolve to 1.0 for precision and recall (an empty lot
    correctly reported empty is a success) and to 0.0 for F1.
    """
    tp = result.true_positives
    fp = result.false_positives
    fn = result.false_negatives
    precision = tp / (tp + fp) if tp + fp > 0 else 1.0
    recall = tp / (tp + fn) if tp + fn > 0 else 1.0
    f1 = 2 * tp / (2 * tp + fp + fn) if 2 * tp + fp + fn > 0 else 0.0
    return precision, recall, f1


def count_accuracy(predicted_count: int, truth_count: int) -> float:
    """Count-level accuracy: 1 - |predicted - truth| / truth, clamped at 0.

    An empty scene counts as fully accurate only when predicted empty.
    """
    if truth_count < 0:
        raise ValueError(f"truth_count must be >= 0, got {truth_count}")
    if truth_count == 0:
        return 1.0 if predicted_count == 0 else 0.0
    return max(0.0, 1.0 - abs(predicted_count - truth_count) / truth_count)


@dataclass(frozen=True)
class EvaluationRow:
    scene_id: str
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f1: float
    pred_count: int
    true_count: int
    count_accuracy: float


def evaluate_scene(
    scene_id: str,
    predictions: Sequence[Detection],
    truths: Sequence[PixelBox],
    iou_threshold: float = 0.25,
) -> EvaluationRow:
    result = match(predictions, truths, iou_threshold)
    precision, recall, f1 = prf(result)
    return EvaluationRow(
        scene_id=scene_id,
        tp=result.true_positives,
        fp=result.false_positives,
        fn=result.false_negatives,
        precision=precision,
        recall=recall,
        f1=f1,
        pred_count=len(predictions),
        true_count=len(truths),
        count_accuracy=count_accuracy(len(predictions), len(truths)),
    )


def aggregate_rows(rows: Sequence[EvaluationRow]) -> EvaluationRow:
    """Sum matching counts over scenes and recompute the derived metrics."""
    tp = sum(r.tp for r in rows)
    fp = sum(r.fp for r in rows)
    fn = sum(r.fn for r in rows)
    pred_count = sum(r.pred_count for r in rows)
    true_count = sum(r.true_count for r in rows)
    result = MatchResult(tp, fp, fn, ())
    precision, recall, f1 = prf(result)
    return EvaluationRow(
        scene_id=AGGREGATE_SCENE_ID,
        tp=tp,
        fp=fp,
        fn=fn,
        precision=precision,
        recall=recall,
        f1=f1,
        pred_count=pred_count,
        true_count=true_count,
        count_accuracy=count_accuracy(pred_count, true_count),
    )


def write_evaluation_report(
    path: str | Path,
    rows: Iterable[EvaluationRow],
    metadata: Mapping[str, object] = (),
    skipped: Sequence[tuple[str, str]] = (),
) -> None:
    """Write the evaluation CSV; metadata and skipped scenes go in # comments."""
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        for key, value in dict(metadata).items():
            handle.write(f"# {key}={value}\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(EVALUATION_FIELDS)
        for row in rows:
            writer.writerow(
                [
                    row.scene_id,
                    row.tp,
                    row.fp,
                    row.fn,
                    row.precision,
                    row.recall,
                    row.f1,
                    row.pred_count,
                    row.true_count,
                    row.count_accuracy,
                ]
            )
        for scene_id, reason in skipped:
            handle.write(f"# skipped scene_id={scene_id} reason={_oneline(reason)}\n")


def _oneline(text: str) -> str:
    return " ".join(str(text).split())
