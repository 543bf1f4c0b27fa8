"""Evaluation: semantic accuracy / per-class IoU / mIoU, geometric
(occupied-vs-free) precision / recall / IoU, and the trail-rate diagnostic.

All scores run over valid ground-truth voxels only.  The Free class takes part
in mIoU like any other class.  By default the mean skips classes absent from
both grids (toy scenes stay meaningful); ``miou_mode="fixed"`` divides by all
11 classes instead.

Zero-denominator cases are explicit, never silent NaN: no evaluated voxels
raises MetricUndefinedError; an all-free prediction gets precision 0 by
convention; both grids all-free makes the geometric triple vacuously (1, 1, 1)
with a warning flag.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from semvox.errors import MetricUndefinedError, SpecMismatchError
from semvox.grid import LabelGrid
from semvox.labels import CLASS_NAMES, N_CLASSES, UNLABELED_ID, RemappedLabel

#: Classes whose presence where the reference says Free constitutes a trail.
DYNAMIC_CLASSES = (int(RemappedLabel.PEDESTRIAN), int(RemappedLabel.VEHICLES))

#: Index of the extra "prediction invalid" column in the confusion matrix.
PRED_INVALID_COL = N_CLASSES


@dataclass
class ConfusionMatrix:
    """Tallies over valid ground-truth voxels.

    ``counts`` is (K, K+1) int64: rows are ground-truth classes, columns are
    predicted classes, and the extra last column counts voxels the prediction
    left invalid (never a match).
    """

    counts: np.ndarray
    evaluated_voxels: int

    @property
    def class_block(self) -> np.ndarray:
        return self.counts[:, :N_CLASSES]

    @property
    def pred_invalid(self) -> np.ndarray:
        return self.counts[:, PRED_INVALID_COL]

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(self.counts + other.counts,
                               self.evaluated_voxels + other.evaluated_voxels)


def _check_specs(pred: LabelGrid, gt: LabelGrid) -> None:
    if pred.spec != gt.spec:
        raise SpecMismatchError(f"grid specs differ: {pred.spec} vs {gt.spec}")


def confusion(pred: LabelGrid, gt: LabelGrid) -> ConfusionMatrix:
    """Confusion tallies over voxels where the ground truth is valid."""
    _check_specs(pred, gt)
    mask = gt.valid
    g = gt.labels[mask].astype(np.int64)
    p = pred.labels[mask].astype(np.int64)
    p = np.where(p == UNLABELED_ID, PRED_INVALID_COL, p)
    flat = np.bincount(g * (N_CLASSES + 1) + p, minlength=N_CLASSES * (N_CLASSES + 1))
    counts = flat.reshape(N_CLASSES, N_CLASSES + 1)
    return ConfusionMatrix(counts, evaluated_voxels=int(mask.sum()))


def semantic_scores(cm: ConfusionMatrix, miou_mode: str = "present"):
    """(per_class_iou, miou, accuracy) from a confusion matrix.

    IoU_k = TP_k / (TP_k + FP_k + FN_k).  Classes with an empty union report
    IoU 0.0 and are excluded from the mean in "present" mode; "fixed" mode
    always divides by the 11 classes.
    """
    if cm.evaluated_voxels == 0:
        raise MetricUndefinedError("no evaluated voxels: metrics undefined")
    if miou_mode not in ("present", "fixed"):
        raise ValueError(f"unknown miou_mode: {miou_mode}")
    block = cm.class_block
    tp = np.diag(block).astype(np.float64)
    row = cm.counts.sum(axis=1).astype(np.float64)        # gt totals (incl. invalid col)
    col = block.sum(axis=0).astype(np.float64)            # prediction totals
    union = row + col - tp
    present = union > 0
    iou = np.zeros(N_CLASSES)
    iou[present] = tp[present] / union[present]
    if miou_mode == "present":
        miou = float(iou[present].mean()) if present.any() else 0.0
    else:
        miou = float(iou.sum() / N_CLASSES)
    accuracy = float(tp.sum() / cm.evaluated_voxels)
    return iou, miou, accuracy


class GeometricScores(NamedTuple):
    precision: float
    recall: float
    iou: float
    vacuous: bool = False


def geometric_tallies(pred: LabelGrid, gt: LabelGrid) -> tuple:
    """(TP, FP, FN) of the binary occupied class over valid ground-truth voxels.
    Summable across frames."""
    _check_specs(pred, gt)
    mask = gt.valid
    g_occ = gt.labels[mask] != int(RemappedLabel.FREE)
    p_lab = pred.labels[mask]
    p_occ = (p_lab != int(RemappedLabel.FREE)) & (p_lab != UNLABELED_ID)
    tp = int((g_occ & p_occ).sum())
    fp = int((~g_occ & p_occ).sum())
    fn = int((g_occ & ~p_occ).sum())
    return tp, fp, fn


def geometric_from_tallies(tp: int, fp: int, fn: int) -> GeometricScores:
    if tp + fp + fn == 0:
        return GeometricScores(1.0, 1.0, 1.0, vacuous=True)
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    iou = tp / (tp + fp + fn)
    return GeometricScores(precision, recall, iou)


def geometric_scores(pred: LabelGrid, gt: LabelGrid) -> GeometricScores:
    """Binary occupancy scores over valid ground-truth voxels.

    Occupied means any valid non-Free label (a prediction left invalid is not
    occupied).  With no occupied voxels on either side the result is vacuously
    (1, 1, 1) with the flag set; an all-free prediction against occupied truth
    gets precision 0 by convention.
    """
    return geometric_from_tallies(*geometric_tallies(pred, gt))


def trace_tallies(aggregate: LabelGrid, gt: LabelGrid) -> tuple:
    """(trail voxels, jointly-valid reference-Free voxels). Summable across frames."""
    _check_specs(aggregate, gt)
    both = aggregate.valid & gt.valid
    gt_free = both & (gt.labels == int(RemappedLabel.FREE))
    denom = int(gt_free.sum())
    num = int((gt_free & np.isin(aggregate.labels, DYNAMIC_CLASSES)).sum())
    return num, denom


def trace_rate(aggregate: LabelGrid, gt: LabelGrid) -> float:
    """Fraction of jointly-valid reference-Free voxels that the aggregate
    labeled with a dynamic class (Pedestrian or Vehicles): the trail metric."""
    num, denom = trace_tallies(aggregate, gt)
    if denom == 0:
        raise MetricUndefinedError("no jointly-valid free voxels: trace rate undefined")
    return num / denom


@dataclass
class MetricsReport:
    """All scores for one prediction/reference pair (or an aggregate of pairs)."""

    per_class_iou: list
    miou: float
    accuracy: float
    precision: float
    recall: float
    geometric_iou: float
    trace_rate: Optional[float]
    evaluated_voxels: int
    classes_present: list
    flags: list = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {
            "miou": self.miou,
            "accuracy": self.accuracy,
            "per_class_iou": {CLASS_NAMES[i]: self.per_class_iou[i] for i in range(N_CLASSES)},
            "geometric": {"precision": self.precision, "recall": self.recall,
                          "iou": self.geometric_iou},
            "trace_rate": self.trace_rate,
            "evaluated_voxels": self.evaluated_voxels,
            "classes_present": [CLASS_NAMES[i] for i in self.classes_present],
            "flags": list(self.flags),
        }


def report_from_parts(cm: ConfusionMatrix, geo_tallies: tuple, trail_tallies: tuple,
                      miou_mode: str = "present") -> MetricsReport:
    """Assemble a report from summable parts (confusion, (TP, FP, FN),
    (trails, free-denominator)); used for both single frames and aggregates."""
    iou, miou, acc = semantic_scores(cm, miou_mode=miou_mode)
    geo = geometric_from_tallies(*geo_tallies)
    flags = []
    if geo.vacuous:
        flags.append("geometric_vacuous")
    num, denom = trail_tallies
    tr = num / denom if denom > 0 else None
    if tr is None:
        flags.append("trace_rate_undefined")
    block = cm.class_block
    union = cm.counts.sum(axis=1) + block.sum(axis=0) - np.diag(block)
    present = [int(i) for i in np.nonzero(union > 0)[0]]
    return MetricsReport(
        per_class_iou=[float(v) for v in iou],
        miou=miou, accuracy=acc,
        precision=geo.precision, recall=geo.recall, geometric_iou=geo.iou,
        trace_rate=tr, evaluated_voxels=cm.evaluated_voxels,
        classes_present=present, flags=flags,
    )


def build_report(pred: LabelGrid, gt: LabelGrid, miou_mode: str = "present") -> MetricsReport:
    return report_from_parts(confusion(pred, gt), geometric_tallies(pred, gt),
                             trace_tallies(pred, gt), miou_mode=miou_mode)


def _pct(x: Optional[float]) -> str:
    return "  --  " if x is None else f"{100.0 * x:6.2f}"


def report_table(reports: dict) -> str:
    """Aligned text table, one row per named report: mIoU and Accuracy first,
    then the 11 class IoUs, then geometric Precision / Recall / IoU and the
    trail rate.  All values are percentages with two decimals."""
    headers = ["Method", "mIoU", "Accuracy", *CLASS_NAMES,
               "Precision", "Recall", "GeoIoU", "TraceRate"]
    rows = []
    for name, rep in reports.items():
        rows.append([name, _pct(rep.miou), _pct(rep.accuracy),
                     *[_pct(v) for v in rep.per_class_iou],
                     _pct(rep.precision), _pct(rep.recall), _pct(rep.geometric_iou),
                     _pct(rep.trace_rate)])
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h)
              for i, h in enumerate(headers)]
    lines = ["  ".join(h.rjust(widths[i]) for i, h in enumerate(headers))]
    for r in rows:
        lines.append("  ".join(v.rjust(widths[i]) for i, v in enumerate(r)))
    return "\n".join(lines) + "\n"


def report_json(reports: dict) -> str:
    return json.dumps({name: rep.to_json_dict() for name, rep in reports.items()},
                      indent=2) + "\n"
