"""Scoring predicted heatmaps against human annotations.

Metrics per scene and map stage:

* binary detection: a scene is risky iff a map has a pixel strictly above
  ``tau_detect``.  The default mode only looks at the map of the annotated
  risk type; the any-type mode is reported alongside.
* type classification: the type whose map peaks highest above the threshold.
* centroid alignment: squared distance ``d`` between the intensity-weighted
  centroids of prediction and annotation, scored as ``1 / (d + eps_d)``.
* IoU of both maps binarized at ``tau_iou`` (pixels ``>= tau_iou``).
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from riskprop import pnm
from riskprop.accident_db import DEFAULT_TYPES
from riskprop.errors import InputError, UndefinedCentroidError
from riskprop.heatmap import RiskMap

logger = logging.getLogger(__name__)

DEFAULT_TAU_DETECT = 0.5
DEFAULT_TAU_IOU = 0.5
DEFAULT_EPS_D = 1.0
SWEEP_THRESHOLDS = (0.3, 0.5, 0.7)
NONE_LABEL = "none"


@dataclass(frozen=True)
class GroundTruth:
    scene_id: str
    risk_present: bool
    risk_type: str | None = None
    heatmap: np.ndarray | None = None

    def __post_init__(self) -> None:
        if not self.risk_present and self.risk_type is not None:
            raise InputError(f"scene {self.scene_id!r}: risk_type given but risk_present is false")


def load_ground_truth(path: str | Path, types: Sequence[str] = DEFAULT_TYPES) -> GroundTruth:
    """Read a per-scene annotation file.

    Fields: ``risk_present`` (bool), ``risk_type`` (type name or null) and
    ``heatmap_path`` (graymap, relative to the annotation file; optional
    when no risk is present).  ``scene_id`` defaults to the file stem.
    """
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc.msg})") from None
    if not isinstance(data, dict) or not isinstance(data.get("risk_present"), bool):
        raise InputError(f"{path}: 'risk_present' must be a boolean")
    risk_type = data.get("risk_type")
    if risk_type in ("", NONE_LABEL):
        risk_type = None
    if risk_type is not None and risk_type not in types:
        raise InputError(f"{path}: unknown risk_type {risk_type!r}")
    heatmap = None
    if data.get("heatmap_path"):
        heatmap = pnm.read_pgm(path.parent / data["heatmap_path"])
    scene_id = data.get("scene_id", path.stem)
    try:
        return GroundTruth(scene_id, data["risk_present"], risk_type, heatmap)
    except InputError as exc:
        raise InputError(f"{path}: {exc}") from None


def _values(x: RiskMap | np.ndarray) -> np.ndarray:
    return x.values if isinstance(x, RiskMap) else np.asarray(x, dtype=np.float64)


def _check_tau(tau: float) -> None:
    if not 0.0 < tau < 1.0:
        raise ValueError(f"detection threshold must lie in (0, 1), got {tau}")


def detect_binary(
    maps: Mapping[str, RiskMap | np.ndarray],
    tau_detect: float = DEFAULT_TAU_DETECT,
    restrict_to: str | None = None,
) -> bool:
    """True iff some considered map has a pixel strictly above ``tau_detect``.

    With ``restrict_to`` only that accident type's map is considered.
    """
    _check_tau(tau_detect)
    if restrict_to is not None:
        maps = {restrict_to: maps[restrict_to]} if restrict_to in maps else {}
    return any(_values(m).size and float(_values(m).max()) > tau_detect for m in maps.values())


def classify_type(
    maps: Mapping[str, RiskMap | np.ndarray],
    tau_detect: float = DEFAULT_TAU_DETECT,
    types: Sequence[str] = DEFAULT_TYPES,
) -> str | None:
    """Type with the highest peak above the threshold, or None.

    Ties go to the type listed first in ``types``.
    """
    _check_tau(tau_detect)
    best, best_peak = None, tau_detect
    for a in types:
        if a not in maps:
            continue
        v = _values(maps[a])
        peak = float(v.max()) if v.size else 0.0
        if peak > best_peak:
            best, best_peak = a, peak
    return best


def centroid(raster: RiskMap | np.ndarray) -> tuple[float, float]:
    """Intensity-weighted mean ``(x, y)`` pixel coordinate."""
    v = _values(raster)
    mass = float(v.sum())
    if not mass > 0:
        raise UndefinedCentroidError("raster has no positive mass")
    ys, xs = np.indices(v.shape)
    return float((xs * v).sum() / mass), float((ys * v).sum() / mass)


def centroid_score(
    pred: RiskMap | np.ndarray, gt: RiskMap | np.ndarray, eps_d: float = DEFAULT_EPS_D
) -> tuple[float, float]:
    """Return ``(d, 1 / (d + eps_d))`` with ``d`` the squared centroid distance."""
    p, g = _values(pred), _values(gt)
    if p.shape != g.shape:
        raise InputError(f"shape mismatch: prediction {p.shape} vs ground truth {g.shape}")
    (px, py), (gx, gy) = centroid(p), centroid(g)
    d = (px - gx) ** 2 + (py - gy) ** 2
    return d, 1.0 / (d + eps_d)


def iou(pred: RiskMap | np.ndarray, gt: RiskMap | np.ndarray, tau_iou: float = DEFAULT_TAU_IOU) -> float:
    """IoU of the two maps thresholded at ``tau_iou``.

    Two empty masks score 1.0.
    """
    p, g = _values(pred), _values(gt)
    if p.shape != g.shape:
        raise InputError(f"shape mismatch: prediction {p.shape} vs ground truth {g.shape}")
    a, b = p >= tau_iou, g >= tau_iou
    union = int(np.logical_or(a, b).sum())
    if union == 0:
        return 1.0
    return int(np.logical_and(a, b).sum()) / union


@dataclass
class BinaryConfusion:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    def add(self, truth: bool, predicted: bool) -> None:
        if truth and predicted:
            self.tp += 1
        elif truth:
            self.fn += 1
        elif predicted:
            self.fp += 1
        else:
            self.tn += 1

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def accuracy(self) -> float | None:
        return (self.tp + self.tn) / self.total if self.total else None

    def to_dict(self) -> dict[str, Any]:
        return {"tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn, "accuracy": self.accuracy}


@dataclass
class SceneResult:
    scene_id: str
    stage: str
    risk_present: bool
    gt_type: str | None
    detected: dict[float, bool]
    detected_any: dict[float, bool]
    pred_type: dict[float, str | None]
    d: float | None = None
    score: float | None = None
    iou: float | None = None

    @property
    def sqrt_d(self) -> float | None:
        return None if self.d is None else math.sqrt(self.d)


@dataclass
class StageSummary:
    stage: str
    tau: float
    binary: BinaryConfusion
    binary_any: BinaryConfusion
    type_matrix: dict[str, dict[str, int]]
    mean_d: float | None
    mean_score: float | None
    mean_iou: float | None

    def to_dict(self) -> dict[str, Any]:
        return {
            "stage": self.stage,
            "tau_detect": self.tau,
            "binary": self.binary.to_dict(),
            "binary_any_type": self.binary_any.to_dict(),
            "type_confusion": self.type_matrix,
            "mean_centroid_d": self.mean_d,
            "mean_centroid_score": self.mean_score,
            "mean_iou": self.mean_iou,
        }


@dataclass
class EvaluationReport:
    types: tuple[str, ...]
    thresholds: tuple[float, ...]
    summaries: list[StageSummary] = field(default_factory=list)
    scenes: list[SceneResult] = field(default_factory=list)
    skipped: list[str] = field(default_factory=list)
    missing_predictions: list[str] = field(default_factory=list)

    def summary(self, stage: str, tau: float | None = None) -> StageSummary:
        for s in self.summaries:
            if s.stage == stage and (tau is None or s.tau == tau):
                return s
        raise KeyError((stage, tau))

    def to_dict(self) -> dict[str, Any]:
        return {
            "types": list(self.types),
            "thresholds": list(self.thresholds),
            "n_evaluated": len({s.scene_id for s in self.scenes}),
            "skipped": {"count": len(self.skipped), "scene_ids": self.skipped},
            "missing_predictions": {
                "count": len(self.missing_predictions),
                "scene_ids": self.missing_predictions,
            },
            "summaries": [s.to_dict() for s in self.summaries],
            "scenes": [
                {
                    "scene_id": r.scene_id,
                    "stage": r.stage,
                    "risk_present": r.risk_present,
                    "gt_type": r.gt_type,
                    "detected": {str(t): v for t, v in r.detected.items()},
                    "detected_any_type": {str(t): v for t, v in r.detected_any.items()},
                    "pred_type": {str(t): v for t, v in r.pred_type.items()},
                    "centroid_d": r.d,
                    "centroid_sqrt_d": r.sqrt_d,
                    "centroid_score": r.score,
                    "iou": r.iou,
                }
                for r in self.scenes
            ],
        }

    def to_rows(self) -> list[tuple[str, str, str, str, Any]]:
        """Flat ``(scene_id, stage, tau_detect, metric, value)`` rows.

        Corpus aggregates use the scene id ``__all__``; threshold-free
        metrics have an empty ``tau_detect``.
        """
        rows: list[tuple[str, str, str, str, Any]] = []
        for s in self.summaries:
            tau = str(s.tau)
            for name, cm in (("binary", s.binary), ("binary_any_type", s.binary_any)):
                for key, value in cm.to_dict().items():
                    rows.append(("__all__", s.stage, tau, f"{name}_{key}", value))
            for gt_label, row in s.type_matrix.items():
                for pred_label, n in row.items():
                    rows.append(("__all__", s.stage, tau, f"type_{gt_label}_as_{pred_label}", n))
        for stage in dict.fromkeys(s.stage for s in self.summaries):
            first = self.summary(stage)
            rows.append(("__all__", stage, "", "mean_centroid_d", first.mean_d))
            rows.append(("__all__", stage, "", "mean_centroid_score", first.mean_score))
            rows.append(("__all__", stage, "", "mean_iou", first.mean_iou))
        for r in self.scenes:
            for t in self.thresholds:
                rows.append((r.scene_id, r.stage, str(t), "detected", r.detected[t]))
                rows.append((r.scene_id, r.stage, str(t), "detected_any_type", r.detected_any[t]))
                rows.append((r.scene_id, r.stage, str(t), "pred_type", r.pred_type[t] or NONE_LABEL))
            rows.append((r.scene_id, r.stage, "", "centroid_d", r.d))
            rows.append((r.scene_id, r.stage, "", "centroid_sqrt_d", r.sqrt_d))
            rows.append((r.scene_id, r.stage, "", "centroid_score", r.score))
            rows.append((r.scene_id, r.stage, "", "iou", r.iou))
        return rows

    def dumps_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def dumps_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["scene_id", "stage", "tau_detect", "metric", "value"])
        for row in self.to_rows():
            writer.writerow(["" if v is None else v for v in row])
        return buf.getvalue()

    def write(self, json_path: str | Path, csv_path: str | Path | None = None) -> None:
        pnm.atomic_write_text(json_path, self.dumps_json())
        if csv_path is not None:
            pnm.atomic_write_text(csv_path, self.dumps_csv())


def _mean(values: Iterable[float | None]) -> float | None:
    vals = [v for v in values if v is not None]
    return sum(vals) / len(vals) if vals else None


def _score_scene(
    scene_id: str,
    stage: str,
    maps: Mapping[str, RiskMap | np.ndarray],
    gt: GroundTruth,
    thresholds: Sequence[float],
    types: Sequence[str],
    tau_iou: float,
    eps_d: float,
) -> SceneResult:
    restrict = gt.risk_type if gt.risk_type in maps else None
    res = SceneResult(
        scene_id=scene_id,
        stage=stage,
        risk_present=gt.risk_present,
        gt_type=gt.risk_type,
        detected={t: detect_binary(maps, t, restrict) for t in thresholds},
        detected_any={t: detect_binary(maps, t) for t in thresholds},
        pred_type={t: classify_type(maps, t, types) for t in thresholds},
    )
    if gt.risk_type is not None and gt.heatmap is not None and gt.risk_type in maps:
        pred = _values(maps[gt.risk_type])
        if pred.shape != gt.heatmap.shape:
            raise InputError(
                f"scene {scene_id!r}: ground-truth heatmap {gt.heatmap.shape} "
                f"does not match prediction {pred.shape}"
            )
        try:
            res.d, res.score = centroid_score(pred, gt.heatmap, eps_d)
        except UndefinedCentroidError:
            logger.warning("scene %s (%s): empty map, centroid metric skipped", scene_id, stage)
        res.iou = iou(pred, gt.heatmap, tau_iou)
    return res


def evaluate_corpus(
    scene_ids: Iterable[str],
    predictions: Mapping[str, Mapping[str, Mapping[str, RiskMap | np.ndarray]]],
    ground_truths: Mapping[str, GroundTruth],
    thresholds: Sequence[float] = (DEFAULT_TAU_DETECT,),
    tau_iou: float = DEFAULT_TAU_IOU,
    eps_d: float = DEFAULT_EPS_D,
    types: Sequence[str] = DEFAULT_TYPES,
) -> EvaluationReport:
    """Aggregate all metrics over a corpus.

    ``predictions[scene_id][stage][accident_type]`` holds the maps.  Every
    stage present in the predictions gets its own summary rows.  Scenes
    without ground truth are skipped with a warning; scenes with ground
    truth but no predictions are listed as missing.
    """
    for t in thresholds:
        _check_tau(t)
    ids = sorted(set(scene_ids))
    report = EvaluationReport(tuple(types), tuple(thresholds))
    stages = sorted({st for sid in ids if sid in predictions for st in predictions[sid]}) or ["propagated"]

    evaluated = []
    for sid in ids:
        if sid not in ground_truths:
            logger.warning("scene %s: no ground truth, skipped", sid)
            report.skipped.append(sid)
        elif sid not in predictions:
            logger.warning("scene %s: no predictions, skipped", sid)
            report.missing_predictions.append(sid)
        else:
            evaluated.append(sid)

    labels = list(types) + [NONE_LABEL]
    for stage in stages:
        results = []
        for sid in evaluated:
            maps = predictions[sid].get(stage)
            if maps is None:
                logger.warning("scene %s: no %s maps", sid, stage)
                continue
            results.append(
                _score_scene(sid, stage, maps, ground_truths[sid], thresholds, types, tau_iou, eps_d)
            )
        report.scenes.extend(results)
        for t in thresholds:
            binary, binary_any = BinaryConfusion(), BinaryConfusion()
            matrix = {g: {p: 0 for p in labels} for g in labels}
            for r in results:
                binary.add(r.risk_present, r.detected[t])
                binary_any.add(r.risk_present, r.detected_any[t])
                matrix[r.gt_type or NONE_LABEL][r.pred_type[t] or NONE_LABEL] += 1
            report.summaries.append(
                StageSummary(
                    stage,
                    t,
                    binary,
                    binary_any,
                    matrix,
                    _mean(r.d for r in results),
                    _mean(r.score for r in results),
                    _mean(r.iou for r in results),
                )
            )
    return report
